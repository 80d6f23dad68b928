#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace steerdial {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

// Word-level tokenizer rule shared by the corpus and the evaluator:
// lowercase ASCII, punctuation characters become single-character tokens,
// whitespace separates the rest.
std::vector<std::string> tokenize_words(const std::string& text);

// Token <-> id bijection. Reserved ids occupy the lowest indices in this
// fixed order: PAD=0, BOS=1, EOS=2, UNK=3, CLS=4, SEP=5, then one strategy
// marker per strategy-set entry, then corpus tokens.
class Vocabulary {
  public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kBos = 1;
    static constexpr TokenId kEos = 2;
    static constexpr TokenId kUnk = 3;
    static constexpr TokenId kCls = 4;
    static constexpr TokenId kSep = 5;
    static constexpr TokenId kFirstMarker = 6;

    Vocabulary() = default;
    explicit Vocabulary(const std::vector<std::string>& strategy_names);

    // Appends a non-reserved token; returns its id (existing id if known).
    TokenId add_token(const std::string& token);

    TokenId id_of(const std::string& token) const;  // kUnk when absent
    const std::string& token_of(TokenId id) const;
    bool contains(const std::string& token) const;

    std::size_t size() const { return id_to_token_.size(); }
    std::size_t strategy_count() const { return strategy_count_; }
    TokenId marker_id(std::int32_t strategy_index) const { return kFirstMarker + strategy_index; }
    bool is_marker(TokenId id) const { return id >= kFirstMarker && id < kFirstMarker + TokenId(strategy_count_); }
    bool is_reserved(TokenId id) const { return id < kFirstMarker + TokenId(strategy_count_); }

    TokenSequence encode_words(const std::vector<std::string>& words) const;
    std::string decode(const TokenSequence& ids, bool skip_reserved = true) const;

    // Flat token list in id order (used by checkpoints and the vocab file).
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    // Rebuilds the bijection from a token list written by tokens().
    static Vocabulary from_tokens(const std::vector<std::string>& tokens, std::size_t strategy_count);

  private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, TokenId> token_to_id_;
    std::size_t strategy_count_ = 0;
};

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab);

}  // namespace steerdial
