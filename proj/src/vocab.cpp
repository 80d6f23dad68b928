#include "steerdial/vocab.hpp"

#include "steerdial/errors.hpp"

#include <cctype>

namespace steerdial {

std::vector<std::string> tokenize_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            words.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            words.emplace_back(1, static_cast<char>(c));
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return words;
}

Vocabulary::Vocabulary(const std::vector<std::string>& strategy_names) : strategy_count_(strategy_names.size()) {
    const char* reserved[] = {"<pad>", "<bos>", "<eos>", "<unk>", "<cls>", "<sep>"};
    for (const char* tok : reserved) {
        token_to_id_.emplace(tok, TokenId(id_to_token_.size()));
        id_to_token_.emplace_back(tok);
    }
    for (const std::string& name : strategy_names) {
        std::string marker = "[" + name + "]";
        token_to_id_.emplace(marker, TokenId(id_to_token_.size()));
        id_to_token_.push_back(std::move(marker));
    }
}

TokenId Vocabulary::add_token(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    TokenId id = TokenId(id_to_token_.size());
    token_to_id_.emplace(token, id);
    id_to_token_.push_back(token);
    return id;
}

TokenId Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
    if (id < 0 || std::size_t(id) >= id_to_token_.size()) throw InvalidTokenError(id, id_to_token_.size());
    return id_to_token_[std::size_t(id)];
}

bool Vocabulary::contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

TokenSequence Vocabulary::encode_words(const std::vector<std::string>& words) const {
    TokenSequence ids;
    ids.reserve(words.size());
    for (const std::string& w : words) ids.push_back(id_of(w));
    return ids;
}

std::string Vocabulary::decode(const TokenSequence& ids, bool skip_reserved) const {
    std::string out;
    for (TokenId id : ids) {
        if (skip_reserved && is_reserved(id)) continue;
        if (!out.empty()) out.push_back(' ');
        out += token_of(id);
    }
    return out;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens, std::size_t strategy_count) {
    if (tokens.size() < std::size_t(kFirstMarker) + strategy_count)
        throw FormatError("vocabulary shorter than its reserved block");
    Vocabulary v;
    v.strategy_count_ = strategy_count;
    v.id_to_token_ = tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) v.token_to_id_.emplace(tokens[i], TokenId(i));
    if (v.token_to_id_.size() != tokens.size()) throw FormatError("vocabulary contains duplicate tokens");
    return v;
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab) {
    return vocab.encode_words(tokenize_words(text));
}

}  // namespace steerdial
