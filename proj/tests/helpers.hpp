#pragma once

#include <string>
#include <vector>

#include "steerdial/corpus.hpp"
#include "steerdial/lm.hpp"
#include "steerdial/rng.hpp"
#include "steerdial/vocab.hpp"

namespace steerdial::testing {

inline std::vector<std::string> small_strategies() {
    return {"Question", "Providing Suggestions", "Self-disclosure", "Affirmation and Reassurance"};
}

inline Vocabulary small_vocab(std::size_t word_count, std::vector<std::string> strategies = small_strategies()) {
    Vocabulary vocab(strategies);
    for (std::size_t i = 0; i < word_count; ++i) vocab.add_token("w" + std::to_string(i));
    return vocab;
}

inline ModelConfig small_config(const Vocabulary& vocab, std::uint64_t seed, Index embedding = 5, Index hidden = 4,
                                Index enc_layers = 1, Index dec_layers = 1) {
    ModelConfig cfg;
    cfg.vocab_size = Index(vocab.size());
    cfg.embedding_dim = embedding;
    cfg.hidden_dim = hidden;
    cfg.encoder_layers = enc_layers;
    cfg.decoder_layers = dec_layers;
    cfg.strategy_count = Index(vocab.strategy_count());
    cfg.seed = seed;
    return cfg;
}

// Random example with a CLS-led input and a marker-led target.
inline TrainingExample random_example(Rng& rng, const Vocabulary& vocab, std::size_t max_input = 7,
                                      std::size_t max_target = 6) {
    const TokenId first_word = Vocabulary::kFirstMarker + TokenId(vocab.strategy_count());
    const auto word_count = std::uint64_t(TokenId(vocab.size()) - first_word);
    TrainingExample ex;
    ex.input.push_back(Vocabulary::kCls);
    const std::size_t in_len = 1 + std::size_t(rng.below(max_input));
    for (std::size_t i = 0; i < in_len; ++i) ex.input.push_back(first_word + TokenId(rng.below(word_count)));
    ex.gold_strategy.index = std::int32_t(rng.below(vocab.strategy_count()));
    ex.target.push_back(vocab.marker_id(ex.gold_strategy.index));
    const std::size_t tgt_len = 1 + std::size_t(rng.below(max_target));
    for (std::size_t i = 0; i < tgt_len; ++i) ex.target.push_back(first_word + TokenId(rng.below(word_count)));
    ex.target.push_back(Vocabulary::kEos);
    ex.dialogue_id = "t";
    ex.turn_index = 1;
    return ex;
}

}  // namespace steerdial::testing
