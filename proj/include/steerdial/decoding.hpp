#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "steerdial/corpus.hpp"
#include "steerdial/lm.hpp"
#include "steerdial/math.hpp"
#include "steerdial/rng.hpp"
#include "steerdial/strategy.hpp"

namespace steerdial {

struct DecodingConfig {
    enum class Mode { Greedy, TopKSample };
    Mode mode = Mode::Greedy;
    Index sample_k = 10;
    Index fudge_candidates = 32;
    Scalar lambda = 1.0;
    Index max_length = 64;
    std::uint64_t seed = 1;
};

struct StepLog {
    std::vector<TokenId> candidates;
    Vector lm_probs;     // over candidates
    Vector disc_probs;   // p(strategy | prefix + candidate), empty without a discriminator
    Vector final_probs;  // over candidates, after rescoring
};

struct GenerationResult {
    TokenSequence tokens;  // marker and EOS stripped
    StrategyLabel strategy_used;
    std::vector<StepLog> per_step;  // filled when tracing is requested
};

// Indices of the k largest entries, ordered by (value desc, index asc).
std::vector<Index> top_k_indices(const Vector& values, Index k);

// FUDGE reweighting over the top-k_f LM candidates:
//   score(c) = log lm(c) + lambda * log p_disc(strategy | prefix + c)
// softmax-normalized over the candidate set, zero elsewhere. lambda = 0
// reduces to restricting and renormalizing the LM distribution (returned
// unchanged when the candidate set covers the whole vocabulary).
Vector fudge_rescore(const Vector& lm_dist, const TokenSequence& prefix, StrategyLabel strategy,
                     const PrefixStrategyScorer& disc, Index k_f, Scalar lambda);

// As above, but starting from an already-advanced scorer state instead of
// replaying the prefix.
Vector fudge_rescore_at(const Vector& lm_dist, const Vector& prefix_state, StrategyLabel strategy,
                        const PrefixStrategyScorer& disc, Index k_f, Scalar lambda, StepLog* log = nullptr);

// Generates one utterance: the strategy marker is forced as the first target
// token, then tokens come from the (optionally rescored) LM distribution
// until EOS or max_length.
GenerationResult decode_utterance(const EncoderDecoderLm& lm, const EncodedContext& ctx, StrategyLabel strategy,
                                  const PrefixStrategyScorer* disc, const DecodingConfig& cfg, Rng& rng,
                                  bool trace = false);

struct TurnResult {
    std::string dialogue_id;
    std::size_t turn_index = 0;
    GenerationResult result;
    std::string text;       // detokenized generation
    std::string reference;  // gold helper utterance
    StrategyLabel gold_strategy;
};

// Verbalized commonsense sentences per utterance, keyed by dialogue id.
using CommonsenseSentences = std::unordered_map<std::string, std::vector<std::vector<std::string>>>;

// One generation per helper turn; inputs are assembled exactly as in
// build_examples. Each turn draws from its own RNG seeded by
// (cfg.seed, dialogue id, turn index), so result order never affects content.
std::vector<TurnResult> batch_generate(const std::vector<Dialogue>& dialogues, StrategySource source,
                                       const EncoderDecoderLm& lm, const RecurrentClassifier* classifier,
                                       const PrefixStrategyScorer* disc, const DecodingConfig& cfg,
                                       const CommonsenseSentences* commonsense = nullptr,
                                       CommonsenseScope scope = CommonsenseScope::MostRecentSeeker);

void write_generation_file(const std::string& path, const std::vector<TurnResult>& rows, const StrategySet& strategies);

}  // namespace steerdial
