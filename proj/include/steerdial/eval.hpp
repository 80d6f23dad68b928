#pragma once

#include <optional>
#include <string>
#include <vector>

#include "steerdial/corpus.hpp"
#include "steerdial/math.hpp"
#include "steerdial/vocab.hpp"

namespace steerdial {

struct EvaluationReport {
    Scalar bleu_1 = 0, bleu_2 = 0, bleu_3 = 0, bleu_4 = 0;  // fractions in [0,1]
    Scalar rouge_l = 0;
    Scalar strategy_accuracy = 0;
    std::size_t count = 0;
    // computed outside this artifact when present; never filled here
    std::optional<Scalar> bert_score;
};

// Corpus-level BLEU-n: clipped modified k-gram precisions pooled over all
// pairs, geometric mean over k = 1..n, brevity penalty min(1, exp(1 - r/c)).
// No smoothing: a zero precision at any order makes the score 0.
Scalar bleu_n(const std::vector<TokenSequence>& candidates, const std::vector<TokenSequence>& references, int n);

// Macro-averaged sentence-level LCS F1 (beta = 1).
Scalar rouge_l(const std::vector<TokenSequence>& candidates, const std::vector<TokenSequence>& references);

Scalar strategy_accuracy(const std::vector<StrategyLabel>& predicted, const std::vector<StrategyLabel>& gold);

// One parsed line of a generation file.
struct GenerationRow {
    std::string dialogue_id;
    std::size_t turn_index = 0;
    std::string strategy_used;
    std::string text;
    std::string reference;
    std::string gold_strategy;
};

std::vector<GenerationRow> read_generation_file(const std::string& path);

// Tokenizes texts with the shared word tokenizer and computes every metric.
EvaluationReport evaluate_run(const std::string& generation_file, const StrategySet& strategy_set);

// Report JSON object; BLEU and ROUGE are scaled by 100, strategy accuracy
// stays a fraction.
void write_report(const std::string& path, const EvaluationReport& report);

}  // namespace steerdial
