#include "steerdial/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "steerdial/errors.hpp"

namespace steerdial {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw LengthMismatchError(a, b);
}

// k-gram multiset counts keyed by the id-joined gram
std::unordered_map<std::string, std::size_t> gram_counts(const TokenSequence& tokens, std::size_t k) {
    std::unordered_map<std::string, std::size_t> out;
    if (tokens.size() < k) return out;
    for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
        std::string key;
        for (std::size_t j = 0; j < k; ++j) {
            key += std::to_string(tokens[i + j]);
            key += '\x1f';
        }
        ++out[key];
    }
    return out;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// Interns word strings so metric code can compare cheap ids.
struct Interner {
    std::unordered_map<std::string, TokenId> ids;
    TokenSequence operator()(const std::string& text) {
        TokenSequence out;
        for (const auto& w : tokenize_words(text)) {
            auto [it, fresh] = ids.emplace(w, TokenId(ids.size()));
            (void)fresh;
            out.push_back(it->second);
        }
        return out;
    }
};

}  // namespace

Scalar bleu_n(const std::vector<TokenSequence>& candidates, const std::vector<TokenSequence>& references, int n) {
    check_lengths(candidates.size(), references.size());
    if (n < 1 || n > 4) throw UsageError("bleu order must be between 1 and 4");
    if (candidates.empty()) throw EmptyInputError("bleu corpus");

    std::size_t total_c = 0, total_r = 0;
    std::vector<std::size_t> clipped(std::size_t(n), 0), emitted(std::size_t(n), 0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        total_c += candidates[i].size();
        total_r += references[i].size();
        for (std::size_t k = 1; k <= std::size_t(n); ++k) {
            auto cand = gram_counts(candidates[i], k);
            auto ref = gram_counts(references[i], k);
            for (const auto& [gram, count] : cand) {
                auto it = ref.find(gram);
                clipped[k - 1] += std::min(count, it == ref.end() ? std::size_t(0) : it->second);
                emitted[k - 1] += count;
            }
        }
    }

    Scalar log_sum = 0;
    for (std::size_t k = 0; k < std::size_t(n); ++k) {
        if (emitted[k] == 0 || clipped[k] == 0) return 0;
        log_sum += std::log(Scalar(clipped[k]) / Scalar(emitted[k]));
    }
    if (total_c == 0) return 0;
    const Scalar bp = std::min(Scalar(1), std::exp(1 - Scalar(total_r) / Scalar(total_c)));
    return bp * std::exp(log_sum / Scalar(n));
}

Scalar rouge_l(const std::vector<TokenSequence>& candidates, const std::vector<TokenSequence>& references) {
    check_lengths(candidates.size(), references.size());
    if (candidates.empty()) throw EmptyInputError("rouge corpus");

    Scalar sum = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        const auto& r = references[i];
        if (c.empty() || r.empty()) continue;  // F = 0
        const Scalar lcs = Scalar(lcs_length(c, r));
        const Scalar p = lcs / Scalar(c.size());
        const Scalar q = lcs / Scalar(r.size());
        if (p + q > 0) sum += 2 * p * q / (p + q);
    }
    return sum / Scalar(candidates.size());
}

Scalar strategy_accuracy(const std::vector<StrategyLabel>& predicted, const std::vector<StrategyLabel>& gold) {
    check_lengths(predicted.size(), gold.size());
    if (predicted.empty()) throw EmptyInputError("strategy labels");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == gold[i]) ++hits;
    return Scalar(hits) / Scalar(predicted.size());
}

std::vector<GenerationRow> read_generation_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<GenerationRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw ParseError(path, line_no, "not a json object");
        try {
            GenerationRow row;
            row.dialogue_id = j.at("dialogue_id").get<std::string>();
            row.turn_index = j.at("turn_index").get<std::size_t>();
            row.strategy_used = j.at("strategy_used").get<std::string>();
            row.text = j.at("text").get<std::string>();
            row.reference = j.at("reference").get<std::string>();
            row.gold_strategy = j.at("gold_strategy").get<std::string>();
            rows.push_back(std::move(row));
        } catch (const ordered_json::exception& e) {
            throw ParseError(path, line_no, e.what());
        }
    }
    return rows;
}

EvaluationReport evaluate_run(const std::string& generation_file, const StrategySet& strategy_set) {
    const auto rows = read_generation_file(generation_file);
    if (rows.empty()) throw EmptyInputError("generation rows in " + generation_file);

    Interner intern;
    std::vector<TokenSequence> candidates, references;
    std::vector<StrategyLabel> used, gold;
    std::size_t line_no = 0;
    for (const auto& row : rows) {
        ++line_no;
        candidates.push_back(intern(row.text));
        references.push_back(intern(row.reference));
        const auto u = strategy_set.index_of(row.strategy_used);
        if (u < 0) throw ParseError(generation_file, line_no, "unknown strategy \"" + row.strategy_used + "\"");
        const auto g = strategy_set.index_of(row.gold_strategy);
        if (g < 0) throw ParseError(generation_file, line_no, "unknown strategy \"" + row.gold_strategy + "\"");
        used.push_back({u});
        gold.push_back({g});
    }

    EvaluationReport report;
    report.bleu_1 = bleu_n(candidates, references, 1);
    report.bleu_2 = bleu_n(candidates, references, 2);
    report.bleu_3 = bleu_n(candidates, references, 3);
    report.bleu_4 = bleu_n(candidates, references, 4);
    report.rouge_l = rouge_l(candidates, references);
    report.strategy_accuracy = strategy_accuracy(used, gold);
    report.count = rows.size();
    return report;
}

void write_report(const std::string& path, const EvaluationReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    ordered_json j;
    j["bleu_1"] = report.bleu_1 * 100;
    j["bleu_2"] = report.bleu_2 * 100;
    j["bleu_3"] = report.bleu_3 * 100;
    j["bleu_4"] = report.bleu_4 * 100;
    j["rouge_l"] = report.rouge_l * 100;
    j["strategy_accuracy"] = report.strategy_accuracy;
    j["count"] = report.count;
    if (report.bert_score) j["bert_score"] = *report.bert_score;
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace steerdial
