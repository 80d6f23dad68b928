#include "steerdial/decoding.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "steerdial/errors.hpp"

namespace steerdial {

namespace {

using ordered_json = nlohmann::ordered_json;

TokenId sample_top_k(const Vector& dist, Index k, Rng& rng) {
    std::vector<Index> top = top_k_indices(dist, std::min<Index>(std::max<Index>(k, 1), dist.size()));
    Scalar total = 0;
    for (Index idx : top) total += dist(idx);
    if (total <= 0) return TokenId(top.front());
    const Scalar u = rng.uniform01() * total;
    Scalar cum = 0;
    for (Index idx : top) {
        cum += dist(idx);
        if (u < cum) return TokenId(idx);
    }
    // rounding pushed u past the last positive mass
    for (auto it = top.rbegin(); it != top.rend(); ++it)
        if (dist(*it) > 0) return TokenId(*it);
    return TokenId(top.front());
}

}  // namespace

std::vector<Index> top_k_indices(const Vector& values, Index k) {
    std::vector<Index> order(std::size_t(values.size()));
    std::iota(order.begin(), order.end(), Index(0));
    k = std::min<Index>(std::max<Index>(k, 0), values.size());
    auto better = [&](Index a, Index b) { return values(a) > values(b) || (values(a) == values(b) && a < b); };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
    order.resize(std::size_t(k));
    return order;
}

Vector fudge_rescore_at(const Vector& lm_dist, const Vector& prefix_state, StrategyLabel strategy,
                        const PrefixStrategyScorer& disc, Index k_f, Scalar lambda, StepLog* log) {
    const Index v = lm_dist.size();
    const Index k = std::min<Index>(std::max<Index>(k_f, 1), v);
    std::vector<Index> cand = top_k_indices(lm_dist, k);

    if (log) {
        log->candidates.assign(cand.begin(), cand.end());
        log->lm_probs.resize(k);
        for (Index i = 0; i < k; ++i) log->lm_probs(i) = lm_dist(cand[std::size_t(i)]);
        log->disc_probs.resize(0);
    }

    if (lambda == 0 && k == v) {
        // restriction is a no-op; keep the LM distribution bit for bit
        if (log) log->final_probs = log->lm_probs;
        return lm_dist;
    }

    Vector out = Vector::Zero(v);
    if (lambda == 0) {
        Scalar total = 0;
        for (Index idx : cand) total += lm_dist(idx);
        for (Index idx : cand) out(idx) = lm_dist(idx) / total;
    } else {
        Vector scores(k);
        Vector disc_probs(k);
        for (Index i = 0; i < k; ++i) {
            const TokenId c = TokenId(cand[std::size_t(i)]);
            const Vector next = disc.advance(prefix_state, c);
            disc_probs(i) = disc.distribution(next)(strategy.index);
            scores(i) = clamped_log(lm_dist(cand[std::size_t(i)])) + lambda * clamped_log(disc_probs(i));
        }
        const Vector w = softmax(scores);
        for (Index i = 0; i < k; ++i) out(cand[std::size_t(i)]) = w(i);
        if (log) log->disc_probs = disc_probs;
    }

    if (log) {
        log->final_probs.resize(k);
        for (Index i = 0; i < k; ++i) log->final_probs(i) = out(cand[std::size_t(i)]);
    }
    return out;
}

Vector fudge_rescore(const Vector& lm_dist, const TokenSequence& prefix, StrategyLabel strategy,
                     const PrefixStrategyScorer& disc, Index k_f, Scalar lambda) {
    Vector state = disc.initial();
    for (TokenId t : prefix) state = disc.advance(state, t);
    return fudge_rescore_at(lm_dist, state, strategy, disc, k_f, lambda);
}

GenerationResult decode_utterance(const EncoderDecoderLm& lm, const EncodedContext& ctx, StrategyLabel strategy,
                                  const PrefixStrategyScorer* disc, const DecodingConfig& cfg, Rng& rng, bool trace) {
    const Vocabulary& vocab = lm.vocab();
    const Index v = Index(vocab.size());

    GenerationResult out;
    out.strategy_used = strategy;

    EncoderDecoderLm::DecoderState state = lm.start_decoder(ctx);
    lm.step_decoder(ctx, state, Vocabulary::kBos);  // marker position, token forced below
    TokenId prev = vocab.marker_id(strategy.index);

    Vector disc_state;
    if (disc) disc_state = disc->initial();

    while (Index(out.tokens.size()) < cfg.max_length) {
        const Vector lm_dist = lm.step_decoder(ctx, state, prev);
        StepLog log;
        Vector final_dist;
        if (disc) {
            final_dist = fudge_rescore_at(lm_dist, disc_state, strategy, *disc, cfg.fudge_candidates, cfg.lambda,
                                          trace ? &log : nullptr);
        } else {
            final_dist = lm_dist;
            if (trace) {
                log.candidates.resize(std::size_t(v));
                std::iota(log.candidates.begin(), log.candidates.end(), TokenId(0));
                log.lm_probs = lm_dist;
                log.final_probs = lm_dist;
            }
        }

        const TokenId next = cfg.mode == DecodingConfig::Mode::Greedy ? TokenId(argmax_lowest(final_dist))
                                                                      : sample_top_k(final_dist, cfg.sample_k, rng);
        if (trace) out.per_step.push_back(std::move(log));
        if (next == Vocabulary::kEos) break;
        out.tokens.push_back(next);
        if (disc) disc_state = disc->advance(disc_state, next);
        prev = next;
    }
    return out;
}

std::vector<TurnResult> batch_generate(const std::vector<Dialogue>& dialogues, StrategySource source,
                                       const EncoderDecoderLm& lm, const RecurrentClassifier* classifier,
                                       const PrefixStrategyScorer* disc, const DecodingConfig& cfg,
                                       const CommonsenseSentences* commonsense, CommonsenseScope scope) {
    std::vector<TurnResult> out;
    for (const Dialogue& dialogue : dialogues) {
        const std::vector<std::vector<std::string>>* sentences = nullptr;
        if (commonsense) {
            auto it = commonsense->find(dialogue.id);
            if (it == commonsense->end()) throw EmptyInputError("commonsense sentences for dialogue " + dialogue.id);
            sentences = &it->second;
        }
        const std::vector<TrainingExample> examples = build_examples(dialogue, lm.vocab(), sentences, scope);
        for (const TrainingExample& ex : examples) {
            try {
                const StrategyLabel strategy = predict_strategy(ex.input, source, &lm, classifier, ex.gold_strategy);
                Rng turn_rng(turn_seed(cfg.seed, dialogue.id, ex.turn_index));
                const EncodedContext ctx = lm.encode(ex.input);

                TurnResult row;
                row.dialogue_id = dialogue.id;
                row.turn_index = ex.turn_index;
                row.result = decode_utterance(lm, ctx, strategy, disc, cfg, turn_rng);
                row.text = lm.vocab().decode(row.result.tokens);
                row.reference = dialogue.utterances[ex.turn_index].text;
                row.gold_strategy = ex.gold_strategy;
                out.push_back(std::move(row));
            } catch (const Error& e) {
                throw Error(e.category(), "dialogue " + dialogue.id + ", turn " + std::to_string(ex.turn_index) +
                                              ": " + e.what());
            }
        }
    }
    return out;
}

void write_generation_file(const std::string& path, const std::vector<TurnResult>& rows,
                           const StrategySet& strategies) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const TurnResult& row : rows) {
        ordered_json j;
        j["dialogue_id"] = row.dialogue_id;
        j["turn_index"] = row.turn_index;
        j["strategy_used"] = strategies.name(row.result.strategy_used.index);
        j["text"] = row.text;
        j["reference"] = row.reference;
        j["gold_strategy"] = strategies.name(row.gold_strategy.index);
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace steerdial
