#include "steerdial/strategy.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "steerdial/checkpoint.hpp"
#include "steerdial/errors.hpp"

namespace steerdial {

namespace {

void init_uniform(Matrix& m, Rng& rng, Scalar scale) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-scale, scale);
}

}  // namespace

RecurrentClassifier::RecurrentClassifier(const ClassifierConfig& cfg, Vocabulary vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
    if (cfg_.vocab_size < 1 || cfg_.embedding_dim < 1 || cfg_.hidden_dim < 1 || cfg_.strategy_count < 1)
        throw ConfigMismatchError("all classifier dimensions must be at least 1");
    if (static_cast<std::size_t>(cfg_.vocab_size) != vocab_.size())
        throw ConfigMismatchError("vocab_size " + std::to_string(cfg_.vocab_size) + " vs vocabulary of " +
                                  std::to_string(vocab_.size()) + " tokens");
    emb_ = Matrix::Zero(cfg_.embedding_dim, cfg_.vocab_size);
    g_emb_ = emb_;
    cell_ = GruCell(cfg_.embedding_dim, cfg_.hidden_dim);
    g_cell_ = GruCell(cfg_.embedding_dim, cfg_.hidden_dim);
    wout_ = Matrix::Zero(cfg_.strategy_count, cfg_.hidden_dim);
    bout_ = Matrix::Zero(cfg_.strategy_count, 1);
    g_wout_ = wout_;
    g_bout_ = bout_;

    Rng rng(cfg_.seed);
    for (auto& p : params()) init_uniform(*p.value, rng, 0.08);
}

std::vector<ParamRef> RecurrentClassifier::params() {
    std::vector<ParamRef> out;
    out.push_back({"embedding", &emb_, &g_emb_});
    append_params(out, "gru", cell_, g_cell_);
    out.push_back({"out.W", &wout_, &g_wout_});
    out.push_back({"out.b", &bout_, &g_bout_});
    return out;
}

void RecurrentClassifier::check_token(TokenId t) const {
    if (t < 0 || t >= cfg_.vocab_size) throw InvalidTokenError(t, static_cast<std::size_t>(cfg_.vocab_size));
}

Vector RecurrentClassifier::initial() const { return Vector::Zero(cfg_.hidden_dim); }

Vector RecurrentClassifier::advance(const Vector& state, TokenId token) const {
    check_token(token);
    return cell_.forward(emb_.col(token), state, nullptr);
}

Vector RecurrentClassifier::distribution(const Vector& state) const { return softmax(wout_ * state + bout_); }

std::vector<Vector> RecurrentClassifier::step_distributions(const TokenSequence& prefix) const {
    if (prefix.empty()) throw EmptyInputError("classifier prefix");
    std::vector<Vector> out;
    Vector h = initial();
    for (TokenId t : prefix) {
        h = advance(h, t);
        out.push_back(distribution(h));
    }
    return out;
}

Scalar RecurrentClassifier::prefix_loss(const TokenSequence& tokens, StrategyLabel gold) const {
    if (tokens.empty()) throw EmptyInputError("classifier input");
    Scalar loss = 0;
    Vector h = initial();
    for (TokenId t : tokens) {
        h = advance(h, t);
        Vector logp = log_softmax(wout_ * h + bout_);
        loss -= logp[gold.index];
    }
    return loss;
}

Scalar RecurrentClassifier::final_loss(const TokenSequence& tokens, StrategyLabel gold) const {
    if (tokens.empty()) throw EmptyInputError("classifier input");
    Vector h = initial();
    for (TokenId t : tokens) h = advance(h, t);
    Vector logp = log_softmax(wout_ * h + bout_);
    return -logp[gold.index];
}

Vector RecurrentClassifier::classify(const TokenSequence& tokens) const {
    if (tokens.empty()) throw EmptyInputError("classifier input");
    Vector h = initial();
    for (TokenId t : tokens) h = advance(h, t);
    return distribution(h);
}

Scalar RecurrentClassifier::accumulate_gradients(const TokenSequence& tokens, StrategyLabel gold,
                                                 bool all_positions) {
    if (tokens.empty()) throw EmptyInputError("classifier input");
    const Index n = static_cast<Index>(tokens.size());
    const Index H = cfg_.hidden_dim;

    std::vector<GruCell::Step> steps(static_cast<std::size_t>(n));
    std::vector<Vector> probs(static_cast<std::size_t>(n));
    Scalar loss = 0;
    Vector h = Vector::Zero(H);
    for (Index t = 0; t < n; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        check_token(tokens[ut]);
        h = cell_.forward(emb_.col(tokens[ut]), h, &steps[ut]);
        if (all_positions || t == n - 1) {
            Vector logp = log_softmax(wout_ * h + bout_);
            loss -= logp[gold.index];
            probs[ut] = logp.array().exp();
        }
    }

    Vector carry = Vector::Zero(H);
    for (Index t = n - 1; t >= 0; --t) {
        const auto ut = static_cast<std::size_t>(t);
        Vector dh = carry;
        if (all_positions || t == n - 1) {
            Vector dlogits = probs[ut];
            dlogits[gold.index] -= 1;
            // the head sees the post-step hidden state
            Vector h_t = (Vector::Ones(H) - steps[ut].z).cwiseProduct(steps[ut].h_prev) +
                         steps[ut].z.cwiseProduct(steps[ut].hhat);
            g_wout_.noalias() += dlogits * h_t.transpose();
            g_bout_.noalias() += dlogits;
            dh.noalias() += wout_.transpose() * dlogits;
        }
        Vector dx = Vector::Zero(cfg_.embedding_dim);
        Vector dh_prev = Vector::Zero(H);
        cell_.backward(steps[ut], dh, g_cell_, dx, dh_prev);
        carry = dh_prev;
        g_emb_.col(tokens[ut]) += dx;
    }
    return loss;
}

void RecurrentClassifier::zero_gradients() {
    for (auto& p : params()) p.grad->setZero();
}

void RecurrentClassifier::sgd_step(Scalar lr, Scalar scale) {
    for (auto& p : params()) *p.value -= (lr * scale) * (*p.grad);
}

std::uint64_t RecurrentClassifier::param_hash() const {
    auto refs = const_cast<RecurrentClassifier*>(this)->params();
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const auto& p : refs) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p.value->data());
        for (std::size_t i = 0; i < sizeof(Scalar) * static_cast<std::size_t>(p.value->size()); ++i) {
            h ^= bytes[i];
            h *= 0x100000001B3ull;
        }
    }
    return h;
}

void RecurrentClassifier::save(const std::string& path, const std::string& kind) const {
    auto out = ckpt::open_for_write(path);
    ckpt::write_header(out, kind);
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.vocab_size));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.embedding_dim));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.hidden_dim));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.strategy_count));
    ckpt::write_u64(out, cfg_.seed);
    ckpt::write_string_list(out, vocab_.tokens());
    auto refs = const_cast<RecurrentClassifier*>(this)->params();
    ckpt::write_u64(out, refs.size());
    for (const auto& p : refs) ckpt::write_matrix(out, *p.value);
}

RecurrentClassifier RecurrentClassifier::load(const std::string& path, const std::string& expected_kind) {
    auto in = ckpt::open_for_read(path);
    const std::string kind = ckpt::read_header(in);
    if (kind != expected_kind) throw FormatError("expected " + expected_kind + " checkpoint, found " + kind);
    ClassifierConfig cfg;
    cfg.vocab_size = static_cast<Index>(ckpt::read_u64(in));
    cfg.embedding_dim = static_cast<Index>(ckpt::read_u64(in));
    cfg.hidden_dim = static_cast<Index>(ckpt::read_u64(in));
    cfg.strategy_count = static_cast<Index>(ckpt::read_u64(in));
    cfg.seed = ckpt::read_u64(in);
    auto tokens = ckpt::read_string_list(in);
    if (tokens.size() != static_cast<std::size_t>(cfg.vocab_size))
        throw FormatError("vocabulary size disagrees with config");
    Vocabulary vocab = Vocabulary::from_tokens(tokens, static_cast<std::size_t>(cfg.strategy_count));
    RecurrentClassifier model(cfg, std::move(vocab));
    auto refs = model.params();
    if (ckpt::read_u64(in) != refs.size()) throw FormatError("parameter count mismatch");
    for (auto& p : refs) {
        Matrix m = ckpt::read_matrix(in);
        if (m.rows() != p.value->rows() || m.cols() != p.value->cols()) throw FormatError("shape mismatch for " + p.name);
        *p.value = m;
    }
    return model;
}

ClassifierTrainStats train_sequence_classifier(RecurrentClassifier& model, const std::vector<LabeledSequence>& train,
                                               const std::vector<LabeledSequence>& held_out, const TrainingConfig& cfg,
                                               bool all_positions) {
    if (train.empty()) throw EmptyInputError("training sequences");
    const auto count = train.size();
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});

    ClassifierTrainStats stats;
    for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        Scalar epoch_loss = 0;
        for (std::size_t start = 0; start < count; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(count, start + static_cast<std::size_t>(cfg.batch_size));
            model.zero_gradients();
            Scalar batch_loss = 0;
            for (std::size_t i = start; i < end; ++i) {
                batch_loss += model.accumulate_gradients(train[order[i]].tokens, train[order[i]].label, all_positions);
            }
            if (!std::isfinite(batch_loss)) throw DivergedError(static_cast<std::size_t>(epoch));
            epoch_loss += batch_loss;
            model.sgd_step(cfg.learning_rate, Scalar(1) / static_cast<Scalar>(end - start));
        }
        stats.epoch_loss.push_back(epoch_loss / static_cast<Scalar>(count));
    }

    if (!held_out.empty()) {
        std::size_t hits = 0;
        for (const auto& seq : held_out) {
            Vector p = model.classify(seq.tokens);
            if (argmax_lowest(p) == Index(seq.label.index)) ++hits;
        }
        stats.held_out_accuracy = static_cast<Scalar>(hits) / static_cast<Scalar>(held_out.size());
    }
    return stats;
}

StrategyLabel predict_strategy(const TokenSequence& history, StrategySource source, const EncoderDecoderLm* lm,
                               const RecurrentClassifier* classifier, std::optional<StrategyLabel> gold) {
    switch (source) {
        case StrategySource::Oracle:
            if (!gold) throw MissingGoldError();
            return *gold;
        case StrategySource::JointHead: {
            if (!lm) throw ConfigMismatchError("joint strategy source requires the language model");
            EncodedContext ctx = lm->encode(history);
            Vector p = lm->strategy_distribution(ctx);
            return {static_cast<std::int32_t>(argmax_lowest(p))};
        }
        case StrategySource::ExternalClassifier: {
            if (!classifier) throw ConfigMismatchError("classifier strategy source requires a classifier");
            Vector p = classifier->classify(history);
            return {static_cast<std::int32_t>(argmax_lowest(p))};
        }
    }
    throw ConfigMismatchError("unknown strategy source");
}

std::vector<LabeledSequence> discriminator_sequences(const std::vector<TrainingExample>& examples) {
    std::vector<LabeledSequence> out;
    for (const auto& ex : examples) {
        if (ex.target.size() < 2) continue;  // marker + at least EOS
        LabeledSequence seq;
        seq.tokens.assign(ex.target.begin() + 1, ex.target.end());
        seq.label = ex.gold_strategy;
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<LabeledSequence> classifier_sequences(const std::vector<TrainingExample>& examples) {
    std::vector<LabeledSequence> out;
    for (const auto& ex : examples) out.push_back({ex.input, ex.gold_strategy});
    return out;
}

}  // namespace steerdial
