#include "steerdial/lm.hpp"

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

std::uint64_t hash_bytes(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace

EncoderDecoderLm::EncoderDecoderLm(const ModelConfig& cfg, Vocabulary vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
    if (cfg_.vocab_size < 1 || cfg_.embedding_dim < 1 || cfg_.hidden_dim < 1 || cfg_.encoder_layers < 1 ||
        cfg_.decoder_layers < 1 || cfg_.strategy_count < 1)
        throw ConfigMismatchError("all model dimensions must be at least 1");
    if (static_cast<std::size_t>(cfg_.vocab_size) != vocab_.size())
        throw ConfigMismatchError("vocab_size " + std::to_string(cfg_.vocab_size) + " vs vocabulary of " +
                                  std::to_string(vocab_.size()) + " tokens");
    if (static_cast<std::size_t>(cfg_.strategy_count) != vocab_.strategy_count())
        throw ConfigMismatchError("strategy_count " + std::to_string(cfg_.strategy_count) + " vs vocabulary with " +
                                  std::to_string(vocab_.strategy_count()) + " markers");

    const Index E = cfg_.embedding_dim, H = cfg_.hidden_dim, V = cfg_.vocab_size, S = cfg_.strategy_count;

    emb_ = Matrix::Zero(E, V);
    g_emb_ = emb_;
    for (Index l = 0; l < cfg_.encoder_layers; ++l) {
        const Index in = (l == 0) ? E : 2 * H;
        enc_f_.emplace_back(in, H);
        enc_b_.emplace_back(in, H);
        g_enc_f_.emplace_back(in, H);
        g_enc_b_.emplace_back(in, H);
    }
    ws_ = Matrix::Zero(S, 2 * H);
    bs_ = Matrix::Zero(S, 1);
    g_ws_ = ws_;
    g_bs_ = bs_;
    for (Index l = 0; l < cfg_.decoder_layers; ++l) {
        w_init_.push_back(Matrix::Zero(H, 2 * H));
        b_init_.push_back(Matrix::Zero(H, 1));
        g_w_init_.push_back(Matrix::Zero(H, 2 * H));
        g_b_init_.push_back(Matrix::Zero(H, 1));
        const Index in = (l == 0) ? E : H;
        dec_.emplace_back(in, H);
        g_dec_.emplace_back(in, H);
    }
    wa_ = Matrix::Zero(H, 2 * H);
    g_wa_ = wa_;
    wc_ = Matrix::Zero(H, 3 * H);
    bc_ = Matrix::Zero(H, 1);
    g_wc_ = wc_;
    g_bc_ = bc_;
    wout_ = Matrix::Zero(V, H);
    bout_ = Matrix::Zero(V, 1);
    g_wout_ = wout_;
    g_bout_ = bout_;

    Rng rng(cfg_.seed);
    for (auto& p : params()) init_uniform(*p.value, rng, 0.08);
}

std::vector<ParamRef> EncoderDecoderLm::params() {
    std::vector<ParamRef> out;
    out.push_back({"embedding", &emb_, &g_emb_});
    for (std::size_t l = 0; l < enc_f_.size(); ++l) {
        append_params(out, "enc_f" + std::to_string(l), enc_f_[l], g_enc_f_[l]);
        append_params(out, "enc_b" + std::to_string(l), enc_b_[l], g_enc_b_[l]);
    }
    out.push_back({"strategy.W", &ws_, &g_ws_});
    out.push_back({"strategy.b", &bs_, &g_bs_});
    for (std::size_t l = 0; l < dec_.size(); ++l) {
        out.push_back({"dec_init" + std::to_string(l) + ".W", &w_init_[l], &g_w_init_[l]});
        out.push_back({"dec_init" + std::to_string(l) + ".b", &b_init_[l], &g_b_init_[l]});
        append_params(out, "dec" + std::to_string(l), dec_[l], g_dec_[l]);
    }
    out.push_back({"attn.W", &wa_, &g_wa_});
    out.push_back({"combine.W", &wc_, &g_wc_});
    out.push_back({"combine.b", &bc_, &g_bc_});
    out.push_back({"out.W", &wout_, &g_wout_});
    out.push_back({"out.b", &bout_, &g_bout_});
    return out;
}

void EncoderDecoderLm::check_token(TokenId t) const {
    if (t < 0 || t >= cfg_.vocab_size) throw InvalidTokenError(t, static_cast<std::size_t>(cfg_.vocab_size));
}

EncodedContext EncoderDecoderLm::encode_internal(const TokenSequence& input, EncodeTrace* trace) const {
    if (input.empty()) throw EmptyInputError("encoder input");
    const Index n = static_cast<Index>(input.size());
    const Index H = cfg_.hidden_dim;

    Matrix in(cfg_.embedding_dim, n);
    for (Index i = 0; i < n; ++i) {
        check_token(input[static_cast<std::size_t>(i)]);
        in.col(i) = emb_.col(input[static_cast<std::size_t>(i)]);
    }
    if (trace) {
        trace->input = input;
        trace->layers.resize(static_cast<std::size_t>(cfg_.encoder_layers));
    }

    Matrix out_f(H, n), out_b(H, n);
    for (Index l = 0; l < cfg_.encoder_layers; ++l) {
        auto& cf = enc_f_[static_cast<std::size_t>(l)];
        auto& cb = enc_b_[static_cast<std::size_t>(l)];
        EncLayerTrace* lt = trace ? &trace->layers[static_cast<std::size_t>(l)] : nullptr;
        if (lt) {
            lt->fwd.resize(static_cast<std::size_t>(n));
            lt->bwd.resize(static_cast<std::size_t>(n));
        }
        Vector h = Vector::Zero(H);
        for (Index i = 0; i < n; ++i) {
            h = cf.forward(in.col(i), h, lt ? &lt->fwd[static_cast<std::size_t>(i)] : nullptr);
            out_f.col(i) = h;
        }
        h = Vector::Zero(H);
        for (Index i = n - 1; i >= 0; --i) {
            h = cb.forward(in.col(i), h, lt ? &lt->bwd[static_cast<std::size_t>(i)] : nullptr);
            out_b.col(i) = h;
        }
        if (lt) {
            lt->out_f = out_f;
            lt->out_b = out_b;
        }
        if (l + 1 < cfg_.encoder_layers) {
            in.resize(2 * H, n);
            in.topRows(H) = out_f;
            in.bottomRows(H) = out_b;
        }
    }

    EncodedContext ctx;
    ctx.hidden.resize(2 * H, n);
    ctx.hidden.topRows(H) = out_f;
    ctx.hidden.bottomRows(H) = out_b;
    ctx.cls = ctx.hidden.col(0);
    return ctx;
}

EncodedContext EncoderDecoderLm::encode(const TokenSequence& input) const { return encode_internal(input, nullptr); }

EncoderDecoderLm::DecoderState EncoderDecoderLm::start_decoder(const EncodedContext& ctx) const {
    DecoderState state;
    for (Index l = 0; l < cfg_.decoder_layers; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        state.h.push_back((w_init_[ul] * ctx.cls + b_init_[ul]).array().tanh());
    }
    return state;
}

Vector EncoderDecoderLm::decoder_output(const EncodedContext& ctx, const Matrix& projected, const Vector& d,
                                        DecStepTrace* step) const {
    Vector scores = projected.transpose() * d;
    Vector attn = softmax(scores);
    Vector a = ctx.hidden * attn;
    Vector cat(d.size() + a.size());
    cat << d, a;
    Vector c = (wc_ * cat + bc_).array().tanh();
    Vector logits = wout_ * c + bout_;
    if (step) {
        step->d = d;
        step->attn = attn;
        step->a = a;
        step->c = c;
    }
    return logits;
}

Vector EncoderDecoderLm::step_decoder(const EncodedContext& ctx, DecoderState& state, TokenId token) const {
    check_token(token);
    Matrix projected = wa_ * ctx.hidden;
    Vector x = emb_.col(token);
    for (Index l = 0; l < cfg_.decoder_layers; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        state.h[ul] = dec_[ul].forward(l == 0 ? x : state.h[ul - 1], state.h[ul], nullptr);
    }
    Vector logits = decoder_output(ctx, projected, state.h.back(), nullptr);
    return softmax(logits);
}

Vector EncoderDecoderLm::next_token_distribution(const EncodedContext& ctx, const TokenSequence& prefix) const {
    DecoderState state = start_decoder(ctx);
    Vector dist = step_decoder(ctx, state, Vocabulary::kBos);
    for (TokenId t : prefix) dist = step_decoder(ctx, state, t);
    return dist;
}

Vector EncoderDecoderLm::strategy_distribution(const EncodedContext& ctx) const { return softmax(ws_ * ctx.cls + bs_); }

Scalar EncoderDecoderLm::decode_teacher_forced(const EncodedContext& ctx, const TokenSequence& target,
                                               DecodeTrace* trace) const {
    if (target.empty()) throw EmptyInputError("decoder target");
    const Index m = static_cast<Index>(target.size());

    std::vector<Vector> h;
    for (Index l = 0; l < cfg_.decoder_layers; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        h.push_back((w_init_[ul] * ctx.cls + b_init_[ul]).array().tanh());
    }
    Matrix projected = wa_ * ctx.hidden;
    if (trace) {
        trace->h0 = h;
        trace->projected = projected;
        trace->steps.resize(static_cast<std::size_t>(m));
    }

    Scalar loss = 0;
    for (Index t = 0; t < m; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        const TokenId prev = (t == 0) ? Vocabulary::kBos : target[ut - 1];
        check_token(prev);
        check_token(target[ut]);
        DecStepTrace* st = trace ? &trace->steps[ut] : nullptr;
        if (st) st->layers.resize(static_cast<std::size_t>(cfg_.decoder_layers));
        Vector x = emb_.col(prev);
        for (Index l = 0; l < cfg_.decoder_layers; ++l) {
            const auto ul = static_cast<std::size_t>(l);
            h[ul] = dec_[ul].forward(l == 0 ? x : h[ul - 1], h[ul], st ? &st->layers[ul] : nullptr);
        }
        Vector logits = decoder_output(ctx, projected, h.back(), st);
        Vector logp = log_softmax(logits);
        loss -= logp[target[ut]];
        if (st) st->probs = logp.array().exp();
    }
    return loss;
}

Scalar EncoderDecoderLm::lm_loss(const TrainingExample& example) const {
    EncodedContext ctx = encode(example.input);
    return decode_teacher_forced(ctx, example.target, nullptr);
}

Scalar EncoderDecoderLm::strategy_loss(const EncodedContext& ctx, StrategyLabel gold) const {
    Vector p = strategy_distribution(ctx);
    return -clamped_log(p[gold.index]);
}

Scalar EncoderDecoderLm::joint_loss(const TrainingExample& example, Scalar alpha) const {
    EncodedContext ctx = encode(example.input);
    Scalar loss = decode_teacher_forced(ctx, example.target, nullptr);
    if (alpha > 0) loss += alpha * strategy_loss(ctx, example.gold_strategy);
    return loss;
}

LossParts EncoderDecoderLm::accumulate_gradients(const TrainingExample& example, Scalar alpha) {
    const Index H = cfg_.hidden_dim;
    const Index n = static_cast<Index>(example.input.size());
    const Index m = static_cast<Index>(example.target.size());

    EncodeTrace etrace;
    EncodedContext ctx = encode_internal(example.input, &etrace);
    DecodeTrace dtrace;
    LossParts parts;
    parts.lm = decode_teacher_forced(ctx, example.target, &dtrace);

    Matrix d_hidden = Matrix::Zero(2 * H, n);
    Matrix d_projected = Matrix::Zero(H, n);
    Vector d_cls = Vector::Zero(2 * H);

    std::vector<Vector> carry(static_cast<std::size_t>(cfg_.decoder_layers), Vector::Zero(H));
    for (Index t = m - 1; t >= 0; --t) {
        const auto ut = static_cast<std::size_t>(t);
        const DecStepTrace& st = dtrace.steps[ut];
        const TokenId prev = (t == 0) ? Vocabulary::kBos : example.target[ut - 1];

        Vector dlogits = st.probs;
        dlogits[example.target[ut]] -= 1;
        g_wout_.noalias() += dlogits * st.c.transpose();
        g_bout_.noalias() += dlogits;
        Vector dc = wout_.transpose() * dlogits;

        Vector dpre = dc.cwiseProduct(Vector::Ones(H) - st.c.cwiseProduct(st.c));
        Vector cat(3 * H);
        cat << st.d, st.a;
        g_wc_.noalias() += dpre * cat.transpose();
        g_bc_.noalias() += dpre;
        Vector dcat = wc_.transpose() * dpre;
        Vector dd = dcat.head(H);
        Vector da = dcat.tail(2 * H);

        Vector dattn = ctx.hidden.transpose() * da;
        d_hidden.noalias() += da * st.attn.transpose();
        const Scalar dot = st.attn.dot(dattn);
        Vector dscores = st.attn.array() * (dattn.array() - dot);
        dd.noalias() += dtrace.projected * dscores;
        d_projected.noalias() += st.d * dscores.transpose();

        Vector down;
        for (Index l = cfg_.decoder_layers - 1; l >= 0; --l) {
            const auto ul = static_cast<std::size_t>(l);
            Vector dh = (l == cfg_.decoder_layers - 1 ? dd : down) + carry[ul];
            Vector dx = Vector::Zero(dec_[ul].input_dim());
            Vector dh_prev = Vector::Zero(H);
            dec_[ul].backward(st.layers[ul], dh, g_dec_[ul], dx, dh_prev);
            carry[ul] = dh_prev;
            down = dx;
        }
        g_emb_.col(prev) += down;
    }
    for (Index l = 0; l < cfg_.decoder_layers; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        Vector da0 = carry[ul].cwiseProduct(Vector::Ones(H) - dtrace.h0[ul].cwiseProduct(dtrace.h0[ul]));
        g_w_init_[ul].noalias() += da0 * ctx.cls.transpose();
        g_b_init_[ul].noalias() += da0;
        d_cls.noalias() += w_init_[ul].transpose() * da0;
    }
    g_wa_.noalias() += d_projected * ctx.hidden.transpose();
    d_hidden.noalias() += wa_.transpose() * d_projected;

    if (alpha > 0) {
        Vector sp = softmax(ws_ * ctx.cls + bs_);
        parts.strategy = -clamped_log(sp[example.gold_strategy.index]);
        Vector ds = alpha * sp;
        ds[example.gold_strategy.index] -= alpha;
        g_ws_.noalias() += ds * ctx.cls.transpose();
        g_bs_.noalias() += ds;
        d_cls.noalias() += ws_.transpose() * ds;
    }
    d_hidden.col(0) += d_cls;

    Matrix d_out_f = d_hidden.topRows(H);
    Matrix d_out_b = d_hidden.bottomRows(H);
    for (Index l = cfg_.encoder_layers - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        const EncLayerTrace& lt = etrace.layers[ul];
        const Index in_dim = enc_f_[ul].input_dim();
        Matrix d_in = Matrix::Zero(in_dim, n);

        Vector chain = Vector::Zero(H);
        for (Index i = n - 1; i >= 0; --i) {
            const auto ui = static_cast<std::size_t>(i);
            Vector dh = d_out_f.col(i) + chain;
            Vector dx = Vector::Zero(in_dim);
            Vector dh_prev = Vector::Zero(H);
            enc_f_[ul].backward(lt.fwd[ui], dh, g_enc_f_[ul], dx, dh_prev);
            d_in.col(i) += dx;
            chain = dh_prev;
        }
        chain = Vector::Zero(H);
        for (Index i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            Vector dh = d_out_b.col(i) + chain;
            Vector dx = Vector::Zero(in_dim);
            Vector dh_prev = Vector::Zero(H);
            enc_b_[ul].backward(lt.bwd[ui], dh, g_enc_b_[ul], dx, dh_prev);
            d_in.col(i) += dx;
            chain = dh_prev;
        }

        if (l > 0) {
            d_out_f = d_in.topRows(H);
            d_out_b = d_in.bottomRows(H);
        } else {
            for (Index i = 0; i < n; ++i) g_emb_.col(example.input[static_cast<std::size_t>(i)]) += d_in.col(i);
        }
    }
    return parts;
}

void EncoderDecoderLm::zero_gradients() {
    for (auto& p : params()) p.grad->setZero();
}

void EncoderDecoderLm::sgd_step(Scalar lr, Scalar scale) {
    for (auto& p : params()) *p.value -= (lr * scale) * (*p.grad);
}

std::uint64_t EncoderDecoderLm::param_hash() const {
    auto refs = const_cast<EncoderDecoderLm*>(this)->params();
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const auto& p : refs)
        h = hash_bytes(h, p.value->data(), sizeof(Scalar) * static_cast<std::size_t>(p.value->size()));
    return h;
}

void EncoderDecoderLm::save(const std::string& path) const {
    auto out = ckpt::open_for_write(path);
    ckpt::write_header(out, "lm");
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.vocab_size));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.embedding_dim));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.hidden_dim));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.encoder_layers));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.decoder_layers));
    ckpt::write_u64(out, static_cast<std::uint64_t>(cfg_.strategy_count));
    ckpt::write_u64(out, cfg_.seed);
    ckpt::write_string_list(out, vocab_.tokens());
    auto refs = const_cast<EncoderDecoderLm*>(this)->params();
    ckpt::write_u64(out, refs.size());
    for (const auto& p : refs) ckpt::write_matrix(out, *p.value);
}

EncoderDecoderLm EncoderDecoderLm::load(const std::string& path) {
    auto in = ckpt::open_for_read(path);
    const std::string kind = ckpt::read_header(in);
    if (kind != "lm") throw FormatError("expected lm checkpoint, found " + kind);
    ModelConfig cfg;
    cfg.vocab_size = static_cast<Index>(ckpt::read_u64(in));
    cfg.embedding_dim = static_cast<Index>(ckpt::read_u64(in));
    cfg.hidden_dim = static_cast<Index>(ckpt::read_u64(in));
    cfg.encoder_layers = static_cast<Index>(ckpt::read_u64(in));
    cfg.decoder_layers = static_cast<Index>(ckpt::read_u64(in));
    cfg.strategy_count = static_cast<Index>(ckpt::read_u64(in));
    cfg.seed = ckpt::read_u64(in);
    auto tokens = ckpt::read_string_list(in);
    if (tokens.size() != static_cast<std::size_t>(cfg.vocab_size)) throw FormatError("vocabulary size disagrees with config");
    Vocabulary vocab = Vocabulary::from_tokens(tokens, static_cast<std::size_t>(cfg.strategy_count));

    EncoderDecoderLm model(cfg, std::move(vocab));
    auto refs = model.params();
    if (ckpt::read_u64(in) != refs.size()) throw FormatError("parameter count mismatch");
    for (auto& p : refs) {
        Matrix m = ckpt::read_matrix(in);
        if (m.rows() != p.value->rows() || m.cols() != p.value->cols())
            throw FormatError("shape mismatch for " + p.name);
        *p.value = m;
    }
    return model;
}

void check_vocab_compatible(const EncoderDecoderLm& model, const Vocabulary& vocab) {
    if (model.vocab().tokens() != vocab.tokens())
        throw ConfigMismatchError("checkpoint vocabulary (" + std::to_string(model.vocab().size()) +
                                  " tokens) differs from runtime vocabulary (" + std::to_string(vocab.size()) +
                                  " tokens)");
}

TrainStats train_lm(EncoderDecoderLm& model, const std::vector<TrainingExample>& examples, const TrainingConfig& cfg,
                    TrainMode mode) {
    if (examples.empty()) throw EmptyInputError("training examples");
    const Scalar alpha = (mode == TrainMode::Joint) ? cfg.alpha : 0.0;
    const auto count = examples.size();
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainStats stats;
    for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        Scalar sum_lm = 0, sum_strategy = 0;
        for (std::size_t start = 0; start < count; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(count, start + static_cast<std::size_t>(cfg.batch_size));
            model.zero_gradients();
            Scalar batch_loss = 0;
            for (std::size_t i = start; i < end; ++i) {
                LossParts parts = model.accumulate_gradients(examples[order[i]], alpha);
                sum_lm += parts.lm;
                sum_strategy += parts.strategy;
                batch_loss += parts.total(alpha);
            }
            if (!std::isfinite(batch_loss)) throw DivergedError(static_cast<std::size_t>(epoch));
            model.sgd_step(cfg.learning_rate, Scalar(1) / static_cast<Scalar>(end - start));
        }
        EpochStats es;
        es.epoch = epoch;
        es.lm = sum_lm / static_cast<Scalar>(count);
        es.strategy = sum_strategy / static_cast<Scalar>(count);
        es.loss = es.lm + alpha * es.strategy;
        es.param_hash = model.param_hash();
        stats.epochs.push_back(es);
    }
    return stats;
}

}  // namespace steerdial
