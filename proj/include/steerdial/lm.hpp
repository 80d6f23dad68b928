#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steerdial/corpus.hpp"
#include "steerdial/gru.hpp"
#include "steerdial/math.hpp"
#include "steerdial/vocab.hpp"

namespace steerdial {

struct ModelConfig {
    Index vocab_size = 0;
    Index embedding_dim = 16;
    Index hidden_dim = 16;
    Index encoder_layers = 1;
    Index decoder_layers = 1;
    Index strategy_count = 0;
    std::uint64_t seed = 1;
};

// Per-position encoder states; each column stacks the forward and backward
// hidden vectors, so rows = 2 * hidden_dim. cls duplicates column 0.
struct EncodedContext {
    Matrix hidden;
    Vector cls;
};

struct LossParts {
    Scalar lm = 0;
    Scalar strategy = 0;
    Scalar total(Scalar alpha) const { return lm + alpha * strategy; }
};

// Bidirectional GRU encoder, attention GRU decoder with tied input
// embeddings, plus a dense strategy head on the CLS state.
class EncoderDecoderLm {
  public:
    EncoderDecoderLm(const ModelConfig& cfg, Vocabulary vocab);

    const ModelConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return vocab_; }

    EncodedContext encode(const TokenSequence& input) const;

    struct DecoderState {
        std::vector<Vector> h;
    };
    DecoderState start_decoder(const EncodedContext& ctx) const;
    // Feeds one token and returns the distribution over the following token.
    Vector step_decoder(const EncodedContext& ctx, DecoderState& state, TokenId token) const;

    // Distribution after consuming BOS then the prefix under teacher forcing.
    // The prefix is expected to begin with a strategy marker.
    Vector next_token_distribution(const EncodedContext& ctx, const TokenSequence& prefix) const;

    Vector strategy_distribution(const EncodedContext& ctx) const;

    Scalar lm_loss(const TrainingExample& example) const;
    Scalar strategy_loss(const EncodedContext& ctx, StrategyLabel gold) const;
    Scalar joint_loss(const TrainingExample& example, Scalar alpha) const;

    // Adds d(loss)/d(param) into the gradient buffers and returns the loss
    // split. alpha = 0 leaves the strategy head untouched.
    LossParts accumulate_gradients(const TrainingExample& example, Scalar alpha);
    void zero_gradients();
    // value -= lr * scale * grad, for every parameter.
    void sgd_step(Scalar lr, Scalar scale);

    // Fresh views each call; order is the flat serialization order.
    std::vector<ParamRef> params();

    void save(const std::string& path) const;
    static EncoderDecoderLm load(const std::string& path);

    // FNV-1a over the raw bytes of all parameters, in order.
    std::uint64_t param_hash() const;

  private:
    struct EncLayerTrace {
        std::vector<GruCell::Step> fwd, bwd;
        Matrix out_f, out_b;
    };
    struct EncodeTrace {
        TokenSequence input;
        std::vector<EncLayerTrace> layers;
    };
    struct DecStepTrace {
        std::vector<GruCell::Step> layers;
        Vector d, attn, a, c, probs;
    };
    struct DecodeTrace {
        std::vector<Vector> h0;
        Matrix projected;  // Wa * ctx.hidden, shared across steps
        std::vector<DecStepTrace> steps;
    };

    EncodedContext encode_internal(const TokenSequence& input, EncodeTrace* trace) const;
    Scalar decode_teacher_forced(const EncodedContext& ctx, const TokenSequence& target, DecodeTrace* trace) const;
    void check_token(TokenId t) const;
    Vector decoder_output(const EncodedContext& ctx, const Matrix& projected, const Vector& d, DecStepTrace* step) const;

    template <typename Self, typename Fn>
    static void visit_params(Self& self, Fn&& fn);

    ModelConfig cfg_;
    Vocabulary vocab_;

    Matrix emb_, g_emb_;
    std::vector<GruCell> enc_f_, enc_b_, g_enc_f_, g_enc_b_;
    Matrix ws_, bs_, g_ws_, g_bs_;
    std::vector<Matrix> w_init_, b_init_, g_w_init_, g_b_init_;
    std::vector<GruCell> dec_, g_dec_;
    Matrix wa_, g_wa_;
    Matrix wc_, bc_, g_wc_, g_bc_;
    Matrix wout_, bout_, g_wout_, g_bout_;
};

// Throws ConfigMismatchError when the checkpointed vocabulary differs from
// the runtime one.
void check_vocab_compatible(const EncoderDecoderLm& model, const Vocabulary& vocab);

struct TrainingConfig {
    Scalar alpha = 1.0;
    Scalar learning_rate = 0.1;
    Index epochs = 10;
    Index batch_size = 8;
    std::uint64_t seed = 1;
};

enum class TrainMode { GenerationOnly, Joint };

struct EpochStats {
    Index epoch = 0;
    Scalar loss = 0;
    Scalar lm = 0;
    Scalar strategy = 0;
    std::uint64_t param_hash = 0;
};

struct TrainStats {
    std::vector<EpochStats> epochs;
};

// Minibatch SGD on the mean per-example loss. GenerationOnly ignores alpha.
TrainStats train_lm(EncoderDecoderLm& model, const std::vector<TrainingExample>& examples, const TrainingConfig& cfg,
                    TrainMode mode);

}  // namespace steerdial
