#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steerdial/corpus.hpp"
#include "steerdial/gru.hpp"
#include "steerdial/lm.hpp"
#include "steerdial/math.hpp"
#include "steerdial/vocab.hpp"

namespace steerdial {

// Incremental per-prefix strategy scorer. The decoding loop advances one
// token at a time; the state layout is implementation-defined.
class PrefixStrategyScorer {
  public:
    virtual ~PrefixStrategyScorer() = default;
    virtual Index strategy_count() const = 0;
    virtual Vector initial() const = 0;
    virtual Vector advance(const Vector& state, TokenId token) const = 0;
    virtual Vector distribution(const Vector& state) const = 0;
};

struct ClassifierConfig {
    Index vocab_size = 0;
    Index embedding_dim = 16;
    Index hidden_dim = 16;
    Index strategy_count = 0;
    std::uint64_t seed = 1;
};

struct LabeledSequence {
    TokenSequence tokens;
    StrategyLabel label;
};

// GRU over tokens with a softmax strategy head at every position. One model
// class serves two roles: the FUDGE future discriminator (trained on the sum
// of per-prefix losses) and the standalone strategy classifier (trained on
// the final position only).
class RecurrentClassifier : public PrefixStrategyScorer {
  public:
    RecurrentClassifier(const ClassifierConfig& cfg, Vocabulary vocab);

    const ClassifierConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return vocab_; }

    Index strategy_count() const override { return cfg_.strategy_count; }
    Vector initial() const override;
    Vector advance(const Vector& state, TokenId token) const override;
    Vector distribution(const Vector& state) const override;

    // One distribution per position t, conditioned on tokens[0..t].
    std::vector<Vector> step_distributions(const TokenSequence& prefix) const;

    // Sum over every prefix of the gold-strategy negative log probability.
    Scalar prefix_loss(const TokenSequence& tokens, StrategyLabel gold) const;
    // Negative log probability at the final position only.
    Scalar final_loss(const TokenSequence& tokens, StrategyLabel gold) const;
    // Distribution at the final position.
    Vector classify(const TokenSequence& tokens) const;

    // Adds gradients of the chosen loss into the buffers; returns the loss.
    Scalar accumulate_gradients(const TokenSequence& tokens, StrategyLabel gold, bool all_positions);
    void zero_gradients();
    void sgd_step(Scalar lr, Scalar scale);
    std::vector<ParamRef> params();
    std::uint64_t param_hash() const;

    void save(const std::string& path, const std::string& kind) const;
    static RecurrentClassifier load(const std::string& path, const std::string& expected_kind);

  private:
    void check_token(TokenId t) const;

    ClassifierConfig cfg_;
    Vocabulary vocab_;
    Matrix emb_, g_emb_;
    GruCell cell_, g_cell_;
    Matrix wout_, bout_, g_wout_, g_bout_;
};

struct ClassifierTrainStats {
    std::vector<Scalar> epoch_loss;
    Scalar held_out_accuracy = 0;  // full-sequence argmax accuracy
};

// Minibatch SGD on the mean per-sequence loss; all_positions picks between
// the discriminator objective and the classifier objective.
ClassifierTrainStats train_sequence_classifier(RecurrentClassifier& model, const std::vector<LabeledSequence>& train,
                                               const std::vector<LabeledSequence>& held_out, const TrainingConfig& cfg,
                                               bool all_positions);

inline ClassifierTrainStats train_discriminator(RecurrentClassifier& model, const std::vector<LabeledSequence>& train,
                                                const std::vector<LabeledSequence>& held_out,
                                                const TrainingConfig& cfg) {
    return train_sequence_classifier(model, train, held_out, cfg, true);
}

inline ClassifierTrainStats train_external_classifier(RecurrentClassifier& model,
                                                      const std::vector<LabeledSequence>& train,
                                                      const std::vector<LabeledSequence>& held_out,
                                                      const TrainingConfig& cfg) {
    return train_sequence_classifier(model, train, held_out, cfg, false);
}

enum class StrategySource { JointHead, ExternalClassifier, Oracle };

// Argmax strategy from the chosen source; ties break to the lowest index.
StrategyLabel predict_strategy(const TokenSequence& history, StrategySource source, const EncoderDecoderLm* lm,
                               const RecurrentClassifier* classifier, std::optional<StrategyLabel> gold);

// Discriminator training sequences: target content with the marker stripped,
// EOS kept, so decode-time prefixes match the training domain.
std::vector<LabeledSequence> discriminator_sequences(const std::vector<TrainingExample>& examples);
// Classifier training sequences: full example inputs.
std::vector<LabeledSequence> classifier_sequences(const std::vector<TrainingExample>& examples);

}  // namespace steerdial
