#pragma once

#include "steerdial/vocab.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace steerdial {

enum class SpeakerRole { Seeker, Helper };

// Ordered, fixed-at-load set of dialogue strategy names.
class StrategySet {
  public:
    StrategySet() = default;
    explicit StrategySet(std::vector<std::string> labels);

    // The eight ESConv-style strategies.
    static StrategySet default_set();

    std::size_t size() const { return labels_.size(); }
    const std::string& name(std::int32_t index) const { return labels_.at(std::size_t(index)); }
    const std::vector<std::string>& labels() const { return labels_; }
    // -1 when the name is unknown.
    std::int32_t index_of(const std::string& name) const;

  private:
    std::vector<std::string> labels_;
};

struct StrategyLabel {
    std::int32_t index = 0;
    bool operator==(const StrategyLabel&) const = default;
};

struct Utterance {
    SpeakerRole role = SpeakerRole::Seeker;
    std::string text;
    TokenSequence tokens;  // filled by tokenize
    std::optional<StrategyLabel> strategy;
};

struct Dialogue {
    std::string id;
    std::string situation;
    std::vector<Utterance> utterances;
};

struct TrainingExample {
    TokenSequence input;   // CLS + situation + (SEP + utterance)* [+ SEP + commonsense]
    TokenSequence target;  // strategy marker + utterance + EOS
    StrategyLabel gold_strategy;
    std::string dialogue_id;
    std::size_t turn_index = 0;  // utterance index of the target within its dialogue
};

// JSON Lines loader; one dialogue object per line. Validates the
// helper-iff-strategy invariant against the given strategy set.
std::vector<Dialogue> load_dataset(const std::string& path, const StrategySet& strategy_set);

// Inverse of load_dataset, for round-trip checks and fixture generation.
void write_dataset(const std::string& path, const std::vector<Dialogue>& dialogues, const StrategySet& strategy_set);

// Reserved tokens plus all corpus tokens with frequency >= min_count,
// ordered by (descending frequency, lexicographic).
Vocabulary build_vocabulary(const std::vector<Dialogue>& dialogues, const StrategySet& strategy_set, int min_count);

// Fills Utterance::tokens on every utterance.
void tokenize_dialogues(std::vector<Dialogue>& dialogues, const Vocabulary& vocab);

enum class CommonsenseScope { MostRecentSeeker, AllUtterances };

// One example per helper utterance. commonsense, when present, carries the
// verbalized sentences available for each utterance (parallel to
// dialogue.utterances); the scope picks which of them enter the input.
std::vector<TrainingExample> build_examples(
    const Dialogue& dialogue, const Vocabulary& vocab,
    const std::vector<std::vector<std::string>>* commonsense = nullptr,
    CommonsenseScope scope = CommonsenseScope::MostRecentSeeker);

std::size_t count_helper_turns(const std::vector<Dialogue>& dialogues);

}  // namespace steerdial
