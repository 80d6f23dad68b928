#include "steerdial/corpus.hpp"

#include "steerdial/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace steerdial {

using nlohmann::json;

StrategySet::StrategySet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    std::set<std::string> seen;
    for (const std::string& l : labels_) {
        if (l.empty()) throw ValidationError("<strategy set>", 0, "empty strategy name");
        if (!seen.insert(l).second) throw ValidationError("<strategy set>", 0, "duplicate strategy name: " + l);
    }
}

StrategySet StrategySet::default_set() {
    return StrategySet({"Question", "Restatement or Paraphrasing", "Reflection of feelings", "Self-disclosure",
                        "Affirmation and Reassurance", "Providing Suggestions", "Information", "Others"});
}

std::int32_t StrategySet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == name) return std::int32_t(i);
    }
    return -1;
}

namespace {

Dialogue parse_dialogue(const json& j, std::size_t line_no, const StrategySet& strategy_set,
                        std::set<std::string>& seen_ids) {
    if (!j.is_object()) throw ParseError(line_no, "dialogue line is not a JSON object");
    Dialogue d;
    try {
        d.id = j.at("id").get<std::string>();
        d.situation = j.at("situation").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(line_no, e.what());
    }
    if (!seen_ids.insert(d.id).second) throw ValidationError(d.id, 0, "duplicate dialogue id");
    const auto utt_it = j.find("utterances");
    if (utt_it == j.end() || !utt_it->is_array() || utt_it->empty())
        throw ValidationError(d.id, 0, "utterances list missing or empty");
    std::size_t idx = 0;
    for (const json& ju : *utt_it) {
        Utterance u;
        std::string role;
        try {
            role = ju.at("role").get<std::string>();
            u.text = ju.at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        if (role == "seeker") {
            u.role = SpeakerRole::Seeker;
            if (ju.contains("strategy")) throw ValidationError(d.id, idx, "seeker utterance carries a strategy");
        } else if (role == "helper") {
            u.role = SpeakerRole::Helper;
            if (!ju.contains("strategy")) throw ValidationError(d.id, idx, "helper utterance missing strategy");
            const std::string name = ju.at("strategy").get<std::string>();
            const std::int32_t s = strategy_set.index_of(name);
            if (s < 0) throw ValidationError(d.id, idx, "unknown strategy name: " + name);
            u.strategy = StrategyLabel{s};
        } else {
            throw ValidationError(d.id, idx, "unknown role: " + role);
        }
        d.utterances.push_back(std::move(u));
        ++idx;
    }
    return d;
}

}  // namespace

std::vector<Dialogue> load_dataset(const std::string& path, const StrategySet& strategy_set) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::vector<Dialogue> dialogues;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(line_no, "malformed JSON");
        dialogues.push_back(parse_dialogue(j, line_no, strategy_set, seen_ids));
    }
    return dialogues;
}

void write_dataset(const std::string& path, const std::vector<Dialogue>& dialogues, const StrategySet& strategy_set) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    for (const Dialogue& d : dialogues) {
        json ju = json::array();
        for (const Utterance& u : d.utterances) {
            json j{{"role", u.role == SpeakerRole::Seeker ? "seeker" : "helper"}, {"text", u.text}};
            if (u.strategy) j["strategy"] = strategy_set.name(u.strategy->index);
            ju.push_back(std::move(j));
        }
        out << json{{"id", d.id}, {"situation", d.situation}, {"utterances", std::move(ju)}}.dump() << "\n";
    }
}

Vocabulary build_vocabulary(const std::vector<Dialogue>& dialogues, const StrategySet& strategy_set, int min_count) {
    if (dialogues.empty()) throw EmptyCorpusError();
    std::map<std::string, std::size_t> freq;
    auto count = [&](const std::string& text) {
        for (const std::string& w : tokenize_words(text)) ++freq[w];
    };
    for (const Dialogue& d : dialogues) {
        count(d.situation);
        for (const Utterance& u : d.utterances) count(u.text);
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [tok, n] : freq) {
        if (n >= std::size_t(min_count)) kept.emplace_back(tok, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab(strategy_set.labels());
    for (const auto& [tok, n] : kept) vocab.add_token(tok);
    return vocab;
}

void tokenize_dialogues(std::vector<Dialogue>& dialogues, const Vocabulary& vocab) {
    for (Dialogue& d : dialogues) {
        for (Utterance& u : d.utterances) u.tokens = tokenize(u.text, vocab);
    }
}

std::vector<TrainingExample> build_examples(const Dialogue& dialogue, const Vocabulary& vocab,
                                            const std::vector<std::vector<std::string>>* commonsense,
                                            CommonsenseScope scope) {
    std::vector<TrainingExample> examples;
    const TokenSequence situation_tokens = tokenize(dialogue.situation, vocab);
    for (std::size_t t = 0; t < dialogue.utterances.size(); ++t) {
        const Utterance& target = dialogue.utterances[t];
        if (target.role != SpeakerRole::Helper) continue;

        TrainingExample ex;
        ex.dialogue_id = dialogue.id;
        ex.turn_index = t;
        ex.gold_strategy = *target.strategy;

        ex.input.push_back(Vocabulary::kCls);
        ex.input.insert(ex.input.end(), situation_tokens.begin(), situation_tokens.end());
        for (std::size_t i = 0; i < t; ++i) {
            ex.input.push_back(Vocabulary::kSep);
            const TokenSequence toks = tokenize(dialogue.utterances[i].text, vocab);
            ex.input.insert(ex.input.end(), toks.begin(), toks.end());
        }

        if (commonsense) {
            // Pick the utterances whose verbalized sentences enter this input.
            std::vector<std::size_t> sources;
            if (scope == CommonsenseScope::AllUtterances) {
                for (std::size_t i = 0; i < t; ++i) sources.push_back(i);
            } else {
                for (std::size_t i = t; i-- > 0;) {
                    if (dialogue.utterances[i].role == SpeakerRole::Seeker) {
                        sources.push_back(i);
                        break;
                    }
                }
            }
            TokenSequence cs_tokens;
            for (std::size_t i : sources) {
                if (i >= commonsense->size()) continue;
                for (const std::string& sentence : (*commonsense)[i]) {
                    const TokenSequence toks = tokenize(sentence, vocab);
                    cs_tokens.insert(cs_tokens.end(), toks.begin(), toks.end());
                }
            }
            if (!cs_tokens.empty()) {
                ex.input.push_back(Vocabulary::kSep);
                ex.input.insert(ex.input.end(), cs_tokens.begin(), cs_tokens.end());
            }
        }

        ex.target.push_back(vocab.marker_id(ex.gold_strategy.index));
        const TokenSequence toks = tokenize(target.text, vocab);
        ex.target.insert(ex.target.end(), toks.begin(), toks.end());
        ex.target.push_back(Vocabulary::kEos);
        examples.push_back(std::move(ex));
    }
    return examples;
}

std::size_t count_helper_turns(const std::vector<Dialogue>& dialogues) {
    std::size_t n = 0;
    for (const Dialogue& d : dialogues) {
        for (const Utterance& u : d.utterances) {
            if (u.role == SpeakerRole::Helper) ++n;
        }
    }
    return n;
}

}  // namespace steerdial
