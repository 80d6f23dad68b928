// Seeded generator for the synthetic fixture corpus: four strategies, each
// tied to a marker word that appears in every helper utterance of that
// strategy, plus a commonsense entailment cache covering every utterance.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steerdial/commonsense.hpp"
#include "steerdial/corpus.hpp"
#include "steerdial/rng.hpp"

namespace {

using namespace steerdial;

const std::vector<std::string> kTopics = {
    "garden", "exam",    "kitchen", "travel", "budget", "garage", "harvest", "concert",
    "library", "march",  "painting", "puzzle", "recipe", "river",  "robot",   "saddle",
    "sewing",  "skating", "soccer",  "spice",  "summit", "tunnel", "violin",  "winter",
};

const std::vector<std::string> kSituations = {
    "my {} plan fell apart last week .",
    "i keep losing sleep over the {} .",
    "the {} has been stressing me out for days .",
    "everything about the {} feels heavy right now .",
};

const std::vector<std::string> kSeekerLines = {
    "the {} trouble keeps getting worse .",
    "i cannot stop thinking about the {} .",
    "nobody around here understands the {} mess .",
    "today the {} made me feel small again .",
};

struct StrategySpec {
    std::string name;
    std::string marker;
    std::vector<std::string> templates;
};

// Every template starts with the shared word "well" followed directly by the
// strategy's marker word, which appears in no other strategy's text. The
// marker is therefore always the first token that tells the strategies
// apart, the earliest point where a prefix discriminator can act.
const std::vector<StrategySpec> kStrategies = {
    {"Question", "what",
     {"well what happened with the {} today ?", "well what part of the {} hurts the most ?"}},
    {"Providing Suggestions", "should",
     {"well should we try one small {} step ?", "well should we set the {} aside tonight ?"}},
    {"Self-disclosure", "myself",
     {"well myself , i struggled with a {} once .", "well myself , i remember a {} like that ."}},
    {"Affirmation and Reassurance", "okay",
     {"well okay , feeling torn about the {} is fair .", "well okay , the {} will pass in time ."}},
};

std::string fill(const std::string& tpl, const std::string& topic) {
    const auto pos = tpl.find("{}");
    return tpl.substr(0, pos) + topic + tpl.substr(pos + 2);
}

Dialogue make_dialogue(Rng& rng, const std::string& split, int serial, bool cycle_topics) {
    Dialogue d;
    char id[32];
    std::snprintf(id, sizeof id, "%s-%03d", split.c_str(), serial);
    d.id = id;
    const std::string& topic =
        cycle_topics ? kTopics[std::size_t(serial) % kTopics.size()] : kTopics[rng.below(kTopics.size())];
    d.situation = fill(kSituations[rng.below(kSituations.size())], topic);
    const int helper_turns = 1 + int(rng.below(3));
    for (int t = 0; t < helper_turns; ++t) {
        Utterance seeker;
        seeker.role = SpeakerRole::Seeker;
        seeker.text = fill(kSeekerLines[rng.below(kSeekerLines.size())], topic);
        d.utterances.push_back(seeker);

        const std::size_t s = rng.below(kStrategies.size());
        Utterance helper;
        helper.role = SpeakerRole::Helper;
        helper.strategy = StrategyLabel{std::int32_t(s)};
        helper.text = fill(kStrategies[s].templates[rng.below(kStrategies[s].templates.size())], topic);
        d.utterances.push_back(helper);
    }
    return d;
}

std::vector<CommonsenseTuple> tuples_for(const std::string& topic) {
    return {
        {Relation::oEffect, "check on the " + topic},
        {Relation::oReact, "concerned"},
        {Relation::oWant, "to hear more"},
        {Relation::xAttr, "tired"},
        {Relation::xEffect, "loses focus"},
        {Relation::xIntent, "to fix the " + topic},
        {Relation::xNeed, "a calm evening"},
        {Relation::xReact, "worried about the " + topic},
        {Relation::xReason, "the " + topic + " went wrong"},
        {Relation::xWant, "to talk it over"},
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic fixture corpus generator"};
    std::string out_dir = "data/fixture";
    std::uint64_t seed = 7;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    std::filesystem::create_directories(out_dir);

    std::vector<std::string> labels;
    for (const StrategySpec& s : kStrategies) labels.push_back(s.name);
    const StrategySet strategies(labels);

    const std::map<std::string, int> split_sizes = {{"train", 200}, {"dev", 30}, {"test", 40}};
    std::map<std::string, std::string> text_to_topic;  // utterance text -> topic, for the cache

    for (const auto& [split, count] : split_sizes) {
        Rng rng(splitmix64(seed ^ fnv1a64(split)));
        std::vector<Dialogue> dialogues;
        for (int i = 0; i < count; ++i) dialogues.push_back(make_dialogue(rng, split, i, split == "train"));
        // Topic recovery for the cache: every utterance names its topic word.
        for (const Dialogue& d : dialogues) {
            for (const Utterance& u : d.utterances) {
                for (const std::string& topic : kTopics) {
                    if (u.text.find(topic) != std::string::npos) {
                        text_to_topic.emplace(u.text, topic);
                        break;
                    }
                }
            }
        }
        const std::string path = out_dir + "/" + split + ".jsonl";
        write_dataset(path, dialogues, strategies);
        std::cout << split << ": " << dialogues.size() << " dialogues -> " << path << '\n';
    }

    // Sanity: the train split must use every topic, situation, seeker line,
    // and helper template so dev/test never hit unknown tokens.
    {
        const std::vector<Dialogue> train = load_dataset(out_dir + "/train.jsonl", strategies);
        std::set<std::string> missing;
        const auto covered = [&train](const std::string& needle) {
            for (const Dialogue& d : train) {
                if (d.situation.find(needle) != std::string::npos) return true;
                for (const Utterance& u : d.utterances)
                    if (u.text.find(needle) != std::string::npos) return true;
            }
            return false;
        };
        for (const std::string& topic : kTopics)
            if (!covered(topic)) missing.insert(topic);
        const auto check_templates = [&](const std::vector<std::string>& templates) {
            for (const std::string& tpl : templates)
                if (!covered(tpl.substr(0, tpl.find("{}")))) missing.insert(tpl);
        };
        check_templates(kSituations);
        check_templates(kSeekerLines);
        for (const StrategySpec& s : kStrategies) check_templates(s.templates);
        if (!missing.empty()) {
            std::cerr << "train split misses " << missing.size() << " surface forms; pick another seed\n";
            return 1;
        }
    }

    const std::string cache_path = out_dir + "/commonsense_cache.jsonl";
    std::filesystem::remove(cache_path);
    CacheBackend cache(cache_path);
    for (const auto& [text, topic] : text_to_topic) cache.put(text, tuples_for(topic));
    std::cout << "cache: " << text_to_topic.size() << " entries -> " << cache_path << '\n';
    return 0;
}
