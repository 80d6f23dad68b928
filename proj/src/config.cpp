#include "steerdial/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "steerdial/errors.hpp"

namespace steerdial {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& path, const std::string& msg) { throw ParseError(path, 0, msg); }

void check_keys(const std::string& path, const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) bad(path, "unknown key \"" + key + "\" in " + where);
    }
}

template <typename T>
T field(const std::string& path, const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        bad(path, std::string("invalid value for \"") + key + "\"");
    }
}

std::string required_string(const std::string& path, const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj.at(key).is_string()) bad(path, where + " needs a string \"" + key + "\"");
    return obj.at(key).get<std::string>();
}

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
}

TrainSection parse_train(const std::string& path, const json& obj, const std::string& where,
                         const TrainSection& defaults) {
    check_keys(path, obj, where, {"alpha", "learning_rate", "epochs", "batch_size"});
    TrainSection out = defaults;
    out.alpha = field(path, obj, "alpha", out.alpha);
    out.learning_rate = field(path, obj, "learning_rate", out.learning_rate);
    out.epochs = Index(field<std::int64_t>(path, obj, "epochs", out.epochs));
    out.batch_size = Index(field<std::int64_t>(path, obj, "batch_size", out.batch_size));
    if (out.learning_rate <= 0) bad(path, where + ": learning_rate must be positive");
    if (out.epochs < 1) bad(path, where + ": epochs must be at least 1");
    if (out.batch_size < 1) bad(path, where + ": batch_size must be at least 1");
    if (out.alpha < 0) bad(path, where + ": alpha must be non-negative");
    return out;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) bad(path, "invalid JSON");
    if (!j.is_object()) bad(path, "config root must be an object");

    check_keys(path, j, "config",
               {"data", "strategies", "commonsense", "model", "classifier", "discriminator", "training", "decoding",
                "out_dir", "seed"});

    const fs::path base = fs::path(path).parent_path();
    RunConfig cfg;

    if (!j.contains("data") || !j.at("data").is_object()) bad(path, "config needs a \"data\" object");
    {
        const json& d = j.at("data");
        check_keys(path, d, "data", {"train", "dev", "test", "min_count"});
        cfg.data.train = resolve(base, required_string(path, d, "train", "data"));
        cfg.data.dev = resolve(base, required_string(path, d, "dev", "data"));
        cfg.data.test = resolve(base, required_string(path, d, "test", "data"));
        cfg.data.min_count = int(field<std::int64_t>(path, d, "min_count", 1));
        if (cfg.data.min_count < 1) bad(path, "data.min_count must be at least 1");
    }

    if (j.contains("strategies")) {
        if (!j.at("strategies").is_array() || j.at("strategies").empty())
            bad(path, "strategies must be a non-empty array of names");
        cfg.strategies.clear();
        for (const auto& s : j.at("strategies")) {
            if (!s.is_string() || s.get<std::string>().empty()) bad(path, "strategies entries must be non-empty strings");
            cfg.strategies.push_back(s.get<std::string>());
        }
        std::set<std::string> unique(cfg.strategies.begin(), cfg.strategies.end());
        if (unique.size() != cfg.strategies.size()) bad(path, "strategies must be unique");
    }

    if (j.contains("commonsense")) {
        const json& c = j.at("commonsense");
        check_keys(path, c, "commonsense",
                   {"enabled", "backend", "cache_path", "endpoint", "timeout_ms", "relations", "scope"});
        cfg.commonsense.enabled = field(path, c, "enabled", false);
        cfg.commonsense.backend = field<std::string>(path, c, "backend", "cache");
        if (cfg.commonsense.backend != "cache" && cfg.commonsense.backend != "remote")
            bad(path, "commonsense.backend must be \"cache\" or \"remote\"");
        cfg.commonsense.cache_path = resolve(base, field<std::string>(path, c, "cache_path", ""));
        cfg.commonsense.endpoint = field<std::string>(path, c, "endpoint", "");
        cfg.commonsense.timeout_ms = int(field<std::int64_t>(path, c, "timeout_ms", 3000));
        if (cfg.commonsense.timeout_ms < 1) bad(path, "commonsense.timeout_ms must be positive");
        if (c.contains("relations")) {
            if (!c.at("relations").is_array()) bad(path, "commonsense.relations must be an array");
            for (const auto& r : c.at("relations")) {
                if (!r.is_string() || relation_index(r.get<std::string>()) < 0)
                    bad(path, "unknown commonsense relation " + r.dump());
                cfg.commonsense.relations.push_back(Relation(relation_index(r.get<std::string>())));
            }
        }
        const std::string scope = field<std::string>(path, c, "scope", "most_recent_seeker");
        if (scope == "most_recent_seeker") {
            cfg.commonsense.scope = CommonsenseScope::MostRecentSeeker;
        } else if (scope == "all_utterances") {
            cfg.commonsense.scope = CommonsenseScope::AllUtterances;
        } else {
            bad(path, "commonsense.scope must be \"most_recent_seeker\" or \"all_utterances\"");
        }
        if (cfg.commonsense.enabled) {
            if (cfg.commonsense.cache_path.empty() && cfg.commonsense.backend == "cache")
                bad(path, "commonsense.cache_path is required for the cache backend");
            if (cfg.commonsense.backend == "remote" && cfg.commonsense.endpoint.empty())
                bad(path, "commonsense.endpoint is required for the remote backend");
            if (cfg.commonsense.relations.empty()) bad(path, "commonsense.relations must select at least one relation");
        }
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(path, m, "model", {"embedding_dim", "hidden_dim", "encoder_layers", "decoder_layers"});
        cfg.model.embedding_dim = Index(field<std::int64_t>(path, m, "embedding_dim", cfg.model.embedding_dim));
        cfg.model.hidden_dim = Index(field<std::int64_t>(path, m, "hidden_dim", cfg.model.hidden_dim));
        cfg.model.encoder_layers = Index(field<std::int64_t>(path, m, "encoder_layers", cfg.model.encoder_layers));
        cfg.model.decoder_layers = Index(field<std::int64_t>(path, m, "decoder_layers", cfg.model.decoder_layers));
        if (cfg.model.embedding_dim < 1 || cfg.model.hidden_dim < 1 || cfg.model.encoder_layers < 1 ||
            cfg.model.decoder_layers < 1)
            bad(path, "model dimensions must be at least 1");
    }

    for (auto [key, dims] : {std::pair{"classifier", &cfg.classifier}, std::pair{"discriminator", &cfg.discriminator}}) {
        if (!j.contains(key)) continue;
        const json& m = j.at(key);
        check_keys(path, m, key, {"embedding_dim", "hidden_dim"});
        dims->embedding_dim = Index(field<std::int64_t>(path, m, "embedding_dim", dims->embedding_dim));
        dims->hidden_dim = Index(field<std::int64_t>(path, m, "hidden_dim", dims->hidden_dim));
        if (dims->embedding_dim < 1 || dims->hidden_dim < 1)
            bad(path, std::string(key) + " dimensions must be at least 1");
    }

    if (j.contains("training")) {
        const json& t = j.at("training");
        check_keys(path, t, "training", {"lm", "classifier", "discriminator"});
        if (t.contains("lm")) cfg.train_lm = parse_train(path, t.at("lm"), "training.lm", cfg.train_lm);
        if (t.contains("classifier"))
            cfg.train_classifier = parse_train(path, t.at("classifier"), "training.classifier", cfg.train_classifier);
        if (t.contains("discriminator"))
            cfg.train_discriminator =
                parse_train(path, t.at("discriminator"), "training.discriminator", cfg.train_discriminator);
    }

    if (j.contains("decoding")) {
        const json& d = j.at("decoding");
        check_keys(path, d, "decoding", {"mode", "sample_k", "fudge_candidates", "lambda", "max_length"});
        const std::string mode = field<std::string>(path, d, "mode", "greedy");
        if (mode == "greedy") {
            cfg.decoding.mode = DecodingConfig::Mode::Greedy;
        } else if (mode == "top_k_sample") {
            cfg.decoding.mode = DecodingConfig::Mode::TopKSample;
        } else {
            bad(path, "decoding.mode must be \"greedy\" or \"top_k_sample\"");
        }
        cfg.decoding.sample_k = Index(field<std::int64_t>(path, d, "sample_k", cfg.decoding.sample_k));
        cfg.decoding.fudge_candidates =
            Index(field<std::int64_t>(path, d, "fudge_candidates", cfg.decoding.fudge_candidates));
        cfg.decoding.lambda = field(path, d, "lambda", cfg.decoding.lambda);
        cfg.decoding.max_length = Index(field<std::int64_t>(path, d, "max_length", cfg.decoding.max_length));
        if (cfg.decoding.sample_k < 1) bad(path, "decoding.sample_k must be at least 1");
        if (cfg.decoding.fudge_candidates < 1) bad(path, "decoding.fudge_candidates must be at least 1");
        if (cfg.decoding.lambda < 0) bad(path, "decoding.lambda must be non-negative");
        if (cfg.decoding.max_length < 1) bad(path, "decoding.max_length must be at least 1");
    }

    cfg.out_dir = resolve(base, field<std::string>(path, j, "out_dir", "out"));
    cfg.seed = field<std::uint64_t>(path, j, "seed", 1);
    cfg.decoding.seed = cfg.seed;

    // the strategy set constructor enforces uniqueness and non-emptiness
    StrategySet check(cfg.strategies);
    (void)check;
    return cfg;
}

}  // namespace steerdial
