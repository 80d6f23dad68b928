#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "steerdial/commonsense.hpp"
#include "steerdial/config.hpp"
#include "steerdial/corpus.hpp"
#include "steerdial/decoding.hpp"
#include "steerdial/eval.hpp"
#include "steerdial/lm.hpp"
#include "steerdial/rng.hpp"
#include "steerdial/strategy.hpp"

#include "helpers.hpp"

// Acceptance suite: each case prints one "criterion N: PASS/FAIL" line.
// End-to-end criteria drive the real binary against the bundled fixture.

using namespace steerdial;
using steerdial::testing::small_vocab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kBin = STEERDIAL_BIN;
const fs::path kData = STEERDIAL_DATA_DIR;

const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "steerdial_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool run_cmd(const std::string& args) {
    const std::string cmd = kBin + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

bool report(int n, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s (%s)\n", n, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    return ok;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// The fixture corpus keys every strategy to one marker word.
const std::map<std::string, std::string>& markers() {
    static const std::map<std::string, std::string> m = {
        {"Question", "what"},
        {"Providing Suggestions", "should"},
        {"Self-disclosure", "myself"},
        {"Affirmation and Reassurance", "okay"},
    };
    return m;
}

// Fraction of generated turns whose text contains the marker word of the
// strategy that conditioned them.
double marker_consistency(const fs::path& generation_file) {
    const std::vector<GenerationRow> rows = read_generation_file(generation_file.string());
    if (rows.empty()) return 0;
    std::size_t hits = 0;
    for (const GenerationRow& row : rows) {
        const std::string& marker = markers().at(row.strategy_used);
        std::istringstream words(row.text);
        std::string w;
        bool found = false;
        while (words >> w)
            if (w == marker) found = true;
        hits += found ? 1 : 0;
    }
    return double(hits) / double(rows.size());
}

double report_bleu2(const fs::path& report_file) {
    json j = json::parse(slurp(report_file), nullptr, false);
    if (j.is_discarded() || !j.contains("bleu_2")) return -1;
    return j.at("bleu_2").get<double>();
}

std::string fixture_config() { return (kData / "configs" / "fixture.json").string(); }

// Copy of the fixture config with data paths made absolute and the given
// overrides applied on top.
fs::path patched_config(const std::string& name, const json& overrides) {
    json j = json::parse(slurp(fixture_config()));
    j["data"]["train"] = (kData / "fixture" / "train.jsonl").string();
    j["data"]["dev"] = (kData / "fixture" / "dev.jsonl").string();
    j["data"]["test"] = (kData / "fixture" / "test.jsonl").string();
    for (const auto& [key, value] : overrides.items()) {
        if (value.is_object())
            for (const auto& [k2, v2] : value.items()) j[key][k2] = v2;
        else
            j[key] = value;
    }
    const fs::path path = scratch() / name;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    return path;
}

// One trained fixture pipeline shared by the end-to-end criteria. The first
// caller pays for it; timings cover the whole train-generate-evaluate chain.
struct SharedRun {
    bool ok = false;
    fs::path dir;
    double seconds = 0;
    double consistency_fudge = 0;
    double consistency_plain = 0;
    double bleu2_fudge = -1;
    double bleu2_plain = -1;
};

const SharedRun& shared_run() {
    static const SharedRun run = [] {
        SharedRun r;
        r.dir = scratch() / "fixture_run";
        const std::string base = " --config \"" + fixture_config() + "\" --out \"" + r.dir.string() + "\"";
        const auto start = std::chrono::steady_clock::now();
        if (!run_cmd("prepare" + base)) return r;
        if (!run_cmd("train --target lm" + base)) return r;
        if (!run_cmd("train --target discriminator" + base)) return r;

        if (!run_cmd("generate --strategy-source oracle --fudge" + base)) return r;
        if (!run_cmd("evaluate" + base)) return r;
        r.consistency_fudge = marker_consistency(r.dir / "generation.jsonl");
        r.bleu2_fudge = report_bleu2(r.dir / "report.json");

        if (!run_cmd("generate --strategy-source oracle" + base)) return r;
        if (!run_cmd("evaluate" + base)) return r;
        r.consistency_plain = marker_consistency(r.dir / "generation.jsonl");
        r.bleu2_plain = report_bleu2(r.dir / "report.json");

        r.seconds = elapsed_seconds(start);
        r.ok = true;
        return r;
    }();
    return run;
}

}  // namespace

TEST_CASE("criterion 1") {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(2026);
    double max_diff = 0;
    for (int c = 0; c < 50; ++c) {
        Vocabulary vocab = small_vocab(4 + rng.below(8));
        ClassifierConfig cfg;
        cfg.vocab_size = Index(vocab.size());
        cfg.embedding_dim = Index(2 + rng.below(5));
        cfg.hidden_dim = Index(2 + rng.below(5));
        cfg.strategy_count = Index(vocab.strategy_count());
        cfg.seed = rng.next_u64();
        RecurrentClassifier disc(cfg, vocab);

        TokenSequence tokens;
        const std::size_t len = 1 + rng.below(20);
        for (std::size_t i = 0; i < len; ++i) tokens.push_back(TokenId(rng.below(vocab.size())));
        const StrategyLabel gold{std::int32_t(rng.below(vocab.strategy_count()))};

        // brute force: one independent forward pass per prefix
        double oracle = 0;
        for (std::size_t end = 1; end <= tokens.size(); ++end) {
            Vector state = disc.initial();
            for (std::size_t t = 0; t < end; ++t) state = disc.advance(state, tokens[t]);
            oracle += -std::log(disc.distribution(state)[gold.index]);
        }
        max_diff = std::max(max_diff, std::abs(oracle - double(disc.prefix_loss(tokens, gold))));
    }
    const double secs = elapsed_seconds(start);
    const bool ok = max_diff < 1e-10 && secs < 10;
    CHECK(report(1, ok, "prefix loss vs brute force, max diff " + fmt2(max_diff * 1e12) + "e-12 over 50 cases, " +
                            fmt2(secs) + "s"));
}

TEST_CASE("criterion 2") {
    const auto start = std::chrono::steady_clock::now();
    const double step = 1e-4;
    double max_rel = 0;

    const auto track = [&max_rel](double fd, double an) {
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
        max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    };

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        Vocabulary vocab = small_vocab(4 + rng.below(7));

        ModelConfig mcfg = steerdial::testing::small_config(vocab, seed, Index(2 + rng.below(7)),
                                                            Index(2 + rng.below(7)), Index(1 + rng.below(2)),
                                                            Index(1 + rng.below(2)));
        EncoderDecoderLm lm(mcfg, vocab);
        TrainingExample ex = steerdial::testing::random_example(rng, vocab);
        const Scalar alpha = 0.7;
        lm.zero_gradients();
        lm.accumulate_gradients(ex, alpha);
        for (auto& p : lm.params()) {
            for (Index j = 0; j < p.value->cols(); ++j) {
                for (Index i = 0; i < p.value->rows(); ++i) {
                    const Scalar saved = (*p.value)(i, j);
                    (*p.value)(i, j) = saved + step;
                    const Scalar up = lm.joint_loss(ex, alpha);
                    (*p.value)(i, j) = saved - step;
                    const Scalar down = lm.joint_loss(ex, alpha);
                    (*p.value)(i, j) = saved;
                    track((up - down) / (2 * step), (*p.grad)(i, j));
                }
            }
        }

        ClassifierConfig ccfg;
        ccfg.vocab_size = Index(vocab.size());
        ccfg.embedding_dim = Index(2 + rng.below(7));
        ccfg.hidden_dim = Index(2 + rng.below(7));
        ccfg.strategy_count = Index(vocab.strategy_count());
        ccfg.seed = seed + 77;
        RecurrentClassifier disc(ccfg, vocab);
        TokenSequence tokens;
        const std::size_t len = 2 + rng.below(8);
        for (std::size_t i = 0; i < len; ++i) tokens.push_back(TokenId(rng.below(vocab.size())));
        const StrategyLabel gold{std::int32_t(rng.below(vocab.strategy_count()))};
        disc.zero_gradients();
        disc.accumulate_gradients(tokens, gold, true);
        for (auto& p : disc.params()) {
            for (Index j = 0; j < p.value->cols(); ++j) {
                for (Index i = 0; i < p.value->rows(); ++i) {
                    const Scalar saved = (*p.value)(i, j);
                    (*p.value)(i, j) = saved + step;
                    const Scalar up = disc.prefix_loss(tokens, gold);
                    (*p.value)(i, j) = saved - step;
                    const Scalar down = disc.prefix_loss(tokens, gold);
                    (*p.value)(i, j) = saved;
                    track((up - down) / (2 * step), (*p.grad)(i, j));
                }
            }
        }
    }

    const double secs = elapsed_seconds(start);
    const bool ok = max_rel < 1e-4 && secs < 60;
    CHECK(report(2, ok, "lm and discriminator gradients, max relative error " + fmt2(max_rel * 1e6) + "e-6, 10 seeds, " +
                            fmt2(secs) + "s"));
}

TEST_CASE("criterion 3") {
    const RunConfig cfg = load_run_config(fixture_config());
    const StrategySet strategies = cfg.strategy_set();
    std::vector<Dialogue> dialogues = load_dataset(cfg.data.train, strategies);
    dialogues.resize(30);  // fixture subset
    const Vocabulary vocab = build_vocabulary(dialogues, strategies, 1);
    tokenize_dialogues(dialogues, vocab);
    std::vector<TrainingExample> examples;
    for (const Dialogue& d : dialogues) {
        auto ex = build_examples(d, vocab);
        examples.insert(examples.end(), ex.begin(), ex.end());
    }

    ModelConfig mcfg;
    mcfg.vocab_size = Index(vocab.size());
    mcfg.embedding_dim = 8;
    mcfg.hidden_dim = 8;
    mcfg.strategy_count = Index(strategies.size());
    mcfg.seed = 5;

    TrainingConfig tc;
    tc.alpha = 0;
    tc.learning_rate = 0.1;
    tc.epochs = 5;
    tc.batch_size = 8;
    tc.seed = 5;

    EncoderDecoderLm joint(mcfg, vocab);
    const TrainStats joint_stats = train_lm(joint, examples, tc, TrainMode::Joint);
    EncoderDecoderLm plain(mcfg, vocab);
    const TrainStats plain_stats = train_lm(plain, examples, tc, TrainMode::GenerationOnly);

    bool ok = joint_stats.epochs.size() == 5 && plain_stats.epochs.size() == 5;
    std::size_t matched = 0;
    for (std::size_t e = 0; ok && e < joint_stats.epochs.size(); ++e) {
        if (joint_stats.epochs[e].param_hash == plain_stats.epochs[e].param_hash) ++matched;
    }
    ok = ok && matched == 5 && joint.param_hash() == plain.param_hash();
    CHECK(report(3, ok, "alpha=0 joint vs generation-only, " + std::to_string(matched) +
                            "/5 epoch hashes identical on " + std::to_string(examples.size()) + " examples"));
}

TEST_CASE("criterion 4") {
    const SharedRun& run = shared_run();
    bool ok = run.ok;
    std::string detail = "fixture run failed";
    if (ok) {
        std::size_t vocab_size = 0;
        {
            std::ifstream in(run.dir / "vocab.txt");
            std::string line;
            while (std::getline(in, line)) ++vocab_size;
        }
        json overrides;
        overrides["decoding"] = {{"mode", "top_k_sample"}, {"sample_k", 5}, {"lambda", 0.0},
                                 {"fudge_candidates", vocab_size}};
        const fs::path cfg = patched_config("identity.json", overrides);
        const std::string base = " --config \"" + cfg.string() + "\" --out \"" + run.dir.string() + "\"";
        ok = run_cmd("generate --strategy-source oracle" + base);
        const std::string plain_bytes = slurp(run.dir / "generation.jsonl");
        ok = ok && run_cmd("generate --strategy-source oracle --fudge" + base);
        const std::string fudge_bytes = slurp(run.dir / "generation.jsonl");
        ok = ok && !plain_bytes.empty() && plain_bytes == fudge_bytes;
        detail = "lambda=0, k_f=" + std::to_string(vocab_size) + " sampling vs no discriminator, " +
                 (plain_bytes == fudge_bytes ? "byte-identical" : "differs") + ", " +
                 std::to_string(plain_bytes.size()) + " bytes";
    }
    CHECK(report(4, ok, detail));
}

TEST_CASE("criterion 5") {
    const SharedRun& run = shared_run();
    const bool ok = run.ok && run.consistency_fudge >= 0.90 && run.consistency_plain <= 0.40 &&
                    run.bleu2_fudge >= run.bleu2_plain && run.seconds <= 600;
    CHECK(report(5, ok, "fudge consistency " + fmt2(run.consistency_fudge) + " >= 0.90, uncontrolled " +
                            fmt2(run.consistency_plain) + " <= 0.40, bleu-2 " + fmt2(run.bleu2_fudge) + " vs " +
                            fmt2(run.bleu2_plain) + ", end-to-end " + fmt2(run.seconds) + "s"));
}

TEST_CASE("criterion 6") {
    const SharedRun& run = shared_run();
    bool ok = run.ok;
    std::string detail = "fixture run failed";
    if (ok) {
        std::vector<double> consistency;
        for (double lambda : {0.0, 1.0, 4.0}) {
            json overrides;
            overrides["decoding"] = {{"lambda", lambda}};
            const fs::path cfg = patched_config("lambda" + std::to_string(int(lambda)) + ".json", overrides);
            ok = ok && run_cmd("generate --strategy-source oracle --fudge --config \"" + cfg.string() +
                               "\" --out \"" + run.dir.string() + "\"");
            consistency.push_back(ok ? marker_consistency(run.dir / "generation.jsonl") : -1);
        }
        ok = ok && consistency[0] <= consistency[1] && consistency[1] <= consistency[2];
        detail = "consistency " + fmt2(consistency[0]) + " / " + fmt2(consistency[1]) + " / " + fmt2(consistency[2]) +
                 " at lambda 0 / 1 / 4";
    }
    CHECK(report(6, ok, detail));
}

TEST_CASE("criterion 7") {
    // ids stand in for words; the metrics only compare token identity
    const TokenId the = 10, cat = 11, a = 20, b = 21, c = 22, d = 23, e = 24;
    bool ok = true;

    const double bleu_rep = bleu_n({{the, the, the}}, {{the, cat}}, 1);
    ok = ok && std::abs(bleu_rep - 1.0 / 3.0) < 1e-9;

    const double rouge = rouge_l({{a, b, c, d}}, {{a, c, d, e}});
    ok = ok && std::abs(rouge - 0.75) < 1e-9;

    const std::vector<TokenSequence> same = {{a, b, c, d}};
    for (int n = 1; n <= 4; ++n) ok = ok && std::abs(bleu_n(same, same, n) - 1.0) < 1e-9;
    ok = ok && std::abs(rouge_l(same, same) - 1.0) < 1e-9;
    ok = ok && std::abs(strategy_accuracy({{2}}, {{2}}) - 1.0) < 1e-9;

    CHECK(report(7, ok, "bleu-1 repeat " + fmt2(bleu_rep) + " = 1/3, rouge-l " + fmt2(rouge) +
                            " = 0.75, identical pairs = 1.0"));
}

TEST_CASE("criterion 8") {
    const std::string got = verbalize({Relation::xReact, "depressed"}, TemplateTable::default_table());
    const bool ok = got == "As a result, PersonX feels depressed.";
    CHECK(report(8, ok, "verbalize(xReact, depressed) -> \"" + got + "\""));
}

TEST_CASE("criterion 9") {
    const fs::path out = scratch() / "golden_check";
    const std::string cfg = (kData / "configs" / "fixture_commonsense.json").string();
    bool ok = run_cmd("prepare --config \"" + cfg + "\" --out \"" + out.string() + "\"");
    const std::string produced = slurp(out / "train_examples.jsonl");
    const std::string golden = slurp(kData / "golden" / "train_examples.jsonl");
    ok = ok && !golden.empty() && produced == golden;
    CHECK(report(9, ok, "train examples vs committed golden, " + std::to_string(produced.size()) + " vs " +
                            std::to_string(golden.size()) + " bytes, " +
                            (produced == golden ? "byte-identical" : "differs")));
}

TEST_CASE("criterion 10") {
    json overrides;
    overrides["training"] = {{"lm", {{"alpha", 1.0}, {"learning_rate", 0.2}, {"epochs", 2}, {"batch_size", 8}}},
                             {"classifier", {{"learning_rate", 0.3}, {"epochs", 10}, {"batch_size", 8}}},
                             {"discriminator", {{"learning_rate", 0.3}, {"epochs", 10}, {"batch_size", 8}}}};
    overrides["decoding"] = {{"mode", "top_k_sample"}, {"sample_k", 5}};
    const fs::path cfg = patched_config("determinism.json", overrides);
    const fs::path dir = scratch() / "det_run";
    const std::string base = " --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"";

    const std::vector<std::string> commands = {
        "prepare" + base,
        "train --target all" + base,
        "generate --strategy-source oracle --fudge" + base,
        "evaluate" + base,
    };
    const std::vector<std::string> artifacts = {
        "vocab.txt",      "train_examples.jsonl",    "dev_examples.jsonl",
        "test_examples.jsonl", "lm.ckpt",            "classifier.ckpt",
        "discriminator.ckpt",  "lm_trace.jsonl",     "classifier_trace.jsonl",
        "discriminator_trace.jsonl", "generation.jsonl", "report.json",
    };

    bool ok = true;
    std::map<std::string, std::string> first;
    for (const std::string& c : commands) ok = ok && run_cmd(c);
    for (const std::string& a : artifacts) {
        first[a] = slurp(dir / a);
        ok = ok && !first[a].empty();
    }
    std::size_t identical = 0;
    if (ok) {
        for (const std::string& c : commands) ok = ok && run_cmd(c);
        for (const std::string& a : artifacts)
            if (!slurp(dir / a).empty() && slurp(dir / a) == first[a]) ++identical;
        ok = ok && identical == artifacts.size();
    }
    CHECK(report(10, ok, "rerun of prepare/train/generate/evaluate, " + std::to_string(identical) + "/" +
                             std::to_string(artifacts.size()) + " artifacts byte-identical"));
}
