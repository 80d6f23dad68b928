#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "steerdial/config.hpp"
#include "steerdial/errors.hpp"

using namespace steerdial;
namespace fs = std::filesystem;

namespace {

// Writes `body` to <tmp>/steerdial_config_test/<name> and returns the path.
std::string write_config(const std::string& name, const std::string& body) {
    const fs::path dir = fs::temp_directory_path() / "steerdial_config_test";
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << body;
    return path.string();
}

std::string minimal(const std::string& extra = "") {
    std::string body = R"({"data": {"train": "a.jsonl", "dev": "b.jsonl", "test": "c.jsonl"})";
    if (!extra.empty()) body += ", " + extra;
    body += "}";
    return body;
}

}  // namespace

TEST_CASE("minimal config populates defaults") {
    const std::string path = write_config("min.json", minimal());
    const RunConfig cfg = load_run_config(path);

    const fs::path base = fs::path(path).parent_path();
    CHECK(cfg.data.train == (base / "a.jsonl").string());
    CHECK(cfg.data.dev == (base / "b.jsonl").string());
    CHECK(cfg.data.test == (base / "c.jsonl").string());
    CHECK(cfg.data.min_count == 1);

    CHECK(cfg.strategies == StrategySet::default_set().labels());
    CHECK_FALSE(cfg.commonsense.enabled);
    CHECK(cfg.model.embedding_dim == 16);
    CHECK(cfg.model.hidden_dim == 16);
    CHECK(cfg.train_lm.alpha == doctest::Approx(1.0));
    CHECK(cfg.train_lm.epochs == 10);
    CHECK(cfg.decoding.mode == DecodingConfig::Mode::Greedy);
    CHECK(cfg.decoding.lambda == doctest::Approx(1.0));
    CHECK(cfg.out_dir == (base / "out").string());
    CHECK(cfg.seed == 1);
    CHECK(cfg.decoding.seed == 1);
}

TEST_CASE("full config maps every field") {
    const std::string body = R"({
        "data": {"train": "t.jsonl", "dev": "d.jsonl", "test": "e.jsonl", "min_count": 3},
        "strategies": ["Question", "Self-disclosure"],
        "commonsense": {
            "enabled": true, "backend": "cache", "cache_path": "cache.jsonl",
            "timeout_ms": 500, "relations": ["xReact", "xIntent"], "scope": "all_utterances"
        },
        "model": {"embedding_dim": 24, "hidden_dim": 32, "encoder_layers": 2, "decoder_layers": 3},
        "classifier": {"embedding_dim": 8, "hidden_dim": 9},
        "discriminator": {"embedding_dim": 10, "hidden_dim": 11},
        "training": {
            "lm": {"alpha": 0.5, "learning_rate": 0.2, "epochs": 4, "batch_size": 16},
            "classifier": {"learning_rate": 0.3, "epochs": 7},
            "discriminator": {"epochs": 9}
        },
        "decoding": {"mode": "top_k_sample", "sample_k": 5, "fudge_candidates": 12, "lambda": 2.5, "max_length": 40},
        "out_dir": "runs/x",
        "seed": 99
    })";
    const std::string path = write_config("full.json", body);
    const RunConfig cfg = load_run_config(path);
    const fs::path base = fs::path(path).parent_path();

    CHECK(cfg.data.min_count == 3);
    CHECK(cfg.strategies == std::vector<std::string>{"Question", "Self-disclosure"});
    CHECK(cfg.commonsense.enabled);
    CHECK(cfg.commonsense.backend == "cache");
    CHECK(cfg.commonsense.cache_path == (base / "cache.jsonl").string());
    CHECK(cfg.commonsense.timeout_ms == 500);
    REQUIRE(cfg.commonsense.relations.size() == 2);
    CHECK(cfg.commonsense.relations[0] == Relation::xReact);
    CHECK(cfg.commonsense.relations[1] == Relation::xIntent);
    CHECK(cfg.commonsense.scope == CommonsenseScope::AllUtterances);
    CHECK(cfg.model.embedding_dim == 24);
    CHECK(cfg.model.hidden_dim == 32);
    CHECK(cfg.model.encoder_layers == 2);
    CHECK(cfg.model.decoder_layers == 3);
    CHECK(cfg.classifier.embedding_dim == 8);
    CHECK(cfg.classifier.hidden_dim == 9);
    CHECK(cfg.discriminator.embedding_dim == 10);
    CHECK(cfg.discriminator.hidden_dim == 11);
    CHECK(cfg.train_lm.alpha == doctest::Approx(0.5));
    CHECK(cfg.train_lm.learning_rate == doctest::Approx(0.2));
    CHECK(cfg.train_lm.epochs == 4);
    CHECK(cfg.train_lm.batch_size == 16);
    CHECK(cfg.train_classifier.learning_rate == doctest::Approx(0.3));
    CHECK(cfg.train_classifier.epochs == 7);
    CHECK(cfg.train_discriminator.epochs == 9);
    CHECK(cfg.decoding.mode == DecodingConfig::Mode::TopKSample);
    CHECK(cfg.decoding.sample_k == 5);
    CHECK(cfg.decoding.fudge_candidates == 12);
    CHECK(cfg.decoding.lambda == doctest::Approx(2.5));
    CHECK(cfg.decoding.max_length == 40);
    CHECK(cfg.out_dir == (base / "runs/x").lexically_normal().string());
    CHECK(cfg.seed == 99);
    CHECK(cfg.decoding.seed == 99);
}

TEST_CASE("absolute paths pass through unresolved") {
    const std::string body =
        R"({"data": {"train": "/abs/t.jsonl", "dev": "/abs/d.jsonl", "test": "/abs/e.jsonl"}, "out_dir": "/abs/out"})";
    const RunConfig cfg = load_run_config(write_config("abs.json", body));
    CHECK(cfg.data.train == "/abs/t.jsonl");
    CHECK(cfg.out_dir == "/abs/out");
}

TEST_CASE("relative paths normalize against the config directory") {
    const std::string body = minimal(R"("out_dir": "../sibling/out")");
    const std::string path = write_config("rel.json", body);
    const RunConfig cfg = load_run_config(path);
    const fs::path expect = (fs::path(path).parent_path() / "../sibling/out").lexically_normal();
    CHECK(cfg.out_dir == expect.string());
}

TEST_CASE("missing file raises io error") {
    CHECK_THROWS_AS(load_run_config("/nonexistent/steerdial.json"), IoError);
}

TEST_CASE("invalid json raises parse error naming the file") {
    const std::string path = write_config("broken.json", "{\"data\": ");
    try {
        load_run_config(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(path) != std::string::npos);
        CHECK(e.category() == ErrorCategory::Data);
    }
}

TEST_CASE("non-object root rejected") {
    CHECK_THROWS_AS(load_run_config(write_config("arr.json", "[1, 2]")), ParseError);
}

TEST_CASE("unknown keys rejected at root and nested") {
    CHECK_THROWS_AS(load_run_config(write_config("uk1.json", minimal(R"("mystery": 1)"))), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config(
                        "uk2.json", R"({"data": {"train": "a", "dev": "b", "test": "c", "validation": "d"}})")),
                    ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("uk3.json", minimal(R"("decoding": {"temperature": 0.7})"))),
                    ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("uk4.json", minimal(R"("training": {"lm": {"momentum": 0.9}})"))),
        ParseError);
}

TEST_CASE("data section is required and complete") {
    CHECK_THROWS_AS(load_run_config(write_config("nd.json", "{}")), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("nd2.json", R"({"data": {"train": "a", "dev": "b"}})")), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("nd3.json", R"({"data": {"train": 5, "dev": "b", "test": "c"}})")),
                    ParseError);
}

TEST_CASE("bad enum values rejected") {
    CHECK_THROWS_AS(load_run_config(write_config("e1.json", minimal(R"("decoding": {"mode": "beam"})"))), ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("e2.json", minimal(R"("commonsense": {"backend": "sqlite"})"))), ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("e3.json", minimal(R"("commonsense": {"scope": "everything"})"))), ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("e4.json", minimal(R"("commonsense": {"relations": ["xFeels"]})"))), ParseError);
}

TEST_CASE("bad numeric values rejected") {
    CHECK_THROWS_AS(
        load_run_config(write_config("n1.json", minimal(R"("training": {"lm": {"epochs": 0}})"))), ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("n2.json", minimal(R"("training": {"lm": {"learning_rate": 0.0}})"))),
        ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("n3.json", minimal(R"("training": {"lm": {"alpha": -0.1}})"))), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("n4.json", minimal(R"("decoding": {"lambda": -1.0})"))), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("n5.json", minimal(R"("decoding": {"sample_k": 0})"))), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("n6.json", minimal(R"("model": {"hidden_dim": 0})"))), ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config(
            "n7.json", R"({"data": {"train": "a", "dev": "b", "test": "c", "min_count": 0}})")),
        ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("n8.json", minimal(R"("commonsense": {"timeout_ms": 0})"))), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("n9.json", minimal(R"("seed": "eleven")"))), ParseError);
}

TEST_CASE("strategy list validation") {
    CHECK_THROWS_AS(load_run_config(write_config("s1.json", minimal(R"("strategies": [])"))), ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config("s2.json", minimal(R"("strategies": ["Question", "Question"])"))), ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("s3.json", minimal(R"("strategies": ["Question", ""])"))),
                    ParseError);
    CHECK_THROWS_AS(load_run_config(write_config("s4.json", minimal(R"("strategies": ["Question", 7])"))), ParseError);
}

TEST_CASE("enabled commonsense requires backend wiring") {
    CHECK_THROWS_AS(load_run_config(write_config(
                        "c1.json", minimal(R"("commonsense": {"enabled": true, "relations": ["xReact"]})"))),
                    ParseError);
    CHECK_THROWS_AS(
        load_run_config(write_config(
            "c2.json",
            minimal(
                R"("commonsense": {"enabled": true, "backend": "remote", "relations": ["xReact"]})"))),
        ParseError);
    CHECK_THROWS_AS(load_run_config(write_config(
                        "c3.json", minimal(R"("commonsense": {"enabled": true, "cache_path": "x.jsonl"})"))),
                    ParseError);
    // disabled commonsense tolerates missing wiring
    const RunConfig cfg = load_run_config(
        write_config("c4.json", minimal(R"("commonsense": {"enabled": false, "relations": ["xReact"]})")));
    CHECK_FALSE(cfg.commonsense.enabled);
}

TEST_CASE("remote backend keeps endpoint as typed") {
    const RunConfig cfg = load_run_config(write_config(
        "c5.json",
        minimal(
            R"("commonsense": {"enabled": true, "backend": "remote", "endpoint": "http://h:1/x", "relations": ["oWant"]})")));
    CHECK(cfg.commonsense.endpoint == "http://h:1/x");
    CHECK(cfg.commonsense.relations == std::vector<Relation>{Relation::oWant});
}
