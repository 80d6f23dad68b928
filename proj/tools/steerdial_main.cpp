#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steerdial/config.hpp"
#include "steerdial/errors.hpp"
#include "steerdial/pipeline.hpp"

namespace {

using namespace steerdial;

int exit_code(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::Usage: return 2;
        case ErrorCategory::Data: return 3;
        case ErrorCategory::Model: return 4;
        case ErrorCategory::Service: return 5;
    }
    return 1;
}

const char* category_name(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::Usage: return "usage";
        case ErrorCategory::Data: return "data";
        case ErrorCategory::Model: return "model";
        case ErrorCategory::Service: return "service";
    }
    return "internal";
}

StrategySource parse_source(const std::string& name) {
    if (name == "joint") return StrategySource::JointHead;
    if (name == "classifier") return StrategySource::ExternalClassifier;
    if (name == "oracle") return StrategySource::Oracle;
    throw UsageError("unknown strategy source \"" + name + "\" (expected joint, classifier, or oracle)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strategy-controllable empathetic dialogue engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string source_name = "joint";
    bool fudge = false;
    std::string target = "all";
    std::string generation_file;

    std::vector<CLI::Option*> seed_opts;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run configuration JSON")->required();
        seed_opts.push_back(cmd->add_option("--seed", seed, "override the config seed"));
        cmd->add_option("--out", out_dir, "override the config output directory");
    };

    CLI::App* prepare = app.add_subcommand("prepare", "build the vocabulary and tokenized example files");
    CLI::App* train = app.add_subcommand("train", "train model components");
    train->add_option("--target", target, "lm, lm_joint, classifier, discriminator, or all (default all)");
    CLI::App* generate = app.add_subcommand("generate", "decode responses for the test split");
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a generation file");
    evaluate->add_option("--generation-file", generation_file, "generation JSONL (default <out>/generation.jsonl)");
    CLI::App* chat = app.add_subcommand("chat", "interactive session on standard input");
    for (CLI::App* cmd : {generate, chat}) {
        cmd->add_option("--strategy-source", source_name, "joint, classifier, or oracle (default joint)");
        cmd->add_flag("--fudge", fudge, "rescore candidates with the future discriminator");
    }
    for (CLI::App* cmd : {prepare, train, generate, evaluate, chat}) add_common(cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error:usage: " << e.what() << '\n';
        return 2;
    }

    try {
        RunConfig cfg = load_run_config(config_path);
        for (const CLI::Option* opt : seed_opts) {
            if (opt->count() > 0) {
                cfg.seed = seed;
                cfg.decoding.seed = seed;
            }
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        if (app.got_subcommand(prepare)) {
            run_prepare(cfg, std::cout);
        } else if (app.got_subcommand(train)) {
            run_train(cfg, target, std::cout);
        } else if (app.got_subcommand(generate)) {
            run_generate(cfg, parse_source(source_name), fudge, std::cout);
        } else if (app.got_subcommand(evaluate)) {
            run_evaluate(cfg, generation_file, std::cout);
        } else {
            run_chat(cfg, parse_source(source_name), fudge, std::cin, std::cout);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error:" << category_name(e.category()) << ": " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error:internal: " << e.what() << '\n';
        return 1;
    }
}
