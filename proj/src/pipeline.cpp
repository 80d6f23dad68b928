#include "steerdial/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "steerdial/commonsense.hpp"
#include "steerdial/corpus.hpp"
#include "steerdial/decoding.hpp"
#include "steerdial/errors.hpp"
#include "steerdial/eval.hpp"
#include "steerdial/lm.hpp"
#include "steerdial/rng.hpp"
#include "steerdial/strategy.hpp"
#include "steerdial/vocab.hpp"

namespace steerdial {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string fmt(double v, int precision) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

// Commonsense plumbing.

struct Backend {
    std::unique_ptr<CacheBackend> cache;
    std::unique_ptr<RemoteBackend> remote;
    CommonsenseBackend& active() { return remote ? static_cast<CommonsenseBackend&>(*remote) : *cache; }
};

Backend make_backend(const CommonsenseConfig& cfg) {
    Backend b;
    if (!cfg.cache_path.empty()) b.cache = std::make_unique<CacheBackend>(cfg.cache_path);
    if (cfg.backend == "remote") b.remote = std::make_unique<RemoteBackend>(cfg.endpoint, cfg.timeout_ms, b.cache.get());
    return b;
}

// Sentences for every utterance the configured scope can consult; the rest
// stay empty so no entailments are fetched for them.
CommonsenseSentences collect_sentences(const std::vector<Dialogue>& dialogues, const CommonsenseConfig& cfg,
                                       CommonsenseBackend& backend) {
    const TemplateTable table = TemplateTable::default_table();
    CommonsenseSentences out;
    for (const Dialogue& d : dialogues) {
        std::vector<std::vector<std::string>> per(d.utterances.size());
        for (std::size_t i = 0; i < d.utterances.size(); ++i) {
            const Utterance& u = d.utterances[i];
            if (cfg.scope == CommonsenseScope::MostRecentSeeker && u.role != SpeakerRole::Seeker) continue;
            per[i] = verbalize_selected(generate_tuples(u.text, backend), table, cfg.relations);
        }
        out.emplace(d.id, std::move(per));
    }
    return out;
}

// Prepared artifacts.

void write_vocab_file(const std::string& path, const Vocabulary& vocab) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const std::string& t : vocab.tokens()) f << t << '\n';
    if (!f.flush()) throw IoError("write failed for " + path);
}

Vocabulary read_vocab_file(const std::string& path, const StrategySet& strategies) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open vocabulary " + path + " (run prepare first)");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(f, line)) tokens.push_back(line);
    Vocabulary vocab = Vocabulary::from_tokens(tokens, strategies.size());
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        const std::int32_t s = std::int32_t(i);
        if (vocab.token_of(vocab.marker_id(s)) != "[" + strategies.name(s) + "]")
            throw ConfigMismatchError("vocabulary markers in " + path + " do not match the configured strategies");
    }
    return vocab;
}

void write_examples_file(const std::string& path, const std::vector<TrainingExample>& examples,
                         const StrategySet& strategies) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const TrainingExample& ex : examples) {
        ordered_json row;
        row["dialogue_id"] = ex.dialogue_id;
        row["turn_index"] = ex.turn_index;
        row["strategy"] = strategies.name(ex.gold_strategy.index);
        row["input"] = ex.input;
        row["target"] = ex.target;
        f << row.dump() << '\n';
    }
    if (!f.flush()) throw IoError("write failed for " + path);
}

std::vector<TrainingExample> read_examples_file(const std::string& path, const StrategySet& strategies,
                                                const Vocabulary& vocab) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open prepared examples " + path + " (run prepare first)");
    std::vector<TrainingExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const ordered_json row = ordered_json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) throw ParseError(path, line_no, "invalid example row");
        TrainingExample ex;
        std::string name;
        try {
            ex.dialogue_id = row.at("dialogue_id").get<std::string>();
            ex.turn_index = row.at("turn_index").get<std::size_t>();
            name = row.at("strategy").get<std::string>();
            ex.input = row.at("input").get<TokenSequence>();
            ex.target = row.at("target").get<TokenSequence>();
        } catch (const ordered_json::exception&) {
            throw ParseError(path, line_no, "example row missing required fields");
        }
        const std::int32_t idx = strategies.index_of(name);
        if (idx < 0) throw ParseError(path, line_no, "unknown strategy \"" + name + "\"");
        ex.gold_strategy = StrategyLabel{idx};
        for (TokenId t : ex.input)
            if (t < 0 || std::size_t(t) >= vocab.size()) throw ParseError(path, line_no, "token id out of range");
        for (TokenId t : ex.target)
            if (t < 0 || std::size_t(t) >= vocab.size()) throw ParseError(path, line_no, "token id out of range");
        out.push_back(std::move(ex));
    }
    if (out.empty()) throw EmptyInputError("prepared examples in " + path);
    return out;
}

struct PreparedData {
    Vocabulary vocab;
    std::vector<TrainingExample> train, dev;
};

PreparedData load_prepared(const RunConfig& cfg, const StrategySet& strategies) {
    PreparedData p;
    p.vocab = read_vocab_file(join(cfg.out_dir, "vocab.txt"), strategies);
    p.train = read_examples_file(join(cfg.out_dir, "train_examples.jsonl"), strategies, p.vocab);
    p.dev = read_examples_file(join(cfg.out_dir, "dev_examples.jsonl"), strategies, p.vocab);
    return p;
}

TrainingConfig to_training(const TrainSection& s, std::uint64_t seed) {
    TrainingConfig t;
    t.alpha = s.alpha;
    t.learning_rate = s.learning_rate;
    t.epochs = s.epochs;
    t.batch_size = s.batch_size;
    t.seed = seed;
    return t;
}

void write_lm_trace(const std::string& path, const TrainStats& stats) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const EpochStats& e : stats.epochs) {
        ordered_json row;
        row["epoch"] = e.epoch;
        row["loss"] = e.loss;
        row["lm"] = e.lm;
        row["strategy"] = e.strategy;
        f << row.dump() << '\n';
    }
    if (!f.flush()) throw IoError("write failed for " + path);
}

void write_classifier_trace(const std::string& path, const ClassifierTrainStats& stats) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (std::size_t i = 0; i < stats.epoch_loss.size(); ++i) {
        ordered_json row;
        row["epoch"] = i + 1;
        row["loss"] = stats.epoch_loss[i];
        f << row.dump() << '\n';
    }
    if (!f.flush()) throw IoError("write failed for " + path);
}

void train_lm_target(const RunConfig& cfg, const StrategySet& strategies, const PreparedData& data, TrainMode mode,
                     std::ostream& out) {
    ModelConfig mc;
    mc.vocab_size = Index(data.vocab.size());
    mc.embedding_dim = cfg.model.embedding_dim;
    mc.hidden_dim = cfg.model.hidden_dim;
    mc.encoder_layers = cfg.model.encoder_layers;
    mc.decoder_layers = cfg.model.decoder_layers;
    mc.strategy_count = Index(strategies.size());
    mc.seed = cfg.seed;
    EncoderDecoderLm model(mc, data.vocab);
    const TrainStats stats = train_lm(model, data.train, to_training(cfg.train_lm, cfg.seed), mode);
    const std::string ckpt = join(cfg.out_dir, "lm.ckpt");
    model.save(ckpt);
    write_lm_trace(join(cfg.out_dir, "lm_trace.jsonl"), stats);
    const EpochStats& last = stats.epochs.back();
    out << "lm: " << stats.epochs.size() << " epochs, final loss " << fmt(last.loss, 4) << " (lm " << fmt(last.lm, 4)
        << ", strategy " << fmt(last.strategy, 4) << ")\n";
    out << "wrote " << ckpt << '\n';
}

void train_classifier_target(const RunConfig& cfg, const StrategySet& strategies, const PreparedData& data,
                             bool discriminator, std::ostream& out) {
    const std::string kind = discriminator ? "discriminator" : "classifier";
    ClassifierConfig cc;
    cc.vocab_size = Index(data.vocab.size());
    const ClassifierDims& dims = discriminator ? cfg.discriminator : cfg.classifier;
    cc.embedding_dim = dims.embedding_dim;
    cc.hidden_dim = dims.hidden_dim;
    cc.strategy_count = Index(strategies.size());
    cc.seed = cfg.seed;
    RecurrentClassifier model(cc, data.vocab);
    const auto train = discriminator ? discriminator_sequences(data.train) : classifier_sequences(data.train);
    const auto held = discriminator ? discriminator_sequences(data.dev) : classifier_sequences(data.dev);
    const TrainSection& section = discriminator ? cfg.train_discriminator : cfg.train_classifier;
    const ClassifierTrainStats stats =
        train_sequence_classifier(model, train, held, to_training(section, cfg.seed), discriminator);
    const std::string ckpt = join(cfg.out_dir, kind + ".ckpt");
    model.save(ckpt, kind);
    write_classifier_trace(join(cfg.out_dir, kind + "_trace.jsonl"), stats);
    out << kind << ": " << stats.epoch_loss.size() << " epochs, final loss " << fmt(stats.epoch_loss.back(), 4)
        << ", held-out accuracy " << fmt(stats.held_out_accuracy, 3) << '\n';
    out << "wrote " << ckpt << '\n';
}

void expect_checkpoint(const std::string& path, const std::string& component) {
    if (!fs::exists(path))
        throw ConfigMismatchError(component + " checkpoint missing at " + path + " (train it first)");
}

void check_same_vocab(const std::vector<std::string>& a, const std::vector<std::string>& b,
                      const std::string& component) {
    if (a != b) throw ConfigMismatchError(component + " vocabulary differs from the prepared vocabulary");
}

}  // namespace

void run_prepare(const RunConfig& cfg, std::ostream& out) {
    const StrategySet strategies = cfg.strategy_set();
    std::vector<Dialogue> splits[3] = {load_dataset(cfg.data.train, strategies), load_dataset(cfg.data.dev, strategies),
                                       load_dataset(cfg.data.test, strategies)};
    const char* names[3] = {"train", "dev", "test"};

    Vocabulary vocab = build_vocabulary(splits[0], strategies, cfg.data.min_count);

    Backend backend;
    CommonsenseSentences train_sentences;
    if (cfg.commonsense.enabled) {
        backend = make_backend(cfg.commonsense);
        train_sentences = collect_sentences(splits[0], cfg.commonsense, backend.active());
        // Commonsense sentences enter encoder inputs, so their words join the
        // vocabulary too: appended after the corpus tokens in first-appearance
        // order over the train split.
        for (const Dialogue& d : splits[0])
            for (const std::vector<std::string>& per : train_sentences.at(d.id))
                for (const std::string& sentence : per)
                    for (const std::string& word : tokenize_words(sentence)) vocab.add_token(word);
    }

    ensure_out_dir(cfg.out_dir);
    write_vocab_file(join(cfg.out_dir, "vocab.txt"), vocab);
    out << "vocabulary tokens: " << vocab.size() << '\n';

    for (int s = 0; s < 3; ++s) {
        tokenize_dialogues(splits[s], vocab);
        CommonsenseSentences sentences;
        if (cfg.commonsense.enabled)
            sentences = (s == 0) ? std::move(train_sentences) : collect_sentences(splits[s], cfg.commonsense, backend.active());
        std::vector<TrainingExample> examples;
        for (const Dialogue& d : splits[s]) {
            const std::vector<std::vector<std::string>>* per =
                cfg.commonsense.enabled ? &sentences.at(d.id) : nullptr;
            auto built = build_examples(d, vocab, per, cfg.commonsense.scope);
            examples.insert(examples.end(), std::make_move_iterator(built.begin()),
                            std::make_move_iterator(built.end()));
        }
        write_examples_file(join(cfg.out_dir, std::string(names[s]) + "_examples.jsonl"), examples, strategies);
        out << names[s] << " examples: " << examples.size() << '\n';
    }
    out << "wrote " << cfg.out_dir << '\n';
}

void run_train(const RunConfig& cfg, const std::string& target, std::ostream& out) {
    const bool lm_only = target == "lm";
    const bool lm_joint = target == "lm_joint";
    const bool classifier = target == "classifier";
    const bool discriminator = target == "discriminator";
    const bool all = target == "all";
    if (!lm_only && !lm_joint && !classifier && !discriminator && !all)
        throw UsageError("unknown train target \"" + target +
                         "\" (expected lm, lm_joint, classifier, discriminator, or all)");

    const StrategySet strategies = cfg.strategy_set();
    const PreparedData data = load_prepared(cfg, strategies);
    ensure_out_dir(cfg.out_dir);

    if (lm_only) train_lm_target(cfg, strategies, data, TrainMode::GenerationOnly, out);
    if (lm_joint || all) train_lm_target(cfg, strategies, data, TrainMode::Joint, out);
    if (classifier || all) train_classifier_target(cfg, strategies, data, false, out);
    if (discriminator || all) train_classifier_target(cfg, strategies, data, true, out);
}

void run_generate(const RunConfig& cfg, StrategySource source, bool fudge, std::ostream& out) {
    const StrategySet strategies = cfg.strategy_set();

    const std::string lm_path = join(cfg.out_dir, "lm.ckpt");
    const std::string cls_path = join(cfg.out_dir, "classifier.ckpt");
    const std::string disc_path = join(cfg.out_dir, "discriminator.ckpt");
    expect_checkpoint(lm_path, "lm");
    if (source == StrategySource::ExternalClassifier) expect_checkpoint(cls_path, "classifier");
    if (fudge) expect_checkpoint(disc_path, "discriminator");

    const EncoderDecoderLm lm = EncoderDecoderLm::load(lm_path);
    const Vocabulary vocab = read_vocab_file(join(cfg.out_dir, "vocab.txt"), strategies);
    check_vocab_compatible(lm, vocab);
    if (lm.config().strategy_count != Index(strategies.size()))
        throw ConfigMismatchError("lm strategy count differs from the configured strategy set");

    std::optional<RecurrentClassifier> classifier;
    if (source == StrategySource::ExternalClassifier) {
        classifier.emplace(RecurrentClassifier::load(cls_path, "classifier"));
        check_same_vocab(classifier->vocab().tokens(), vocab.tokens(), "classifier");
    }
    std::optional<RecurrentClassifier> disc;
    if (fudge) {
        disc.emplace(RecurrentClassifier::load(disc_path, "discriminator"));
        check_same_vocab(disc->vocab().tokens(), vocab.tokens(), "discriminator");
    }

    std::vector<Dialogue> test = load_dataset(cfg.data.test, strategies);
    tokenize_dialogues(test, vocab);

    CommonsenseSentences sentences;
    const CommonsenseSentences* sentences_ptr = nullptr;
    if (cfg.commonsense.enabled) {
        Backend backend = make_backend(cfg.commonsense);
        sentences = collect_sentences(test, cfg.commonsense, backend.active());
        sentences_ptr = &sentences;
    }

    DecodingConfig dec = cfg.decoding;
    dec.seed = cfg.seed;
    const std::vector<TurnResult> rows =
        batch_generate(test, source, lm, classifier ? &*classifier : nullptr, disc ? &*disc : nullptr, dec,
                       sentences_ptr, cfg.commonsense.scope);

    ensure_out_dir(cfg.out_dir);
    const std::string gen_path = join(cfg.out_dir, "generation.jsonl");
    write_generation_file(gen_path, rows, strategies);
    out << "wrote " << gen_path << " (" << rows.size() << " turns)\n";
}

void run_evaluate(const RunConfig& cfg, const std::string& generation_file, std::ostream& out) {
    const StrategySet strategies = cfg.strategy_set();
    const std::string gen_path = generation_file.empty() ? join(cfg.out_dir, "generation.jsonl") : generation_file;
    EvaluationReport report = evaluate_run(gen_path, strategies);
    ensure_out_dir(cfg.out_dir);
    const std::string report_path = join(cfg.out_dir, "report.json");
    write_report(report_path, report);

    const auto row = [&out](const char* key, const std::string& value) {
        out << std::left << std::setw(18) << key << value << '\n';
    };
    row("bleu_1", fmt(report.bleu_1 * 100, 2));
    row("bleu_2", fmt(report.bleu_2 * 100, 2));
    row("bleu_3", fmt(report.bleu_3 * 100, 2));
    row("bleu_4", fmt(report.bleu_4 * 100, 2));
    row("rouge_l", fmt(report.rouge_l * 100, 2));
    row("strategy_accuracy", fmt(report.strategy_accuracy, 4));
    if (report.bert_score) row("bert_score", fmt(*report.bert_score * 100, 2));
    row("count", std::to_string(report.count));
    out << "wrote " << report_path << '\n';
}

void run_chat(const RunConfig& cfg, StrategySource source, bool fudge, std::istream& in, std::ostream& out) {
    if (source == StrategySource::Oracle)
        throw UsageError("chat has no gold strategy labels; use strategy source joint or classifier");
    const StrategySet strategies = cfg.strategy_set();

    const std::string lm_path = join(cfg.out_dir, "lm.ckpt");
    expect_checkpoint(lm_path, "lm");
    const EncoderDecoderLm lm = EncoderDecoderLm::load(lm_path);
    if (lm.config().strategy_count != Index(strategies.size()))
        throw ConfigMismatchError("lm strategy count differs from the configured strategy set");

    std::optional<RecurrentClassifier> classifier;
    if (source == StrategySource::ExternalClassifier) {
        const std::string cls_path = join(cfg.out_dir, "classifier.ckpt");
        expect_checkpoint(cls_path, "classifier");
        classifier.emplace(RecurrentClassifier::load(cls_path, "classifier"));
        check_same_vocab(classifier->vocab().tokens(), lm.vocab().tokens(), "classifier");
    }
    std::optional<RecurrentClassifier> disc;
    if (fudge) {
        const std::string disc_path = join(cfg.out_dir, "discriminator.ckpt");
        expect_checkpoint(disc_path, "discriminator");
        disc.emplace(RecurrentClassifier::load(disc_path, "discriminator"));
        check_same_vocab(disc->vocab().tokens(), lm.vocab().tokens(), "discriminator");
    }

    const Vocabulary& vocab = lm.vocab();
    ensure_out_dir(cfg.out_dir);
    const std::string transcript_path = join(cfg.out_dir, "chat_transcript.txt");
    std::ofstream transcript(transcript_path);
    if (!transcript) throw IoError("cannot write " + transcript_path);

    DecodingConfig dec = cfg.decoding;
    dec.seed = cfg.seed;

    TokenSequence situation;
    std::vector<TokenSequence> history;
    std::optional<StrategyLabel> pending;
    std::size_t turn = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line == "/quit") break;
        if (line.rfind("/strategy ", 0) == 0) {
            const std::string name = line.substr(10);
            const std::int32_t idx = strategies.index_of(name);
            if (idx < 0) {
                out << "unknown strategy: " << name << '\n';
            } else {
                pending = StrategyLabel{idx};
                out << "next strategy: " << name << '\n';
            }
            continue;
        }
        if (line.empty()) continue;

        const TokenSequence seeker = tokenize(line, vocab);
        if (situation.empty()) situation = seeker;
        history.push_back(seeker);

        TokenSequence input;
        input.push_back(Vocabulary::kCls);
        input.insert(input.end(), situation.begin(), situation.end());
        for (const TokenSequence& u : history) {
            input.push_back(Vocabulary::kSep);
            input.insert(input.end(), u.begin(), u.end());
        }

        StrategyLabel strategy = pending ? *pending
                                         : predict_strategy(input, source, &lm,
                                                            classifier ? &*classifier : nullptr, std::nullopt);
        pending.reset();

        const EncodedContext ctx = lm.encode(input);
        Rng rng(turn_seed(cfg.seed, "chat", turn));
        const GenerationResult res = decode_utterance(lm, ctx, strategy, disc ? &*disc : nullptr, dec, rng);
        const std::string text = vocab.decode(res.tokens);
        out << '[' << strategies.name(strategy.index) << "] " << text << '\n';
        transcript << "seeker: " << line << '\n';
        transcript << "helper [" << strategies.name(strategy.index) << "]: " << text << '\n';
        history.push_back(res.tokens);
        ++turn;
    }
    if (!transcript.flush()) throw IoError("write failed for " + transcript_path);
    out << "transcript: " << transcript_path << '\n';
}

}  // namespace steerdial
