#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steerdial/commonsense.hpp"
#include "steerdial/corpus.hpp"
#include "steerdial/decoding.hpp"
#include "steerdial/lm.hpp"
#include "steerdial/strategy.hpp"

namespace steerdial {

struct DataConfig {
    std::string train, dev, test;
    int min_count = 1;
};

struct CommonsenseConfig {
    bool enabled = false;
    std::string backend = "cache";  // cache | remote
    std::string cache_path;
    std::string endpoint;  // remote only
    int timeout_ms = 3000;
    std::vector<Relation> relations;  // selection appended to inputs
    CommonsenseScope scope = CommonsenseScope::MostRecentSeeker;
};

struct LmDims {
    Index embedding_dim = 16;
    Index hidden_dim = 16;
    Index encoder_layers = 1;
    Index decoder_layers = 1;
};

struct ClassifierDims {
    Index embedding_dim = 16;
    Index hidden_dim = 16;
};

struct TrainSection {
    Scalar alpha = 1.0;  // lm only
    Scalar learning_rate = 0.1;
    Index epochs = 10;
    Index batch_size = 8;
};

// Full run description. Relative paths in the file resolve against the
// config file's directory; flag overrides stay as typed.
struct RunConfig {
    DataConfig data;
    std::vector<std::string> strategies = StrategySet::default_set().labels();
    CommonsenseConfig commonsense;
    LmDims model;
    ClassifierDims classifier;
    ClassifierDims discriminator;
    TrainSection train_lm;
    TrainSection train_classifier;
    TrainSection train_discriminator;
    DecodingConfig decoding;
    std::string out_dir = "out";
    std::uint64_t seed = 1;

    StrategySet strategy_set() const { return StrategySet(strategies); }
};

RunConfig load_run_config(const std::string& path);

}  // namespace steerdial
