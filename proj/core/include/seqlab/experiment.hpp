#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seqlab/data.hpp"
#include "seqlab/model.hpp"
#include "seqlab/train.hpp"

namespace seqlab::experiment {

/// Parsed flat key=value experiment description. Section prefixes group the
/// keys (train.*, model.*, data.*, split.*, longtail.*, augment.*, run.*).
struct ExperimentConfig {
    train::TrainConfig train;
    std::vector<int> hidden_dims = {32};
    double init_scale = 1.0;
    std::optional<std::uint64_t> model_init_seed;  // default: derived per run seed

    enum class Source { Synth, Directory };
    Source source = Source::Synth;
    int synth_classes = 4;
    int synth_per_class = 1010;
    int synth_side = 8;
    double synth_noise = 0.35;
    int synth_test_per_class = 250;
    std::uint64_t synth_seed = 0xDA7AULL;
    std::filesystem::path data_dir;
    std::filesystem::path test_dir;

    bool longtail_enabled = false;
    data::SplitSpec split{40, true, 0, true};
    std::optional<std::uint64_t> split_seed;  // default: the run seed
    data::LongTailSpec longtail;

    std::vector<std::uint64_t> seeds = {1};
    std::filesystem::path out_dir = "out";
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

struct SummaryStat {
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
};

struct RunResult {
    std::vector<SummaryStat> summary;
    /// final eval error per seed, in seeds order
    std::vector<double> final_errors;
    std::vector<double> best_errors;
};

/// Execute train_loop for every seed (jobs run in parallel up to
/// SEQLAB_THREADS), writing metrics_<seed>.csv, reliability_<seed>.csv,
/// seed_<seed>/ckpt_*.bin and summary.csv under out_dir.
RunResult run_experiment(const ExperimentConfig& cfg);

std::vector<SummaryStat> read_summary_csv(const std::filesystem::path& path);
void write_summary_csv(const std::vector<SummaryStat>& stats,
                       const std::filesystem::path& path);

struct CompareRow {
    std::string metric;
    double mean_a = 0.0, std_a = 0.0;
    double mean_b = 0.0, std_b = 0.0;
    double diff = 0.0;  // mean_a - mean_b
};

struct CompareReport {
    std::filesystem::path dir_a, dir_b;
    std::vector<CompareRow> rows;
    std::string render() const;
};

/// Align two run directories on their summary.csv metric names.
CompareReport compare_dirs(const std::filesystem::path& dir_a,
                           const std::filesystem::path& dir_b);

/// Dataset splits for one seed of this experiment; exposed for tests.
train::DataSplits build_splits(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace seqlab::experiment
