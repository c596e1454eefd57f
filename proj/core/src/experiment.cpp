#include "seqlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "seqlab/csvio.hpp"
#include "seqlab/errors.hpp"

namespace seqlab::experiment {

namespace {

bool parse_bool(const std::string& v, int line) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("expected boolean, got '" + v + "'", line);
}

double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected number, got '" + v + "'", line);
    }
}

long parse_long(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected integer, got '" + v + "'", line);
    }
}

std::uint64_t parse_u64(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected unsigned integer, got '" + v + "'", line);
    }
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int thread_cap() {
    const char* env = std::getenv("SEQLAB_THREADS");
    if (env) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw ParameterError("SEQLAB_THREADS must be a positive integer");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    struct Entry {
        std::string key, value;
        int line;
    };
    std::vector<Entry> entries;
    {
        std::stringstream ss(text);
        std::string raw;
        int line_no = 0;
        while (std::getline(ss, raw)) {
            ++line_no;
            const std::string line = trim(raw);
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key=value", line_no);
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("empty key", line_no);
            entries.push_back({key, value, line_no});
        }
    }

    // The algorithm (and complex preset flag) pick the baseline defaults, so
    // resolve them before any other train.* key regardless of file order.
    train::Algorithm alg = train::Algorithm::SequenceMatch;
    bool complex_preset = false;
    for (const auto& e : entries) {
        if (e.key == "train.algorithm") {
            try {
                alg = train::parse_algorithm(e.value);
            } catch (const ParameterError& ex) {
                throw ConfigError(ex.what(), e.line);
            }
        } else if (e.key == "train.complex_preset") {
            complex_preset = parse_bool(e.value, e.line);
        }
    }

    ExperimentConfig cfg;
    cfg.train = train::TrainConfig::defaults(alg, complex_preset);

    for (const auto& e : entries) {
        const auto& k = e.key;
        const auto& v = e.value;
        const int ln = e.line;
        if (k == "train.algorithm" || k == "train.complex_preset") {
            // handled above
        } else if (k == "train.batch_size") {
            cfg.train.batch_size = static_cast<int>(parse_long(v, ln));
        } else if (k == "train.mu") {
            cfg.train.mu = static_cast<int>(parse_long(v, ln));
        } else if (k == "train.tau") {
            cfg.train.tau = parse_double(v, ln);
        } else if (k == "train.temperature") {
            cfg.train.temperature = parse_double(v, ln);
        } else if (k == "train.lambda_u") {
            cfg.train.lambda_u = parse_double(v, ln);
        } else if (k == "train.kl_weight") {
            cfg.train.kl_weight = parse_double(v, ln);
        } else if (k == "train.lr0") {
            cfg.train.lr0 = parse_double(v, ln);
        } else if (k == "train.momentum") {
            cfg.train.momentum = parse_double(v, ln);
        } else if (k == "train.weight_decay") {
            cfg.train.weight_decay = parse_double(v, ln);
        } else if (k == "train.decoupled_weight_decay") {
            cfg.train.decoupled_weight_decay = parse_bool(v, ln);
        } else if (k == "train.ema_momentum") {
            cfg.train.ema_momentum = parse_double(v, ln);
        } else if (k == "train.total_iters") {
            cfg.train.total_iters = parse_long(v, ln);
        } else if (k == "train.eval_every") {
            cfg.train.eval_every = parse_long(v, ln);
        } else if (k == "train.lr_schedule") {
            if (v == "cosine")
                cfg.train.lr_schedule = train::LrSchedule::Cosine;
            else if (v == "constant")
                cfg.train.lr_schedule = train::LrSchedule::Constant;
            else
                throw ConfigError("lr_schedule must be cosine or constant", ln);
        } else if (k == "train.weak_from_ema") {
            cfg.train.weak_from_ema = parse_bool(v, ln);
        } else if (k == "train.ece_bins") {
            cfg.train.ece_bins = static_cast<int>(parse_long(v, ln));
        } else if (k == "augment.cutout_fraction") {
            cfg.train.augment.cutout_fraction = parse_double(v, ln);
        } else if (k == "augment.weak_flip_p") {
            cfg.train.augment.weak_flip_p = parse_double(v, ln);
        } else if (k == "augment.weak_translate_frac") {
            cfg.train.augment.weak_translate_frac = parse_double(v, ln);
        } else if (k == "augment.bidirectional_enhance") {
            cfg.train.augment.bidirectional_enhance = parse_bool(v, ln);
        } else if (k == "model.hidden_dims") {
            cfg.hidden_dims.clear();
            for (const auto& item : split_list(v))
                cfg.hidden_dims.push_back(static_cast<int>(parse_long(item, ln)));
        } else if (k == "model.init_scale") {
            cfg.init_scale = parse_double(v, ln);
        } else if (k == "model.init_seed") {
            cfg.model_init_seed = parse_u64(v, ln);
        } else if (k == "data.source") {
            if (v == "synth")
                cfg.source = ExperimentConfig::Source::Synth;
            else if (v == "directory")
                cfg.source = ExperimentConfig::Source::Directory;
            else
                throw ConfigError("data.source must be synth or directory", ln);
        } else if (k == "data.synth_classes") {
            cfg.synth_classes = static_cast<int>(parse_long(v, ln));
        } else if (k == "data.synth_per_class") {
            cfg.synth_per_class = static_cast<int>(parse_long(v, ln));
        } else if (k == "data.synth_side") {
            cfg.synth_side = static_cast<int>(parse_long(v, ln));
        } else if (k == "data.synth_noise") {
            cfg.synth_noise = parse_double(v, ln);
        } else if (k == "data.synth_test_per_class") {
            cfg.synth_test_per_class = static_cast<int>(parse_long(v, ln));
        } else if (k == "data.synth_seed") {
            cfg.synth_seed = parse_u64(v, ln);
        } else if (k == "data.dir") {
            cfg.data_dir = v;
        } else if (k == "data.test_dir") {
            cfg.test_dir = v;
        } else if (k == "split.n_labels") {
            cfg.split.n_labels = static_cast<int>(parse_long(v, ln));
        } else if (k == "split.balanced") {
            cfg.split.balanced = parse_bool(v, ln);
        } else if (k == "split.include_labeled_in_unlabeled") {
            cfg.split.include_labeled_in_unlabeled = parse_bool(v, ln);
        } else if (k == "split.seed") {
            cfg.split_seed = parse_u64(v, ln);
        } else if (k == "longtail.enabled") {
            cfg.longtail_enabled = parse_bool(v, ln);
        } else if (k == "longtail.lambda") {
            cfg.longtail.lambda_imb = parse_double(v, ln);
        } else if (k == "longtail.n1") {
            cfg.longtail.head_count = static_cast<int>(parse_long(v, ln));
        } else if (k == "longtail.beta") {
            cfg.longtail.beta = parse_double(v, ln);
        } else if (k == "run.seeds") {
            cfg.seeds.clear();
            for (const auto& item : split_list(v)) cfg.seeds.push_back(parse_u64(item, ln));
            if (cfg.seeds.empty()) throw ConfigError("run.seeds must list at least one seed", ln);
            auto sorted = cfg.seeds;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw ConfigError("run.seeds contains duplicates", ln);
        } else if (k == "run.out") {
            cfg.out_dir = v;
        } else {
            throw ConfigError("unknown key '" + k + "'", e.line);
        }
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open config");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

train::DataSplits build_splits(const ExperimentConfig& cfg, std::uint64_t seed) {
    data::Dataset full, test;
    if (cfg.source == ExperimentConfig::Source::Synth) {
        full = data::synth_blobs(cfg.synth_classes, cfg.synth_per_class, cfg.synth_side,
                                 cfg.synth_noise, cfg.synth_seed);
        test = data::synth_blobs(cfg.synth_classes, cfg.synth_test_per_class, cfg.synth_side,
                                 cfg.synth_noise, cfg.synth_seed ^ 0x7E577E57ULL);
    } else {
        if (cfg.data_dir.empty()) throw ParameterError("data.dir not set");
        full = data::load_directory(cfg.data_dir);
        if (!cfg.test_dir.empty()) test = data::load_directory(cfg.test_dir);
        test.num_classes = full.num_classes;
    }

    train::DataSplits splits;
    splits.test = std::move(test);
    const std::uint64_t split_seed = cfg.split_seed ? *cfg.split_seed : seed;
    if (cfg.longtail_enabled) {
        data::LongTailSpec lt = cfg.longtail;
        lt.num_classes = full.num_classes;
        auto [lab, unlab] = data::make_long_tail(full, lt, split_seed);
        splits.labeled = std::move(lab);
        splits.unlabeled = std::move(unlab);
    } else {
        data::SplitSpec sp = cfg.split;
        sp.seed = split_seed;
        auto [lab, unlab] = data::make_split(full, sp);
        splits.labeled = std::move(lab);
        splits.unlabeled = std::move(unlab);
    }
    return splits;
}

namespace {

model::ModelConfig model_for(const ExperimentConfig& cfg, const train::DataSplits& splits,
                             std::uint64_t seed) {
    model::ModelConfig mc;
    const Image& probe = !splits.labeled.images.empty() ? splits.labeled.images.front()
                                                        : splits.test.images.front();
    mc.input_dim = probe.height * probe.width * probe.channels;
    mc.hidden_dims = cfg.hidden_dims;
    mc.num_classes = splits.labeled.num_classes;
    mc.init_scale = cfg.init_scale;
    mc.init_seed = cfg.model_init_seed ? *cfg.model_init_seed
                                       : RngStream::mix(seed, 0x10D31ULL);
    return mc;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? std::nan("") : s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.train.validate();
    std::filesystem::create_directories(cfg.out_dir);

    const std::size_t n = cfg.seeds.size();
    std::vector<std::vector<train::MetricsRow>> rows_per_seed(n);
    std::vector<std::exception_ptr> errors(n);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= n) return;
            try {
                const std::uint64_t seed = cfg.seeds[j];
                train::DataSplits splits = build_splits(cfg, seed);
                train::TrainConfig tc = cfg.train;
                tc.seed = seed;
                const model::ModelConfig mc = model_for(cfg, splits, seed);

                train::TrainSinks sinks;
                sinks.metrics_csv = cfg.out_dir / ("metrics_" + std::to_string(seed) + ".csv");
                sinks.checkpoint_dir = cfg.out_dir / ("seed_" + std::to_string(seed));
                sinks.reliability_csv =
                    cfg.out_dir / ("reliability_" + std::to_string(seed) + ".csv");

                rows_per_seed[j] = train::train_loop(tc, mc, splits, sinks).rows;
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };

    const int cap = std::min<int>(thread_cap(), static_cast<int>(n));
    if (cap <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < cap; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    RunResult result;
    std::vector<double> final_ece, final_mask, final_util;
    for (const auto& rows : rows_per_seed) {
        if (rows.empty()) continue;
        result.final_errors.push_back(rows.back().eval_error);
        double best = rows.front().eval_error;
        for (const auto& r : rows) best = std::min(best, r.eval_error);
        result.best_errors.push_back(best);
        final_ece.push_back(rows.back().eval_ece);
        final_mask.push_back(rows.back().mask_ratio);
        final_util.push_back(rows.back().utilization);
    }

    if (!result.final_errors.empty()) {
        result.summary = {
            {"final_error", mean_of(result.final_errors), sample_std(result.final_errors)},
            {"best_error", mean_of(result.best_errors), sample_std(result.best_errors)},
            {"final_ece", mean_of(final_ece), sample_std(final_ece)},
            {"final_mask_ratio", mean_of(final_mask), sample_std(final_mask)},
            {"final_utilization", mean_of(final_util), sample_std(final_util)},
        };
    }
    write_summary_csv(result.summary, cfg.out_dir / "summary.csv");
    return result;
}

void write_summary_csv(const std::vector<SummaryStat>& stats,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << "metric,mean,std\n";
    for (const auto& s : stats)
        out << s.metric << "," << csvio::format_g10(s.mean) << ","
            << csvio::format_g10(s.stddev) << "\n";
    if (!out) throw DataError(path.string() + ": write failed");
}

std::vector<SummaryStat> read_summary_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || line != "metric,mean,std")
        throw DataError(path.string() + ": not a summary.csv (bad header)");
    std::vector<SummaryStat> stats;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string metric, mean, stddev;
        if (!std::getline(ss, metric, ',') || !std::getline(ss, mean, ',') ||
            !std::getline(ss, stddev, ','))
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
        try {
            stats.push_back({metric, std::stod(mean), std::stod(stddev)});
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number");
        }
    }
    return stats;
}

std::string CompareReport::render() const {
    std::ostringstream out;
    out << "comparing A=" << dir_a.string() << " vs B=" << dir_b.string() << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-20s %12s %10s %12s %10s %12s\n", "metric", "mean_a",
                  "std_a", "mean_b", "std_b", "diff(a-b)");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %12.6g %10.4g %12.6g %10.4g %+12.6g\n",
                      r.metric.c_str(), r.mean_a, r.std_a, r.mean_b, r.std_b, r.diff);
        out << buf;
    }
    return out.str();
}

CompareReport compare_dirs(const std::filesystem::path& dir_a,
                           const std::filesystem::path& dir_b) {
    const auto a = read_summary_csv(dir_a / "summary.csv");
    const auto b = read_summary_csv(dir_b / "summary.csv");
    if (a.size() != b.size())
        throw DataError("summary schema mismatch between " + dir_a.string() + " and " +
                        dir_b.string());
    CompareReport rep;
    rep.dir_a = dir_a;
    rep.dir_b = dir_b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].metric != b[i].metric)
            throw DataError("summary schema mismatch: '" + a[i].metric + "' vs '" + b[i].metric +
                            "'");
        rep.rows.push_back(
            {a[i].metric, a[i].mean, a[i].stddev, b[i].mean, b[i].stddev, a[i].mean - b[i].mean});
    }
    return rep;
}

}  // namespace seqlab::experiment
