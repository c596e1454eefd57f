#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seqlab/augment.hpp"
#include "seqlab/data.hpp"
#include "seqlab/losses.hpp"
#include "seqlab/metrics.hpp"
#include "seqlab/model.hpp"
#include "seqlab/rng.hpp"

namespace seqlab::train {

enum class Algorithm { SequenceMatch, FixMatch, UDA, SupervisedOnly, LowConfOnly };

std::string algorithm_name(Algorithm alg);
Algorithm parse_algorithm(const std::string& name);

enum class LrSchedule { Cosine, Constant };

struct TrainConfig {
    Algorithm algorithm = Algorithm::SequenceMatch;
    int batch_size = 64;        // B
    int mu = 7;                 // unlabeled/labeled ratio
    double tau = 0.95;          // confidence threshold
    double temperature = 0.5;   // sharpening T
    double lambda_u = 1.0;      // unsupervised weight
    double kl_weight = 1.0;     // ablation switch for the pairwise KL terms
    double lr0 = 0.03;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    bool decoupled_weight_decay = false;
    double ema_momentum = 0.999;
    long total_iters = 1024;    // K
    long eval_every = 128;
    std::uint64_t seed = 0;
    LrSchedule lr_schedule = LrSchedule::Cosine;
    bool weak_from_ema = false; // weak/gate predictions from the EMA model
    int ece_bins = 15;
    aug::AugmentOptions augment;

    /// Per-algorithm defaults from the reference presets; the complex flag
    /// switches to the large-dataset variant (tau 0.7, mu 1, batch 128,
    /// weight decay 3e-4).
    static TrainConfig defaults(Algorithm alg, bool complex_dataset = false);

    void validate() const;
};

struct TrainState {
    model::ParamSet params;
    model::ParamSet ema_params;
    model::Gradients velocity;
    long iter = 0;
    RngStream rng{0};
};

struct StepMetrics {
    prob::LossBreakdown losses;
    double mask_ratio_weak = 0.0;
    double utilization = 0.0;
    std::optional<double> pseudo_label_accuracy;
    double lr = 0.0;
    long augment_calls = 0;  // diagnostic: B plus streams * mu * B
};

struct LabeledBatch {
    std::vector<Image> images;
    std::vector<int> labels;
};

struct UnlabeledBatch {
    std::vector<Image> images;
    std::vector<int> true_labels;  // diagnostics only; may be empty
};

/// Augmentation streams an algorithm evaluates on the unlabeled batch.
struct StreamSet {
    bool weak = false;
    bool medium = false;
    bool strong = false;
};
StreamSet streams_for(Algorithm alg);

/// lr0 * cos(7 pi k / (16 K)); monotone non-increasing over [0, K).
double cosine_lr(long k, long K, double lr0);

/// g = grads + weight_decay * params; v' = momentum * v + g; p' = p - lr * v'.
/// The decoupled flag moves the decay term out of the velocity:
/// p' = p - lr * v' - lr * weight_decay * p.
void sgd_momentum_step(model::ParamSet& params, const model::Gradients& grads,
                       model::Gradients& velocity, double lr, double momentum,
                       double weight_decay, bool decoupled = false);

/// ema' = m * ema + (1 - m) * params, elementwise.
void ema_update(model::ParamSet& ema_params, const model::ParamSet& params, double m);

/// Fresh training state for a config pair.
TrainState init_state(const TrainConfig& cfg, const model::ModelConfig& model_cfg);

/// One optimization step: augment, forward per stream, compose the loss for
/// cfg.algorithm, backprop, SGD update, EMA update.
StepMetrics train_step(TrainState& state, const LabeledBatch& labeled,
                       const UnlabeledBatch& unlabeled, const TrainConfig& cfg);

/// Deterministic cycling epoch shuffler; a batch never crosses a reshuffle
/// boundary (a short remainder is dropped and the pool reshuffled).
class EpochShuffler {
public:
    EpochShuffler(std::size_t pool_size, RngStream rng);
    std::vector<std::size_t> next_batch(std::size_t k);

private:
    void reshuffle();
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    RngStream rng_;
};

struct DataSplits {
    data::Dataset labeled;
    data::Dataset unlabeled;
    data::Dataset test;
    bool unlabeled_labels_are_truth = true;
};

struct MetricsRow {
    long iter = 0;
    double lr = 0.0;
    prob::LossBreakdown losses;
    double mask_ratio = 0.0;
    double utilization = 0.0;
    std::optional<double> pseudo_acc;
    double eval_error = 0.0;
    double eval_ece = 0.0;
};

/// Output paths; any empty path disables that sink.
struct TrainSinks {
    std::filesystem::path metrics_csv;
    std::filesystem::path checkpoint_dir;
    std::filesystem::path reliability_csv;  // written at the final evaluation
};

struct TrainResult {
    TrainState state;
    std::vector<MetricsRow> rows;
};

struct EvalResult {
    double error_rate = 0.0;
    metrics::CalibrationReport calibration;
};

EvalResult evaluate(const model::ParamSet& params, const data::Dataset& test, int ece_bins);

/// K steps with cycling reshuffled epochs; evaluates the EMA model on the
/// test split every eval_every steps (and at the final step), persisting
/// metric rows and checkpoints through the sinks.
TrainResult train_loop(const TrainConfig& cfg, const model::ModelConfig& model_cfg,
                       const DataSplits& splits, const TrainSinks& sinks = {});

/// Serialize rows with the fixed column set. Absent pseudo accuracy prints
/// as nan.
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace seqlab::train
