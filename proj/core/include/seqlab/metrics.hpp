#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "seqlab/prob.hpp"

namespace seqlab::metrics {

/// Rows are true classes, columns predicted.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<long> counts;  // row-major L x L

    long& at(int truth, int pred) {
        return counts[static_cast<std::size_t>(truth * num_classes + pred)];
    }
    long at(int truth, int pred) const {
        return counts[static_cast<std::size_t>(truth * num_classes + pred)];
    }
    long total() const;
    long trace() const;
};

struct ClassificationReport {
    double error_rate = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    ConfusionMatrix confusion;
    std::vector<double> class_wise_accuracy;
};

struct CalibrationReport {
    std::vector<double> bin_edges;   // M+1 edges over [0, 1]
    std::vector<double> bin_confidence;
    std::vector<double> bin_accuracy;
    std::vector<long> bin_counts;
    double ece = 0.0;
};

enum class UtilizationRule {
    FixMatchStyle,       // 1 - mask_ratio: only confident samples contribute
    SequenceMatchStyle,  // 1: every sample contributes through one branch
    LowConfStyle,        // mask_ratio: only low-confidence samples contribute
    SupervisedStyle,     // 0: unlabeled data unused
};

struct SslRatios {
    double mask_ratio = 0.0;   // fraction with max confidence below tau
    double utilization = 0.0;
    std::optional<double> pseudo_label_accuracy;  // absent without truths or
                                                  // without confident samples
};

/// Argmax classification metrics. Macro averages over classes; a class with
/// no predicted (or no true) samples contributes 0 to the average.
ClassificationReport classify_metrics(const std::vector<int>& true_labels,
                                      const std::vector<prob::ProbDist>& prob_dists);

/// One-vs-rest ROC AUC per class via the rank statistic (ties take mid-ranks),
/// macro averaged. Every class must appear at least once.
double macro_auc(const std::vector<int>& true_labels,
                 const std::vector<prob::ProbDist>& prob_dists);

/// Equal-width confidence binning over [0, 1] with right-closed bins; the
/// lowest bin also takes confidence 0. ECE is the count-weighted mean
/// |accuracy - confidence| gap.
CalibrationReport calibration(const std::vector<int>& true_labels,
                              const std::vector<prob::ProbDist>& prob_dists, int num_bins);

SslRatios ssl_ratios(const std::vector<prob::ProbDist>& weak_prob_dists, double tau,
                     UtilizationRule rule,
                     const std::vector<int>* true_unlabeled_labels = nullptr);

/// CSV rows (bin_low, bin_high, count, mean_conf, mean_acc) for the plotter.
void write_reliability_csv(const CalibrationReport& report, const std::filesystem::path& path);

}  // namespace seqlab::metrics
