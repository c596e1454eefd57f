#include "seqlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "seqlab/errors.hpp"

namespace seqlab::metrics {

long ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), 0L);
}

long ConfusionMatrix::trace() const {
    long t = 0;
    for (int i = 0; i < num_classes; ++i) t += at(i, i);
    return t;
}

namespace {

int infer_num_classes(const std::vector<prob::ProbDist>& dists) {
    if (dists.empty()) throw ParameterError("empty evaluation batch");
    const int L = dists.front().size();
    for (const auto& d : dists)
        if (d.size() != L) throw ParameterError("inconsistent distribution lengths");
    return L;
}

void check_labels(const std::vector<int>& labels, std::size_t n, int L) {
    if (labels.size() != n) throw ParameterError("labels/predictions size mismatch");
    for (int l : labels)
        if (l < 0 || l >= L) throw ParameterError("label " + std::to_string(l) + " out of range");
}

}  // namespace

ClassificationReport classify_metrics(const std::vector<int>& true_labels,
                                      const std::vector<prob::ProbDist>& prob_dists) {
    const int L = infer_num_classes(prob_dists);
    check_labels(true_labels, prob_dists.size(), L);

    ClassificationReport rep;
    rep.confusion.num_classes = L;
    rep.confusion.counts.assign(static_cast<std::size_t>(L) * L, 0);
    for (std::size_t i = 0; i < prob_dists.size(); ++i)
        ++rep.confusion.at(true_labels[i], prob::pseudo_label(prob_dists[i]).class_index);

    const auto N = static_cast<double>(prob_dists.size());
    rep.error_rate = 1.0 - static_cast<double>(rep.confusion.trace()) / N;

    rep.class_wise_accuracy.assign(static_cast<std::size_t>(L), 0.0);
    double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;
    for (int k = 0; k < L; ++k) {
        long tp = rep.confusion.at(k, k);
        long row = 0, col = 0;
        for (int j = 0; j < L; ++j) {
            row += rep.confusion.at(k, j);
            col += rep.confusion.at(j, k);
        }
        const double precision = col > 0 ? static_cast<double>(tp) / col : 0.0;
        const double recall = row > 0 ? static_cast<double>(tp) / row : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        prec_sum += precision;
        rec_sum += recall;
        f1_sum += f1;
        rep.class_wise_accuracy[static_cast<std::size_t>(k)] = recall;
    }
    rep.macro_precision = prec_sum / L;
    rep.macro_recall = rec_sum / L;
    rep.macro_f1 = f1_sum / L;
    return rep;
}

double macro_auc(const std::vector<int>& true_labels,
                 const std::vector<prob::ProbDist>& prob_dists) {
    const int L = infer_num_classes(prob_dists);
    check_labels(true_labels, prob_dists.size(), L);
    const std::size_t n = prob_dists.size();

    double auc_sum = 0.0;
    std::vector<std::size_t> order(n);
    std::vector<double> ranks(n);
    for (int k = 0; k < L; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        long n_pos = std::count(true_labels.begin(), true_labels.end(), k);
        if (n_pos == 0)
            throw DataError("macro_auc: class " + std::to_string(k) + " has no samples");
        const long n_neg = static_cast<long>(n) - n_pos;
        if (n_neg == 0)
            throw DataError("macro_auc: class " + std::to_string(k) + " covers all samples");

        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return prob_dists[a].p[kk] < prob_dists[b].p[kk];
        });

        // Mid-ranks for tied scores, 1-based.
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && prob_dists[order[j + 1]].p[kk] == prob_dists[order[i]].p[kk]) ++j;
            const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mid;
            i = j + 1;
        }

        double rank_sum = 0.0;
        for (std::size_t s = 0; s < n; ++s)
            if (true_labels[s] == k) rank_sum += ranks[s];
        const double u = rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
        auc_sum += u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    }
    return auc_sum / L;
}

CalibrationReport calibration(const std::vector<int>& true_labels,
                              const std::vector<prob::ProbDist>& prob_dists, int num_bins) {
    if (num_bins < 1) throw ParameterError("calibration needs at least one bin");
    const int L = infer_num_classes(prob_dists);
    check_labels(true_labels, prob_dists.size(), L);
    const auto M = static_cast<std::size_t>(num_bins);

    CalibrationReport rep;
    rep.bin_edges.resize(M + 1);
    for (std::size_t m = 0; m <= M; ++m)
        rep.bin_edges[m] = static_cast<double>(m) / static_cast<double>(num_bins);
    rep.bin_confidence.assign(M, 0.0);
    rep.bin_accuracy.assign(M, 0.0);
    rep.bin_counts.assign(M, 0);

    std::vector<double> conf_sum(M, 0.0);
    std::vector<long> correct(M, 0);
    for (std::size_t i = 0; i < prob_dists.size(); ++i) {
        const auto pl = prob::pseudo_label(prob_dists[i]);
        // Right-closed bins: (e_m, e_{m+1}]; confidence 0 lands in bin 0.
        long bin = static_cast<long>(std::ceil(pl.confidence * num_bins)) - 1;
        bin = std::clamp(bin, 0L, static_cast<long>(num_bins) - 1);
        const auto b = static_cast<std::size_t>(bin);
        ++rep.bin_counts[b];
        conf_sum[b] += pl.confidence;
        if (pl.class_index == true_labels[i]) ++correct[b];
    }

    const auto N = static_cast<double>(prob_dists.size());
    double ece = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        if (rep.bin_counts[m] == 0) continue;
        const auto cnt = static_cast<double>(rep.bin_counts[m]);
        rep.bin_confidence[m] = conf_sum[m] / cnt;
        rep.bin_accuracy[m] = static_cast<double>(correct[m]) / cnt;
        ece += (cnt / N) * std::abs(rep.bin_accuracy[m] - rep.bin_confidence[m]);
    }
    rep.ece = ece;
    return rep;
}

SslRatios ssl_ratios(const std::vector<prob::ProbDist>& weak_prob_dists, double tau,
                     UtilizationRule rule, const std::vector<int>* true_unlabeled_labels) {
    if (weak_prob_dists.empty()) throw ParameterError("ssl_ratios: empty batch");

    std::size_t below = 0, confident_correct = 0, confident = 0;
    for (std::size_t i = 0; i < weak_prob_dists.size(); ++i) {
        const auto pl = prob::pseudo_label(weak_prob_dists[i]);
        if (pl.confidence < tau) {
            ++below;
            continue;
        }
        ++confident;
        if (true_unlabeled_labels && pl.class_index == (*true_unlabeled_labels)[i])
            ++confident_correct;
    }

    SslRatios out;
    out.mask_ratio = static_cast<double>(below) / static_cast<double>(weak_prob_dists.size());
    switch (rule) {
        case UtilizationRule::FixMatchStyle: out.utilization = 1.0 - out.mask_ratio; break;
        case UtilizationRule::SequenceMatchStyle: out.utilization = 1.0; break;
        case UtilizationRule::LowConfStyle: out.utilization = out.mask_ratio; break;
        case UtilizationRule::SupervisedStyle: out.utilization = 0.0; break;
    }
    if (true_unlabeled_labels) {
        if (true_unlabeled_labels->size() != weak_prob_dists.size())
            throw ParameterError("ssl_ratios: truth size mismatch");
        if (confident > 0)
            out.pseudo_label_accuracy =
                static_cast<double>(confident_correct) / static_cast<double>(confident);
    }
    return out;
}

void write_reliability_csv(const CalibrationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << "bin_low,bin_high,count,mean_conf,mean_acc\n";
    char buf[160];
    for (std::size_t m = 0; m + 1 < report.bin_edges.size(); ++m) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%ld,%.10g,%.10g\n", report.bin_edges[m],
                      report.bin_edges[m + 1], report.bin_counts[m], report.bin_confidence[m],
                      report.bin_accuracy[m]);
        out << buf;
    }
    if (!out) throw DataError(path.string() + ": write failed");
}

}  // namespace seqlab::metrics
