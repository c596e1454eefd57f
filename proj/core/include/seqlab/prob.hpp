#pragma once

#include <vector>

namespace seqlab::prob {

/// Unnormalized class scores.
struct Logits {
    std::vector<double> values;
};

/// Length-L probability vector: entries >= 0, sum within 1e-6 of 1.
struct ProbDist {
    std::vector<double> p;

    int size() const { return static_cast<int>(p.size()); }
    void validate() const;
};

struct PseudoLabel {
    int class_index;
    double confidence;
};

/// Floor applied inside every logarithm so degenerate inputs stay finite.
constexpr double kLogEps = 1e-12;

/// Numerically stable softmax: exp(z - max z) / sum.
ProbDist softmax(const Logits& logits);

/// Temperature sharpening, exp(p_i/T) / sum_k exp(p_k/T), applied to the
/// probability vector itself. T must be positive.
ProbDist sharpen(const ProbDist& p, double temperature);

/// MixMatch-style power sharpening p_i^(1/T) / sum, kept behind this separate
/// entry point for ablations.
ProbDist sharpen_power(const ProbDist& p, double temperature);

/// Argmax class and its probability; ties break to the lowest index.
PseudoLabel pseudo_label(const ProbDist& p);

/// True iff max(p) >= tau.
bool confidence_mask(const ProbDist& p, double tau);

/// -log(max(p[target], eps)).
double cross_entropy_hard(int target, const ProbDist& p);

/// -sum_i target_i * log(max(p_i, eps)); the target is a constant in
/// differentiation.
double cross_entropy_soft(const ProbDist& target, const ProbDist& p);

/// Shannon entropy -sum p log p with the same eps floor.
double entropy(const ProbDist& p);

/// sum_i q_i * log(max(q_i,eps) / max(p_i,eps)), with 0 * log(0/x) = 0;
/// q is a constant target.
double kl_div(const ProbDist& q, const ProbDist& p);

/// Basis vector as a probability distribution.
ProbDist one_hot(int index, int num_classes);

}  // namespace seqlab::prob
