#include "seqlab/prob.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqlab/errors.hpp"

namespace seqlab::prob {

void ProbDist::validate() const {
    if (p.empty()) throw ParameterError("empty probability vector");
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0)
            throw ParameterError("probability entries must be finite and non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw ParameterError("probabilities sum to " + std::to_string(sum) + ", expected 1");
}

namespace {

// Shared by softmax and sharpen: softmax of scores/T with max-shift.
ProbDist softmax_scaled(const std::vector<double>& scores, double temperature) {
    const double m = *std::max_element(scores.begin(), scores.end());
    ProbDist out;
    out.p.resize(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out.p[i] = std::exp((scores[i] - m) / temperature);
        sum += out.p[i];
    }
    for (double& v : out.p) v /= sum;
    return out;
}

}  // namespace

ProbDist softmax(const Logits& logits) {
    if (logits.values.empty()) throw ParameterError("empty logits");
    for (double v : logits.values)
        if (!std::isfinite(v)) throw NumericError("non-finite logit");
    return softmax_scaled(logits.values, 1.0);
}

ProbDist sharpen(const ProbDist& p, double temperature) {
    if (temperature <= 0.0) throw ParameterError("sharpening temperature must be positive");
    return softmax_scaled(p.p, temperature);
}

ProbDist sharpen_power(const ProbDist& p, double temperature) {
    if (temperature <= 0.0) throw ParameterError("sharpening temperature must be positive");
    ProbDist out;
    out.p.resize(p.p.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.p.size(); ++i) {
        out.p[i] = std::pow(std::max(p.p[i], 0.0), 1.0 / temperature);
        sum += out.p[i];
    }
    if (sum <= 0.0) throw NumericError("power sharpening collapsed to zero mass");
    for (double& v : out.p) v /= sum;
    return out;
}

PseudoLabel pseudo_label(const ProbDist& p) {
    int best = 0;
    for (int i = 1; i < p.size(); ++i)
        if (p.p[static_cast<std::size_t>(i)] > p.p[static_cast<std::size_t>(best)]) best = i;
    return {best, p.p[static_cast<std::size_t>(best)]};
}

bool confidence_mask(const ProbDist& p, double tau) {
    return pseudo_label(p).confidence >= tau;
}

double cross_entropy_hard(int target, const ProbDist& p) {
    if (target < 0 || target >= p.size())
        throw ParameterError("target class " + std::to_string(target) + " out of range");
    return -std::log(std::max(p.p[static_cast<std::size_t>(target)], kLogEps));
}

double cross_entropy_soft(const ProbDist& target, const ProbDist& p) {
    if (target.size() != p.size()) throw ParameterError("distribution length mismatch");
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (target.p[idx] == 0.0) continue;
        acc -= target.p[idx] * std::log(std::max(p.p[idx], kLogEps));
    }
    return acc;
}

double entropy(const ProbDist& p) {
    double acc = 0.0;
    for (double v : p.p) {
        if (v == 0.0) continue;
        acc -= v * std::log(std::max(v, kLogEps));
    }
    return acc;
}

double kl_div(const ProbDist& q, const ProbDist& p) {
    if (q.size() != p.size()) throw ParameterError("distribution length mismatch");
    double acc = 0.0;
    for (int i = 0; i < q.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (q.p[idx] == 0.0) continue;
        acc += q.p[idx] * (std::log(std::max(q.p[idx], kLogEps)) -
                           std::log(std::max(p.p[idx], kLogEps)));
    }
    return acc;
}

ProbDist one_hot(int index, int num_classes) {
    if (index < 0 || index >= num_classes) throw ParameterError("one_hot index out of range");
    ProbDist out;
    out.p.assign(static_cast<std::size_t>(num_classes), 0.0);
    out.p[static_cast<std::size_t>(index)] = 1.0;
    return out;
}

}  // namespace seqlab::prob
