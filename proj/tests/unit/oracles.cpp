#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracles {

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double h) {
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double up = f(x);
        x[i] = orig - h;
        const double down = f(x);
        x[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double guard) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), guard});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

std::uint8_t solarize_px(std::uint8_t v, double threshold_frac) {
    return v > threshold_frac * 255.0 ? static_cast<std::uint8_t>(255 - v) : v;
}

std::uint8_t posterize_px(std::uint8_t v, int bits) {
    const int keep = 8 - bits;
    return static_cast<std::uint8_t>((v >> keep) << keep);
}

std::uint8_t brightness_px(std::uint8_t v, double m) {
    const long r = std::lround(m * v);
    return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

double ece_brute_force(const std::vector<int>& labels,
                       const std::vector<seqlab::prob::ProbDist>& probs, int bins) {
    const auto N = static_cast<double>(probs.size());
    double ece = 0.0;
    for (int b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / bins;
        const double hi = static_cast<double>(b + 1) / bins;
        double conf_sum = 0.0;
        long count = 0, correct = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            int arg = 0;
            for (int k = 1; k < probs[i].size(); ++k)
                if (probs[i].p[static_cast<std::size_t>(k)] >
                    probs[i].p[static_cast<std::size_t>(arg)])
                    arg = k;
            const double conf = probs[i].p[static_cast<std::size_t>(arg)];
            const bool in_bin = (conf > lo && conf <= hi) || (b == 0 && conf == 0.0);
            if (!in_bin) continue;
            ++count;
            conf_sum += conf;
            if (arg == labels[i]) ++correct;
        }
        if (count == 0) continue;
        const double acc = static_cast<double>(correct) / static_cast<double>(count);
        const double conf = conf_sum / static_cast<double>(count);
        ece += (static_cast<double>(count) / N) * std::abs(acc - conf);
    }
    return ece;
}

double auc_pair_count(const std::vector<int>& is_positive, const std::vector<double>& scores) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!is_positive[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (is_positive[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

std::vector<double> naive_forward(const seqlab::model::ParamSet& params,
                                  const std::vector<double>& input) {
    std::vector<double> cur = input;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        std::vector<double> next(layer.biases);
        for (int i = 0; i < layer.in_dim; ++i)
            for (int o = 0; o < layer.out_dim; ++o)
                next[static_cast<std::size_t>(o)] +=
                    cur[static_cast<std::size_t>(i)] *
                    layer.weights[static_cast<std::size_t>(o * layer.in_dim + i)];
        if (l + 1 < params.layers.size())
            for (auto& v : next) v = v > 0.0 ? v : 0.0;
        cur = std::move(next);
    }
    return cur;
}

seqlab::prob::ProbDist random_dist(seqlab::RngStream& rng, int num_classes) {
    for (;;) {
        seqlab::prob::ProbDist d;
        d.p.resize(static_cast<std::size_t>(num_classes));
        double sum = 0.0;
        for (auto& v : d.p) {
            v = 1e-6 + rng.next_unit();
            sum += v;
        }
        for (auto& v : d.p) v /= sum;
        // Keep a clear argmax so order comparisons are float-safe.
        std::vector<double> sorted = d.p;
        std::sort(sorted.begin(), sorted.end());
        if (num_classes == 1 || sorted[sorted.size() - 1] - sorted[sorted.size() - 2] > 1e-6)
            return d;
    }
}

seqlab::prob::ProbDist random_confident_dist(seqlab::RngStream& rng, int num_classes,
                                             double floor) {
    seqlab::prob::ProbDist d = random_dist(rng, num_classes);
    const double top = floor + (1.0 - floor) * 0.5 * (1.0 + rng.next_unit());
    const auto arg = static_cast<std::size_t>(rng.next_int(0, num_classes - 1));
    double rest = 0.0;
    for (std::size_t i = 0; i < d.p.size(); ++i)
        if (i != arg) rest += d.p[i];
    for (std::size_t i = 0; i < d.p.size(); ++i)
        d.p[i] = i == arg ? top : d.p[i] / rest * (1.0 - top);
    return d;
}

seqlab::Image random_image(seqlab::RngStream& rng, int h, int w, int c) {
    seqlab::Image img(h, w, c);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.next_int(0, 255));
    return img;
}

}  // namespace oracles
