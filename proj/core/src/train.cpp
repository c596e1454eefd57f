#include "seqlab/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "seqlab/errors.hpp"

namespace seqlab::train {

namespace {

// Stream tags for per-sample augmentation rng derivation.
constexpr std::uint64_t kAugSalt = 0xA46A11ULL;
constexpr std::uint64_t kTagLabeled = 0;
constexpr std::uint64_t kTagWeak = 1;
constexpr std::uint64_t kTagMedium = 2;
constexpr std::uint64_t kTagStrong = 3;

RngStream aug_stream(std::uint64_t seed, long iter, std::uint64_t tag, std::size_t index) {
    return RngStream(RngStream::mix4(seed ^ kAugSalt, static_cast<std::uint64_t>(iter), tag,
                                     static_cast<std::uint64_t>(index)));
}

}  // namespace

std::string algorithm_name(Algorithm alg) {
    switch (alg) {
        case Algorithm::SequenceMatch: return "sequencematch";
        case Algorithm::FixMatch: return "fixmatch";
        case Algorithm::UDA: return "uda";
        case Algorithm::SupervisedOnly: return "supervised";
        case Algorithm::LowConfOnly: return "lowconf";
    }
    throw std::logic_error("unknown algorithm");
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "sequencematch") return Algorithm::SequenceMatch;
    if (name == "fixmatch") return Algorithm::FixMatch;
    if (name == "uda") return Algorithm::UDA;
    if (name == "supervised") return Algorithm::SupervisedOnly;
    if (name == "lowconf") return Algorithm::LowConfOnly;
    throw ParameterError("unknown algorithm '" + name + "'");
}

TrainConfig TrainConfig::defaults(Algorithm alg, bool complex_dataset) {
    TrainConfig cfg;
    cfg.algorithm = alg;
    if (alg == Algorithm::UDA) {
        cfg.tau = 0.8;
        cfg.temperature = 0.4;
    }
    if (complex_dataset) {
        cfg.batch_size = 128;
        cfg.mu = 1;
        cfg.weight_decay = 3e-4;
        if (alg != Algorithm::UDA) cfg.tau = 0.7;
    }
    return cfg;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (mu < 0) throw ParameterError("mu must be >= 0");
    if (tau <= 0.0 || tau > 1.0) throw ParameterError("tau must be in (0, 1]");
    if (temperature <= 0.0) throw ParameterError("temperature must be positive");
    if (lambda_u < 0.0) throw ParameterError("lambda_u must be >= 0");
    if (kl_weight < 0.0) throw ParameterError("kl_weight must be >= 0");
    if (lr0 <= 0.0) throw ParameterError("lr0 must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ParameterError("momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw ParameterError("weight_decay must be >= 0");
    if (ema_momentum < 0.0 || ema_momentum > 1.0)
        throw ParameterError("ema_momentum must be in [0, 1]");
    if (total_iters < 0) throw ParameterError("total_iters must be >= 0");
    if (eval_every < 1) throw ParameterError("eval_every must be >= 1");
    if (ece_bins < 1) throw ParameterError("ece_bins must be >= 1");
}

StreamSet streams_for(Algorithm alg) {
    switch (alg) {
        case Algorithm::SupervisedOnly: return {false, false, false};
        case Algorithm::FixMatch:
        case Algorithm::UDA:
        case Algorithm::LowConfOnly: return {true, false, true};
        case Algorithm::SequenceMatch: return {true, true, true};
    }
    throw std::logic_error("unknown algorithm");
}

double cosine_lr(long k, long K, double lr0) {
    if (K < 1) throw ParameterError("cosine_lr: K must be >= 1");
    if (k < 0 || k >= K) throw ParameterError("cosine_lr: k must satisfy 0 <= k < K");
    constexpr double kPi = 3.14159265358979323846;
    return lr0 * std::cos(7.0 * kPi * static_cast<double>(k) / (16.0 * static_cast<double>(K)));
}

void sgd_momentum_step(model::ParamSet& params, const model::Gradients& grads,
                       model::Gradients& velocity, double lr, double momentum,
                       double weight_decay, bool decoupled) {
    if (params.layers.size() != grads.layers.size() ||
        params.layers.size() != velocity.layers.size())
        throw std::logic_error("sgd step: layer count mismatch");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& pl = params.layers[l];
        const auto& gl = grads.layers[l];
        auto& vl = velocity.layers[l];
        if (pl.weights.size() != gl.weights.size() || pl.weights.size() != vl.weights.size() ||
            pl.biases.size() != gl.biases.size() || pl.biases.size() != vl.biases.size())
            throw std::logic_error("sgd step: shape mismatch");

        auto update = [&](double& p, const double g, double& v) {
            if (decoupled) {
                v = momentum * v + g;
                p -= lr * v + lr * weight_decay * p;
            } else {
                v = momentum * v + (g + weight_decay * p);
                p -= lr * v;
            }
        };
        for (std::size_t i = 0; i < pl.weights.size(); ++i)
            update(pl.weights[i], gl.weights[i], vl.weights[i]);
        for (std::size_t i = 0; i < pl.biases.size(); ++i)
            update(pl.biases[i], gl.biases[i], vl.biases[i]);
    }
}

void ema_update(model::ParamSet& ema_params, const model::ParamSet& params, double m) {
    if (m < 0.0 || m > 1.0) throw ParameterError("ema momentum must be in [0, 1]");
    if (ema_params.layers.size() != params.layers.size())
        throw std::logic_error("ema update: layer count mismatch");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& el = ema_params.layers[l];
        const auto& pl = params.layers[l];
        for (std::size_t i = 0; i < el.weights.size(); ++i)
            el.weights[i] = m * el.weights[i] + (1.0 - m) * pl.weights[i];
        for (std::size_t i = 0; i < el.biases.size(); ++i)
            el.biases[i] = m * el.biases[i] + (1.0 - m) * pl.biases[i];
    }
}

TrainState init_state(const TrainConfig& cfg, const model::ModelConfig& model_cfg) {
    cfg.validate();
    TrainState state;
    state.params = model::init(model_cfg);
    state.ema_params = state.params;
    state.velocity = model::zeros_like(state.params);
    state.iter = 0;
    state.rng = RngStream(cfg.seed);
    return state;
}

namespace {

struct StreamEval {
    prob::ProbBatch probs;
    model::ForwardCache cache;  // only filled for gradient-receiving streams
};

prob::ProbBatch to_probs(const std::vector<prob::Logits>& logits) {
    prob::ProbBatch out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = prob::softmax(logits[i]);
    return out;
}

}  // namespace

StepMetrics train_step(TrainState& state, const LabeledBatch& labeled,
                       const UnlabeledBatch& unlabeled, const TrainConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(labeled.images.size()) != cfg.batch_size)
        throw ParameterError("labeled batch size " + std::to_string(labeled.images.size()) +
                             " != B = " + std::to_string(cfg.batch_size));
    if (labeled.labels.size() != labeled.images.size())
        throw ParameterError("labeled batch: image/label count mismatch");
    const StreamSet streams = streams_for(cfg.algorithm);
    const std::size_t uB = static_cast<std::size_t>(cfg.mu) * static_cast<std::size_t>(cfg.batch_size);
    if (streams.weak && unlabeled.images.size() != uB)
        throw ParameterError("unlabeled batch size " + std::to_string(unlabeled.images.size()) +
                             " != mu*B = " + std::to_string(uB));

    const std::uint64_t seed = state.rng.seed();
    StepMetrics out;

    // Labeled stream: weak augmentation, forward with cache.
    std::vector<Image> labeled_aug(labeled.images.size());
    for (std::size_t i = 0; i < labeled.images.size(); ++i) {
        RngStream rng = aug_stream(seed, state.iter, kTagLabeled, i);
        labeled_aug[i] = aug::augment(labeled.images[i], aug::AugmentPolicy::weak(), rng,
                                      cfg.augment);
    }
    out.augment_calls += static_cast<long>(labeled_aug.size());

    model::ForwardCache cache_labeled;
    const prob::ProbBatch p_labeled =
        to_probs(model::forward(state.params, labeled_aug, &cache_labeled));

    // Unlabeled streams.
    auto run_stream = [&](std::uint64_t tag, const aug::AugmentPolicy& policy, bool want_cache,
                          bool from_ema) {
        StreamEval ev;
        std::vector<Image> views(unlabeled.images.size());
        for (std::size_t i = 0; i < unlabeled.images.size(); ++i) {
            RngStream rng = aug_stream(seed, state.iter, tag, i);
            views[i] = aug::augment(unlabeled.images[i], policy, rng, cfg.augment);
        }
        out.augment_calls += static_cast<long>(views.size());
        const auto& net = from_ema ? state.ema_params : state.params;
        ev.probs = to_probs(model::forward(net, views, want_cache ? &ev.cache : nullptr));
        return ev;
    };

    StreamEval weak, medium, strong;
    if (streams.weak)
        weak = run_stream(kTagWeak, aug::AugmentPolicy::weak(), false, cfg.weak_from_ema);
    if (streams.medium) medium = run_stream(kTagMedium, aug::AugmentPolicy::medium(), true, false);
    if (streams.strong) strong = run_stream(kTagStrong, aug::AugmentPolicy::strong(), true, false);

    // Loss values and per-stream logit gradients.
    prob::GradBatch d_labeled, d_medium, d_strong;
    auto& bk = out.losses;
    switch (cfg.algorithm) {
        case Algorithm::SupervisedOnly: {
            bk.l_sup = prob::supervised_ce(labeled.labels, p_labeled, &d_labeled);
            bk.total = bk.l_sup;
            break;
        }
        case Algorithm::FixMatch: {
            bk.l_sup = prob::supervised_ce(labeled.labels, p_labeled, &d_labeled);
            bk.l_u_ce =
                prob::fixmatch_unsup_loss(weak.probs, strong.probs, cfg.tau, &d_strong);
            bk.total = bk.l_sup + cfg.lambda_u * bk.l_u_ce;
            break;
        }
        case Algorithm::UDA: {
            bk.l_sup = prob::supervised_ce(labeled.labels, p_labeled, &d_labeled);
            bk.l_u_ce = prob::uda_unsup_loss(weak.probs, strong.probs, cfg.tau, cfg.temperature,
                                             &d_strong);
            bk.total = bk.l_sup + cfg.lambda_u * bk.l_u_ce;
            break;
        }
        case Algorithm::LowConfOnly: {
            bk.l_sup = prob::supervised_ce(labeled.labels, p_labeled, &d_labeled);
            bk.l_kl_ws = prob::low_conf_kl_loss(weak.probs, strong.probs, cfg.tau,
                                                cfg.temperature, &d_strong);
            bk.total = bk.l_sup + cfg.lambda_u * bk.l_kl_ws;
            break;
        }
        case Algorithm::SequenceMatch: {
            prob::SeqMatchConfig scfg{cfg.tau, cfg.temperature, cfg.lambda_u, cfg.kl_weight};
            prob::SeqMatchGrads grads;
            bk = prob::seqmatch_total_loss(labeled.labels, p_labeled, weak.probs, medium.probs,
                                           strong.probs, scfg, &grads);
            d_labeled = std::move(grads.dlabeled);
            d_medium = std::move(grads.dmedium);  // already scaled by lambda_u
            d_strong = std::move(grads.dstrong);
            break;
        }
    }

    // The standalone unsupervised losses return unscaled gradients.
    const bool scale_unsup = cfg.algorithm == Algorithm::FixMatch ||
                             cfg.algorithm == Algorithm::UDA ||
                             cfg.algorithm == Algorithm::LowConfOnly;
    if (scale_unsup)
        for (auto& g : d_strong)
            for (auto& v : g) v *= cfg.lambda_u;

    // Backward in fixed order: labeled, medium, strong. Skipping the
    // unsupervised passes at lambda_u = 0 keeps the update bit-identical to a
    // supervised step.
    model::Gradients grads = model::backward(state.params, cache_labeled, d_labeled);
    if (cfg.lambda_u != 0.0) {
        if (!d_medium.empty() && streams.medium)
            model::accumulate(grads, model::backward(state.params, medium.cache, d_medium));
        if (!d_strong.empty() && streams.strong)
            model::accumulate(grads, model::backward(state.params, strong.cache, d_strong));
    }

    const double lr = cfg.lr_schedule == LrSchedule::Cosine
                          ? cosine_lr(state.iter, cfg.total_iters, cfg.lr0)
                          : cfg.lr0;
    sgd_momentum_step(state.params, grads, state.velocity, lr, cfg.momentum, cfg.weight_decay,
                      cfg.decoupled_weight_decay);
    ema_update(state.ema_params, state.params, cfg.ema_momentum);
    ++state.iter;

    out.lr = lr;
    if (streams.weak && !weak.probs.empty()) {
        metrics::UtilizationRule rule = metrics::UtilizationRule::FixMatchStyle;
        if (cfg.algorithm == Algorithm::SequenceMatch)
            rule = metrics::UtilizationRule::SequenceMatchStyle;
        else if (cfg.algorithm == Algorithm::LowConfOnly)
            rule = metrics::UtilizationRule::LowConfStyle;
        const bool have_truth = unlabeled.true_labels.size() == unlabeled.images.size();
        const auto ratios = metrics::ssl_ratios(weak.probs, cfg.tau, rule,
                                                have_truth ? &unlabeled.true_labels : nullptr);
        out.mask_ratio_weak = ratios.mask_ratio;
        out.utilization = ratios.utilization;
        out.pseudo_label_accuracy = ratios.pseudo_label_accuracy;
    }
    return out;
}

EpochShuffler::EpochShuffler(std::size_t pool_size, RngStream rng)
    : order_(pool_size), rng_(rng) {
    for (std::size_t i = 0; i < pool_size; ++i) order_[i] = i;
    reshuffle();
}

void EpochShuffler::reshuffle() {
    for (std::size_t i = order_.size(); i > 1; --i)
        std::swap(order_[i - 1],
                  order_[static_cast<std::size_t>(rng_.next_int(0, static_cast<std::int64_t>(i) - 1))]);
    pos_ = 0;
}

std::vector<std::size_t> EpochShuffler::next_batch(std::size_t k) {
    if (k == 0) return {};
    if (k > order_.size())
        throw ParameterError("batch of " + std::to_string(k) + " exceeds pool of " +
                             std::to_string(order_.size()));
    if (pos_ + k > order_.size()) reshuffle();
    std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                   order_.begin() + static_cast<std::ptrdiff_t>(pos_ + k));
    pos_ += k;
    return batch;
}

EvalResult evaluate(const model::ParamSet& params, const data::Dataset& test, int ece_bins) {
    EvalResult out;
    if (test.images.empty()) {
        out.error_rate = std::nan("");
        out.calibration.ece = std::nan("");
        return out;
    }
    const auto logits = model::forward(params, test.images);
    prob::ProbBatch probs(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = prob::softmax(logits[i]);
    out.error_rate = metrics::classify_metrics(test.labels, probs).error_rate;
    out.calibration = metrics::calibration(test.labels, probs, ece_bins);
    return out;
}

TrainResult train_loop(const TrainConfig& cfg, const model::ModelConfig& model_cfg,
                       const DataSplits& splits, const TrainSinks& sinks) {
    cfg.validate();
    model_cfg.validate();
    splits.labeled.validate();
    splits.unlabeled.validate();
    splits.test.validate();

    const StreamSet streams = streams_for(cfg.algorithm);
    const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t uB = B * static_cast<std::size_t>(cfg.mu);
    if (splits.labeled.size() < B)
        throw ParameterError("labeled pool smaller than one batch");
    if (streams.weak && uB > 0 && splits.unlabeled.size() < uB)
        throw ParameterError("unlabeled pool smaller than mu*B");

    TrainResult result;
    result.state = init_state(cfg, model_cfg);
    auto& state = result.state;

    EpochShuffler labeled_shuffler(splits.labeled.size(), state.rng.derive(0x5A1));
    EpochShuffler unlabeled_shuffler(splits.unlabeled.size(), state.rng.derive(0x5A2));

    if (!sinks.checkpoint_dir.empty()) std::filesystem::create_directories(sinks.checkpoint_dir);

    for (long k = 0; k < cfg.total_iters; ++k) {
        LabeledBatch lb;
        for (std::size_t idx : labeled_shuffler.next_batch(B)) {
            lb.images.push_back(splits.labeled.images[idx]);
            lb.labels.push_back(splits.labeled.labels[idx]);
        }
        UnlabeledBatch ub;
        if (streams.weak && uB > 0) {
            for (std::size_t idx : unlabeled_shuffler.next_batch(uB)) {
                ub.images.push_back(splits.unlabeled.images[idx]);
                if (splits.unlabeled_labels_are_truth)
                    ub.true_labels.push_back(splits.unlabeled.labels[idx]);
            }
        }

        const StepMetrics step = train_step(state, lb, ub, cfg);

        const bool last = k + 1 == cfg.total_iters;
        if ((k + 1) % cfg.eval_every == 0 || last) {
            const EvalResult eval = evaluate(state.ema_params, splits.test, cfg.ece_bins);
            MetricsRow row;
            row.iter = k + 1;
            row.lr = step.lr;
            row.losses = step.losses;
            row.mask_ratio = step.mask_ratio_weak;
            row.utilization = step.utilization;
            row.pseudo_acc = step.pseudo_label_accuracy;
            row.eval_error = eval.error_rate;
            row.eval_ece = eval.calibration.ece;
            result.rows.push_back(row);

            if (!sinks.checkpoint_dir.empty())
                model::save_checkpoint(model_cfg, state.ema_params,
                                       sinks.checkpoint_dir /
                                           ("ckpt_" + std::to_string(k + 1) + ".bin"));
            if (last && !sinks.reliability_csv.empty() && !splits.test.images.empty())
                metrics::write_reliability_csv(eval.calibration, sinks.reliability_csv);
        }
    }

    if (!sinks.metrics_csv.empty()) write_metrics_csv(result.rows, sinks.metrics_csv);
    return result;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << "iter,lr,l_sup,l_u_ce,l_kl_wm,l_kl_ms,l_kl_ws,total,mask_ratio,utilization,"
           "pseudo_acc,eval_error,eval_ece\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%ld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                      "%.10g\n",
                      r.iter, r.lr, r.losses.l_sup, r.losses.l_u_ce, r.losses.l_kl_wm,
                      r.losses.l_kl_ms, r.losses.l_kl_ws, r.losses.total, r.mask_ratio,
                      r.utilization, r.pseudo_acc ? *r.pseudo_acc : std::nan(""), r.eval_error,
                      r.eval_ece);
        out << buf;
    }
    if (!out) throw DataError(path.string() + ": write failed");
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");

    std::vector<MetricsRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<double, 13> v{};
        std::stringstream ss(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',') && i < v.size()) {
            try {
                v[i] = std::stod(cell);
            } catch (const std::exception&) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                                cell + "'");
            }
            ++i;
        }
        if (i != v.size())
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 13 columns");
        MetricsRow r;
        r.iter = static_cast<long>(v[0]);
        r.lr = v[1];
        r.losses.l_sup = v[2];
        r.losses.l_u_ce = v[3];
        r.losses.l_kl_wm = v[4];
        r.losses.l_kl_ms = v[5];
        r.losses.l_kl_ws = v[6];
        r.losses.total = v[7];
        r.mask_ratio = v[8];
        r.utilization = v[9];
        if (!std::isnan(v[10])) r.pseudo_acc = v[10];
        r.eval_error = v[11];
        r.eval_ece = v[12];
        rows.push_back(r);
    }
    return rows;
}

}  // namespace seqlab::train
