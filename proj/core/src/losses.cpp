#include "seqlab/losses.hpp"

#include <string>

#include "seqlab/errors.hpp"

namespace seqlab::prob {

namespace {

void require_same_size(const ProbBatch& a, const ProbBatch& b, const char* what) {
    if (a.size() != b.size())
        throw ParameterError(std::string(what) + ": batch sizes " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
}

void init_grads(GradBatch* grads, const ProbBatch& batch) {
    if (!grads) return;
    grads->assign(batch.size(), {});
    for (std::size_t i = 0; i < batch.size(); ++i)
        (*grads)[i].assign(batch[i].p.size(), 0.0);
}

// Accumulate w * (pred - target) into the sample's logit gradient.
void add_ce_grad(GradBatch* grads, std::size_t i, const ProbDist& pred, const ProbDist& target,
                 double w) {
    if (!grads) return;
    auto& g = (*grads)[i];
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += w * (pred.p[k] - target.p[k]);
}

}  // namespace

double supervised_ce(const std::vector<int>& labels, const ProbBatch& probs, GradBatch* dlogits) {
    if (labels.size() != probs.size())
        throw ParameterError("supervised_ce: labels/probs size mismatch");
    init_grads(dlogits, probs);
    if (probs.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += cross_entropy_hard(labels[i], probs[i]);
        add_ce_grad(dlogits, i, probs[i], one_hot(labels[i], probs[i].size()), inv);
    }
    return acc * inv;
}

double uda_unsup_loss(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                      double T, GradBatch* dstrong) {
    require_same_size(weak_probs, strong_probs, "uda_unsup_loss");
    init_grads(dstrong, strong_probs);
    if (weak_probs.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(weak_probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weak_probs.size(); ++i) {
        if (!confidence_mask(weak_probs[i], tau)) continue;
        const ProbDist target = sharpen(weak_probs[i], T);
        acc += cross_entropy_soft(target, strong_probs[i]);
        add_ce_grad(dstrong, i, strong_probs[i], target, inv);
    }
    return acc * inv;
}

double fixmatch_unsup_loss(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                           GradBatch* dstrong) {
    require_same_size(weak_probs, strong_probs, "fixmatch_unsup_loss");
    init_grads(dstrong, strong_probs);
    if (weak_probs.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(weak_probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weak_probs.size(); ++i) {
        const PseudoLabel pl = pseudo_label(weak_probs[i]);
        if (pl.confidence < tau) continue;
        acc += cross_entropy_hard(pl.class_index, strong_probs[i]);
        add_ce_grad(dstrong, i, strong_probs[i], one_hot(pl.class_index, strong_probs[i].size()),
                    inv);
    }
    return acc * inv;
}

double seqmatch_unsup_ce(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                         double T, GradBatch* dstrong) {
    require_same_size(weak_probs, strong_probs, "seqmatch_unsup_ce");
    init_grads(dstrong, strong_probs);
    if (weak_probs.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(weak_probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weak_probs.size(); ++i) {
        const PseudoLabel pl = pseudo_label(weak_probs[i]);
        const ProbDist target = pl.confidence >= tau
                                    ? one_hot(pl.class_index, strong_probs[i].size())
                                    : sharpen(weak_probs[i], T);
        acc += cross_entropy_soft(target, strong_probs[i]);
        add_ce_grad(dstrong, i, strong_probs[i], target, inv);
    }
    return acc * inv;
}

double seqmatch_kl_pair(const ProbBatch& src_probs, const ProbBatch& dst_probs,
                        const ProbBatch& gate_probs, double tau, double T, GradBatch* ddst) {
    require_same_size(src_probs, dst_probs, "seqmatch_kl_pair");
    require_same_size(src_probs, gate_probs, "seqmatch_kl_pair");
    init_grads(ddst, dst_probs);
    if (src_probs.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(src_probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < src_probs.size(); ++i) {
        if (!confidence_mask(gate_probs[i], tau)) continue;
        const ProbDist target = sharpen(src_probs[i], T);
        acc += kl_div(target, dst_probs[i]);
        add_ce_grad(ddst, i, dst_probs[i], target, inv);
    }
    return acc * inv;
}

double low_conf_kl_loss(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                        double T, GradBatch* dstrong) {
    require_same_size(weak_probs, strong_probs, "low_conf_kl_loss");
    init_grads(dstrong, strong_probs);
    if (weak_probs.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(weak_probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weak_probs.size(); ++i) {
        if (confidence_mask(weak_probs[i], tau)) continue;
        const ProbDist target = sharpen(weak_probs[i], T);
        acc += kl_div(target, strong_probs[i]);
        add_ce_grad(dstrong, i, strong_probs[i], target, inv);
    }
    return acc * inv;
}

LossBreakdown seqmatch_total_loss_ex(const std::vector<int>& labeled_targets,
                                     const ProbBatch& labeled_probs, const ProbBatch& weak_targets,
                                     const ProbBatch& medium_targets,
                                     const ProbBatch& medium_preds, const ProbBatch& strong_preds,
                                     const SeqMatchConfig& cfg, SeqMatchGrads* grads) {
    require_same_size(weak_targets, medium_targets, "seqmatch_total_loss");
    require_same_size(weak_targets, medium_preds, "seqmatch_total_loss");
    require_same_size(weak_targets, strong_preds, "seqmatch_total_loss");

    GradBatch* dlab = grads ? &grads->dlabeled : nullptr;
    GradBatch* dmed = grads ? &grads->dmedium : nullptr;
    GradBatch* dstr = grads ? &grads->dstrong : nullptr;

    LossBreakdown out;
    out.l_sup = supervised_ce(labeled_targets, labeled_probs, dlab);

    GradBatch g_ce, g_wm, g_ms, g_ws;
    out.l_u_ce = seqmatch_unsup_ce(weak_targets, strong_preds, cfg.tau, cfg.T,
                                   dstr ? &g_ce : nullptr);
    out.l_kl_wm = cfg.kl_weight * seqmatch_kl_pair(weak_targets, medium_preds, weak_targets,
                                                   cfg.tau, cfg.T, dmed ? &g_wm : nullptr);
    out.l_kl_ms = cfg.kl_weight * seqmatch_kl_pair(medium_targets, strong_preds, medium_targets,
                                                   cfg.tau, cfg.T, dstr ? &g_ms : nullptr);
    out.l_kl_ws = cfg.kl_weight * seqmatch_kl_pair(weak_targets, strong_preds, weak_targets,
                                                   cfg.tau, cfg.T, dstr ? &g_ws : nullptr);
    out.total = out.l_sup + cfg.lambda_u * (out.l_u_ce + out.l_kl_wm + out.l_kl_ms + out.l_kl_ws);

    if (grads) {
        init_grads(dmed, medium_preds);
        init_grads(dstr, strong_preds);
        const double wu = cfg.lambda_u;
        const double wkl = cfg.lambda_u * cfg.kl_weight;
        for (std::size_t i = 0; i < strong_preds.size(); ++i) {
            auto& dm = (*dmed)[i];
            auto& ds = (*dstr)[i];
            for (std::size_t k = 0; k < ds.size(); ++k) {
                dm[k] = wkl * g_wm[i][k];
                ds[k] = wu * g_ce[i][k] + wkl * (g_ms[i][k] + g_ws[i][k]);
            }
        }
    }
    return out;
}

LossBreakdown seqmatch_total_loss(const std::vector<int>& labeled_targets,
                                  const ProbBatch& labeled_probs, const ProbBatch& weak_probs,
                                  const ProbBatch& medium_probs, const ProbBatch& strong_probs,
                                  const SeqMatchConfig& cfg, SeqMatchGrads* grads) {
    return seqmatch_total_loss_ex(labeled_targets, labeled_probs, weak_probs, medium_probs,
                                  medium_probs, strong_probs, cfg, grads);
}

}  // namespace seqlab::prob
