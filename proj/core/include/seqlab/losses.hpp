#pragma once

#include <vector>

#include "seqlab/prob.hpp"

namespace seqlab::prob {

using ProbBatch = std::vector<ProbDist>;

/// Per-sample d(loss)/d(logits) of a prediction stream, same layout as the
/// batch it refers to. Every loss here is a sum of -t·log(softmax(z)) terms
/// with constant targets, so each sample's contribution is w·(p - t).
using GradBatch = std::vector<std::vector<double>>;

/// Component values of the composed objective. Unsupervised components are
/// stored after any ablation weighting, so the total identity
///   total = l_sup + lambda_u * (l_u_ce + l_kl_wm + l_kl_ms + l_kl_ws)
/// always holds.
struct LossBreakdown {
    double l_sup = 0.0;
    double l_u_ce = 0.0;
    double l_kl_wm = 0.0;
    double l_kl_ms = 0.0;
    double l_kl_ws = 0.0;
    double total = 0.0;
};

struct SeqMatchConfig {
    double tau = 0.95;      // confidence threshold
    double T = 0.5;         // sharpening temperature
    double lambda_u = 1.0;  // unsupervised weight, multiplies the whole L_u
    double kl_weight = 1.0; // ablation switch for the three KL terms
};

/// Mean hard cross-entropy over a labeled batch of softmax outputs. If dlogits
/// is given it receives (p - onehot)/B per sample.
double supervised_ce(const std::vector<int>& labels, const ProbBatch& probs,
                     GradBatch* dlogits = nullptr);

/// Confidence-gated consistency with sharpened soft targets:
/// (1/uB) sum 1(max(q_w) >= tau) * H(sharpen(q_w, T), p_strong).
double uda_unsup_loss(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                      double T, GradBatch* dstrong = nullptr);

/// Confidence-gated hard pseudo-label cross entropy:
/// (1/uB) sum 1(max(q_w) >= tau) * H(argmax(q_w), p_strong).
double fixmatch_unsup_loss(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                           GradBatch* dstrong = nullptr);

/// Two-branch unsupervised cross entropy: confident samples use the hard
/// pseudo-label, the rest use the sharpened weak prediction as a soft target.
/// Every sample contributes through exactly one branch.
double seqmatch_unsup_ce(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                         double T, GradBatch* dstrong = nullptr);

/// One pairwise KL term: (1/uB) sum 1(max(gate_b) >= tau) *
/// KL(sharpen(src_b, T) || dst_b). src and gate are constant targets; only the
/// dst stream receives gradient.
double seqmatch_kl_pair(const ProbBatch& src_probs, const ProbBatch& dst_probs,
                        const ProbBatch& gate_probs, double tau, double T,
                        GradBatch* ddst = nullptr);

/// Low-confidence-only consistency: (1/uB) sum 1(max(q_w) < tau) *
/// KL(sharpen(q_w, T) || p_strong).
double low_conf_kl_loss(const ProbBatch& weak_probs, const ProbBatch& strong_probs, double tau,
                        double T, GradBatch* dstrong = nullptr);

/// Per-stream gradients of the composed objective w.r.t. prediction logits.
/// The weak stream only supplies targets and gates, so it has no entry.
struct SeqMatchGrads {
    GradBatch dlabeled;
    GradBatch dmedium;
    GradBatch dstrong;
};

/// Full composed objective. Target roles (weak targets, medium targets) are
/// split from prediction roles so a caller can freeze targets while varying
/// predictions; in training both medium arguments are the same batch.
LossBreakdown seqmatch_total_loss_ex(const std::vector<int>& labeled_targets,
                                     const ProbBatch& labeled_probs, const ProbBatch& weak_targets,
                                     const ProbBatch& medium_targets,
                                     const ProbBatch& medium_preds, const ProbBatch& strong_preds,
                                     const SeqMatchConfig& cfg, SeqMatchGrads* grads = nullptr);

/// Convenience form with medium playing both roles.
LossBreakdown seqmatch_total_loss(const std::vector<int>& labeled_targets,
                                  const ProbBatch& labeled_probs, const ProbBatch& weak_probs,
                                  const ProbBatch& medium_probs, const ProbBatch& strong_probs,
                                  const SeqMatchConfig& cfg, SeqMatchGrads* grads = nullptr);

}  // namespace seqlab::prob
