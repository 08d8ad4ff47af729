#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crcpanel/estimator_core.hpp"
#include "crcpanel/panel.hpp"
#include "crcpanel/panel_algebra.hpp"

namespace crcpanel {

// Estimated influence function of theta-hat, row i = zeta_i'.
struct InfluenceSet {
    Matrix zeta;         // N x p
    Matrix mover_block;  // N x p, centered mover term (first block of zeta)
    Matrix v_hat;
    Matrix q_hat;        // p x p(T-1)
};

// Pieces of zeta that do not depend on how delta-hat was formed.
struct UnifiedInfluenceParts {
    Matrix mover_block;  // 1{mover} D^-1 r_i - E_N[...]
    Matrix local_block;  // (r_i - gamma D_{1:L,i}) D_{1:L,i}' G1^-1 h_hat
    Matrix q_hat;        // R - E_N[(1{mover} D^-1 + D_{1:L}' G1^-1 h_hat) A W]
};

UnifiedInfluenceParts unified_influence_parts(const PanelDataset& dataset,
                                              const std::vector<DesignArtifacts>& artifacts,
                                              const PolyStacks& stacks, const Vector& delta,
                                              const Matrix& gamma, const Matrix& selector);

// Per-observation delta-hat scores s_i (N x p(T-1)) for the T = p estimator:
// s_i = w_i (A_i W_i)' r_i.
Matrix local_delta_scores(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                          const Vector& weights, const Vector& delta);

// Q V^-1 applied to each score row: returns N x p with rows (Q V^-1 s_i)'.
Matrix propagate_delta_scores(const Matrix& q, const Matrix& v, const Matrix& scores);

// Influence function of theta-hat = beta_L + R delta for T = p.
InfluenceSet influence_contributions(const PanelDataset& dataset, const CoreFit& fit);

// Influence function for the mover estimator beta^M + R delta. The mover
// term is linearized as a ratio, 1{mover} (D^-1 r_i - beta^M) / P_N(mover),
// and delta-hat propagates through R - E_N[1{mover} D^-1 A W] / P_N(mover).
Matrix mover_influence(const PanelDataset& dataset, const CoreFit& fit);

struct IntervalSet {
    double level = 0.0;
    Vector lower;
    Vector upper;
};

struct InferenceReport {
    Matrix covariance;  // E_N[zeta zeta'] / N
    Vector std_errors;
    std::vector<IntervalSet> intervals;
};

// Sampling covariance E_N[zeta zeta'] / N (uncentered second moment) and
// standard errors. Intervals are left empty.
InferenceReport covariance_and_se(const Matrix& zeta);

// theta_k -/+ z_{(1+level)/2} * se_k.
IntervalSet confidence_intervals(const Vector& theta, const Vector& std_errors, double level);

// covariance_and_se followed by one interval set per level.
InferenceReport infer(const Vector& theta, const Matrix& zeta, std::span<const double> levels);

}  // namespace crcpanel
