#pragma once

#include <optional>
#include <vector>

#include "crcpanel/estimator_core.hpp"
#include "crcpanel/inference.hpp"
#include "crcpanel/panel.hpp"
#include "crcpanel/panel_algebra.hpp"

namespace crcpanel {

// Pooled within-projection estimate of delta from units with D > h:
// E_N[1{D>h} W'M_X W]^-1 E_N[1{D>h} W'M_X Y].
struct PooledDeltaFit {
    Vector delta;
    Matrix v_hat;  // E_N[1{D>h} W'M_X W]
};

PooledDeltaFit estimate_delta_pooled(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                                     double h);

// Unified estimate for T > p; gamma is fitted internally from the
// (X'X)* X' residuals. Returns (beta_L, gamma).
struct ExtBeta {
    Vector beta_unified;
    Matrix gamma;
};

ExtBeta estimate_beta_unified_ext(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                                  const PolyStacks& stacks, const Vector& delta);

struct ExtEstimates {
    Vector delta_hat;
    Matrix gamma_hat;
    std::optional<Vector> beta_mover;  // trimmed mean over D > h, convenience only
    Vector beta_unified;
    Vector theta_hat;
    double bandwidth_used = 0.0;
    GroupCounts counts;
    Matrix v_hat;
    Matrix q_hat;
    Matrix zeta;
    std::vector<std::string> warnings;
};

struct ExtFit {
    std::vector<DesignArtifacts> artifacts;
    PolyStacks stacks;
    Matrix selector;
    ExtEstimates estimates;
};

// zeta-hat, V-hat and Q-hat for T > p.
InfluenceSet influence_ext(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                           const PolyStacks& stacks, const PooledDeltaFit& delta_fit, const Matrix& gamma,
                           const Matrix& selector);

// Full T > p pipeline including the influence function. The plug-in rule is
// applied to the det(X'X) sample.
ExtFit fit_ext(const PanelDataset& dataset, const EstimatorConfig& config);

}  // namespace crcpanel
