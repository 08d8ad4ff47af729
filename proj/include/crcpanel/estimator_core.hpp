#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crcpanel/panel.hpp"
#include "crcpanel/panel_algebra.hpp"

namespace crcpanel {

// Trimming bandwidth h_N: either supplied or chosen by the plug-in rule.
struct Bandwidth {
    bool is_plugin = true;
    double value = 0.0;

    static Bandwidth plugin() { return {}; }
    static Bandwidth fixed(double h) { return {false, h}; }
};

struct EstimatorConfig {
    int poly_order = 2;                       // L
    Bandwidth bandwidth = Bandwidth::plugin();
    int target_period = 1;                    // selects R
    std::vector<double> ci_levels{0.90, 0.95};

    // Throws Validation / InvalidPeriod for a panel with `periods` periods.
    void validate(int periods) const;
};

// h = 0.5 * min(sd, iqr / 1.34) * n^(-1/(2L+1)).
double plugin_bandwidth_from_spread(double sd, double iqr, std::size_t n, int poly_order);

// Plug-in rule on a sample of D: sample standard deviation (n-1 divisor) and
// interquartile range from linearly interpolated quantiles. Needs n >= 4 and
// a sample with positive spread.
double plugin_bandwidth(std::span<const double> d, int poly_order);

// Linearly interpolated sample quantile (Hyndman-Fan type 7) of sorted data.
double sorted_quantile(std::span<const double> sorted, double prob);

struct GroupCounts {
    std::size_t stayers = 0;      // D == 0
    std::size_t slow_movers = 0;  // 0 < |D| <= h
    std::size_t movers = 0;       // |D| > h

    std::size_t total() const { return stayers + slow_movers + movers; }
};

// Local-polynomial stacks over the window |D| <= h (inclusive).
struct PolyStacks {
    double bandwidth = 0.0;
    int poly_order = 0;
    Vector d;             // raw D_i
    std::vector<bool> local;  // |D_i| <= h
    Matrix d0l;           // N x (L+1): 1{local} (1, D, ..., D^L)
    Matrix d1l;           // N x L:     1{local} (D, ..., D^L)
    Vector h_hat;         // E_N[1{local} (1, ..., D^(L-1))']
    GroupCounts counts;

    std::size_t n() const { return static_cast<std::size_t>(d.size()); }
};

PolyStacks stack_poly(std::span<const double> d, double h, int poly_order);

std::vector<double> determinants(const std::vector<DesignArtifacts>& artifacts);

// delta-hat together with the by-products the influence function reuses.
struct DeltaFit {
    Vector delta;
    Vector weights;  // w_i = D_{0:L,i}' E_N[D_{0:L} D_{0:L}']^-1 e_1
    Matrix v_hat;    // E_N[w_i (A_i W_i)' A_i W_i]
};

// Local-polynomial weights w_i for the intercept at D = 0.
Vector intercept_weights(const PolyStacks& stacks);

DeltaFit estimate_delta(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                        const PolyStacks& stacks);

// Rows r_i' with r_i = A_i (Y_i - W_i delta). A_i is X* (T = p) or
// (X'X)* X' (T > p).
Matrix adjusted_residuals(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                          const Vector& delta);

// p x L; column l holds m^(l)(0) / l!.
Matrix estimate_gamma(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                      const PolyStacks& stacks, const Vector& delta);

// Trimmed mean over movers of D^-1 r_i. Throws NoMovers when none exist.
Vector estimate_beta_mover(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                           const PolyStacks& stacks, const Vector& delta);

// E_N[1{mover} D^-1 r] + gamma * h_hat.
Vector estimate_beta_unified(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                             const PolyStacks& stacks, const Vector& delta, const Matrix& gamma);

// Same estimand through the mover-share decomposition:
// E_N[1{mover}] beta_mover + sum_l gamma_l E_N[D^(l-1) 1{local}].
// Used as a cross-check of estimate_beta_unified.
Vector estimate_beta_unified_decomposed(const PanelDataset& dataset,
                                        const std::vector<DesignArtifacts>& artifacts,
                                        const PolyStacks& stacks, const Vector& delta,
                                        const Matrix& gamma);

// p x p(T-1) matrix picking the period-t time shift; zero for t = 1.
Matrix selector_matrix(int target_period, int periods, int regressors);

struct CoreEstimates {
    Vector delta_hat;
    Matrix gamma_hat;
    std::optional<Vector> beta_mover;  // absent when there are no movers
    Vector beta_unified;
    Vector theta_hat;
    double bandwidth_used = 0.0;
    GroupCounts counts;
    std::vector<std::string> warnings;
};

// Everything computed along the way, kept for inference.
struct CoreFit {
    std::vector<DesignArtifacts> artifacts;
    PolyStacks stacks;
    DeltaFit delta_fit;
    Matrix selector;
    CoreEstimates estimates;
};

// bandwidth -> stacks -> delta -> gamma -> beta_mover, beta_unified -> theta.
// Errors carry the failing stage as a message prefix.
CoreFit fit_core(const PanelDataset& dataset, const EstimatorConfig& config);

CoreEstimates estimate_all(const PanelDataset& dataset, const EstimatorConfig& config);

}  // namespace crcpanel
