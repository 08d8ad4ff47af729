#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crcpanel/estimator_core.hpp"
#include "crcpanel/panel.hpp"

namespace crcpanel {

// Two-period design with X_t = (1, X_t)', X_2 = X_1 + lambda * eps,
// P(eps <= t) = pi0 + (1 - pi0) t^alpha on [0, 1], and
// A | eps ~ N(rho * sigma_a * (1 + eps), sigma_a^2).
struct SimulationConfig {
    double rho = 0.5;
    double pi0 = 0.0;
    double alpha = 1.0;
    double sigma_a = 0.1;
    double sigma_u = 0.1;
    double time_shift = 0.5;  // mean shift of d_t for t >= 2
    std::size_t n = 1000;
    int poly_order = 2;
    std::size_t reps = 500;
    std::uint64_t seed = 1;
    std::vector<double> ci_levels{0.90, 0.95};

    void validate() const;
};

// Inverse-CDF draw of eps from a uniform u in [0, 1).
double draw_epsilon(double u, double pi0, double alpha);

// Test hooks: pin A to a constant and/or switch off the idiosyncratic
// noise, which turns the design into a constant-coefficient panel.
struct DrawHooks {
    std::optional<double> fixed_a;
    bool zero_noise = false;
};

// Replication `index` of the T = p = 2 design. Uses CounterStream(seed,
// index); per unit the draws are, in order: X_1, eps, lambda, A, then for
// t = 1, 2 the four noises U_11t, U_12t, U_21t, U_22t.
PanelDataset generate_panel(const SimulationConfig& config, std::uint64_t index, const DrawHooks& hooks = {});

// T > p smoke-test design (p = 2): X_t = X_1 + lambda_t * eps for t >= 2
// with independent signs, and time shift (t - 1) * time_shift.
PanelDataset generate_tall_panel(const SimulationConfig& config, std::uint64_t index, int periods,
                                 const DrawHooks& hooks = {});

struct TrueParameters {
    Vector beta;                // E[b_1]
    std::vector<Vector> delta;  // per period t = 1..T; delta[0] = 0
};

TrueParameters true_parameters(const SimulationConfig& config, int periods = 2);

// One estimator's outcome within a replication.
struct EstimatorDraw {
    Vector estimate;
    Vector std_error;
    std::vector<std::vector<bool>> hits;  // [level][coordinate]
};

struct ReplicationRecord {
    std::uint64_t index = 0;
    bool failed = false;
    std::string failure;
    double bandwidth = 0.0;
    GroupCounts counts;
    EstimatorDraw mover;
    EstimatorDraw unified;
};

// Bandwidth, both estimators for beta (target period 1), their standard
// errors and interval hits. Numerical failures are captured in the record.
ReplicationRecord run_replication(const SimulationConfig& config, std::uint64_t index, const DrawHooks& hooks = {});

struct CoefficientSummary {
    double true_value = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double sd = 0.0;    // population divisor (reps)
    double rmse = 0.0;
    std::vector<double> coverage;  // per ci level
};

struct SimulationSummary {
    std::vector<double> ci_levels;
    std::vector<CoefficientSummary> mover;    // per coordinate
    std::vector<CoefficientSummary> unified;  // per coordinate
    std::size_t reps_completed = 0;
    std::size_t reps_failed = 0;
    std::vector<std::string> failures;  // first few diagnostics
};

// Aggregates records in index order; failed records are skipped.
SimulationSummary summarize(const SimulationConfig& config, const std::vector<ReplicationRecord>& records);

// Replications 0..reps-1 on `threads` workers. The result does not depend
// on the thread count. Throws StudyFailed when every replication fails.
SimulationSummary run_study(const SimulationConfig& config, unsigned threads = 1);

struct NamedSummary {
    std::string name;
    SimulationConfig config;
    SimulationSummary summary;
};

enum class TableFormat { Csv, Markdown };

// Columns: Study, Estimator, Coefficient, True, Mean, Bias, SD, RMSE and one
// coverage column per level ("90%", "95%"), three decimals.
std::string emit_table(const std::vector<NamedSummary>& studies, TableFormat format);

}  // namespace crcpanel
