#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crcpanel/estimator_core.hpp"
#include "crcpanel/inference.hpp"
#include "crcpanel/panel.hpp"
#include "crcpanel/simulation.hpp"

namespace crcpanel {

// Point estimate with its standard errors and intervals.
struct InferenceSection {
    Vector estimate;
    Matrix covariance;
    Vector std_errors;
    std::vector<IntervalSet> intervals;
};

struct RunReport {
    std::string version;
    std::string input;
    EstimatorConfig config;
    PanelMode mode = PanelMode::SquareTP;
    std::size_t n = 0;
    int periods = 0;
    int regressors = 0;

    double bandwidth = 0.0;
    GroupCounts counts;
    Vector delta_hat;
    Matrix gamma_hat;
    Vector beta_unified;
    std::optional<Vector> beta_mover;
    InferenceSection theta;                // beta_L + R delta
    std::optional<InferenceSection> mover;  // beta_M + R delta (T = p only)
    std::vector<std::string> warnings;
};

// Exact equality, shapes included.
bool operator==(const RunReport& a, const RunReport& b);

// Dispatches on the panel mode, then attaches inference.
RunReport run_estimation(const PanelDataset& dataset, const EstimatorConfig& config, std::string input = {});

// Pretty JSON with a fixed key order and 17 significant digits. Throws
// Serialization on non-finite numbers.
std::string write_report_json(const RunReport& report);
RunReport read_report_json(std::string_view text);

// Plain coefficient table for `estimate --format csv|markdown`.
std::string write_report_table(const RunReport& report, TableFormat format);

std::string write_summary_json(const std::vector<NamedSummary>& studies);
std::vector<NamedSummary> read_summary_json(std::string_view text);

}  // namespace crcpanel
