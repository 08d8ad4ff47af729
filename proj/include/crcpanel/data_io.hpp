#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crcpanel/panel.hpp"
#include "crcpanel/simulation.hpp"

namespace crcpanel {

struct PanelReadResult {
    PanelDataset dataset;
    std::vector<std::string> ids;  // sorted, one per observation
    std::vector<std::string> warnings;
};

// Long-format CSV: header with columns id, period, y, x1..xp (any order,
// extra columns ignored). Rows are grouped by id (sorted lexicographically)
// and by period. Period labels other than 1..T are mapped to 1..T in sorted
// order with a warning. `regressors` = 0 infers p from the x1, x2, ... run
// in the header.
PanelReadResult read_panel_csv(std::istream& in, int regressors = 0,
                               std::optional<PanelMode> forced_mode = std::nullopt);

// Writes the canonical CSV layout (zero-padded ids, 17 significant digits),
// which read_panel_csv reproduces exactly.
void write_panel_csv(std::ostream& out, const PanelDataset& dataset);

// Key-value simulation config: `key = value` lines, '#' comments, optional
// `[name]` section headers. Keys before the first header are defaults for
// every section. Keys: rho, pi0, alpha, sigma_a, sigma_u, time_shift, n,
// poly_order, reps, seed, ci_levels (comma separated).
struct NamedConfig {
    std::string name;
    SimulationConfig config;
};

std::vector<NamedConfig> parse_simulation_configs(std::string_view text);

}  // namespace crcpanel
