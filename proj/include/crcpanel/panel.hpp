#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace crcpanel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class PanelMode { SquareTP, TallTP };

const char* to_string(PanelMode mode);

// One cross-sectional unit: outcomes y (length T) and regressors x (T x p),
// row t of x holding X_t'.
struct PanelObservation {
    Vector y;
    Matrix x;
};

bool operator==(const PanelObservation& a, const PanelObservation& b);

// Balanced short panel. Immutable once built; every observation shares the
// same (T, p) and T >= p.
class PanelDataset {
public:
    // Validates shapes and finiteness. `forced_mode`, when given, must agree
    // with the (T, p) of the data.
    static PanelDataset from_observations(std::vector<PanelObservation> observations,
                                          std::optional<PanelMode> forced_mode = std::nullopt);

    std::size_t n() const { return observations_.size(); }
    int periods() const { return periods_; }
    int regressors() const { return regressors_; }
    PanelMode mode() const { return mode_; }

    const std::vector<PanelObservation>& observations() const { return observations_; }
    const PanelObservation& operator[](std::size_t i) const { return observations_[i]; }

    // Copy with every outcome multiplied by `c`.
    PanelDataset scaled_outcomes(double c) const;

    friend bool operator==(const PanelDataset& a, const PanelDataset& b) {
        return a.observations_ == b.observations_ && a.mode_ == b.mode_;
    }

private:
    PanelDataset() = default;

    std::vector<PanelObservation> observations_;
    int periods_ = 0;
    int regressors_ = 0;
    PanelMode mode_ = PanelMode::SquareTP;
};

}  // namespace crcpanel
