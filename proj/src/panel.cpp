#include "crcpanel/panel.hpp"

#include <string>

#include "crcpanel/error.hpp"

namespace crcpanel {

const char* to_string(PanelMode mode) {
    return mode == PanelMode::SquareTP ? "square" : "tall";
}

bool operator==(const PanelObservation& a, const PanelObservation& b) {
    return a.y.size() == b.y.size() && a.x.rows() == b.x.rows() && a.x.cols() == b.x.cols() &&
           a.y == b.y && a.x == b.x;
}

PanelDataset PanelDataset::from_observations(std::vector<PanelObservation> observations,
                                             std::optional<PanelMode> forced_mode) {
    if (observations.size() < 2) {
        throw Error(ErrorKind::Validation,
                    "panel needs at least 2 observations, got " + std::to_string(observations.size()));
    }
    const auto periods = observations.front().x.rows();
    const auto regressors = observations.front().x.cols();
    if (regressors < 1) {
        throw Error(ErrorKind::UnsupportedShape, "panel needs at least one regressor");
    }
    if (periods < regressors) {
        throw Error(ErrorKind::UnsupportedShape,
                    "T=" + std::to_string(periods) + " is smaller than p=" + std::to_string(regressors));
    }
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& obs = observations[i];
        if (obs.x.rows() != periods || obs.x.cols() != regressors || obs.y.size() != periods) {
            throw Error(ErrorKind::Dimension,
                        "observation " + std::to_string(i) + " does not match the panel shape (T=" +
                            std::to_string(periods) + ", p=" + std::to_string(regressors) + ")");
        }
        if (!obs.x.allFinite() || !obs.y.allFinite()) {
            throw Error(ErrorKind::Validation, "observation " + std::to_string(i) + " has non-finite entries");
        }
    }

    const PanelMode inferred = periods == regressors ? PanelMode::SquareTP : PanelMode::TallTP;
    if (forced_mode && *forced_mode != inferred) {
        throw Error(ErrorKind::UnsupportedShape,
                    std::string("requested mode '") + to_string(*forced_mode) + "' but T=" +
                        std::to_string(periods) + ", p=" + std::to_string(regressors));
    }

    PanelDataset ds;
    ds.observations_ = std::move(observations);
    ds.periods_ = static_cast<int>(periods);
    ds.regressors_ = static_cast<int>(regressors);
    ds.mode_ = inferred;
    return ds;
}

PanelDataset PanelDataset::scaled_outcomes(double c) const {
    PanelDataset out = *this;
    for (auto& obs : out.observations_) obs.y *= c;
    return out;
}

}  // namespace crcpanel
