#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "crcpanel/panel.hpp"

namespace crcpanel {

// Determinant. Closed form for 1x1 and 2x2, LU with partial pivoting
// otherwise. No row scaling is applied.
double determinant(const Matrix& m);

// Adjugate (transposed cofactor matrix), computed cofactor by cofactor so it
// stays defined at det(m) = 0: adjugate(m) * m == det(m) * I always.
// Cofactors use Laplace expansion for p <= 4 and LU minors beyond that.
Matrix adjugate(const Matrix& m);

// Time-shift design W (T x p(T-1)): row 1 is zero, row t >= 2 carries X_t'
// in column block t-2.
Matrix build_time_shift_design(const Matrix& x);

// M_X = I - X (X'X)^-1 X' for T > p. Throws SingularDesign naming
// `observation` when X'X is rank deficient.
Matrix residual_projector(const Matrix& x, std::size_t observation = 0);

// Per-observation quantities shared by every estimator.
//
// SquareTP: d = det(X), a_matrix = X* (p x p).
// TallTP:   d = det(X'X) >= 0, a_matrix = (X'X)* X' (p x T), m_x = M_X when
//           X'X is invertible (absent for stayers).
struct DesignArtifacts {
    double d = 0.0;
    Matrix a_matrix;
    Matrix w;
    std::optional<Matrix> m_x;
};

DesignArtifacts design_artifacts(const PanelObservation& obs, PanelMode mode, std::size_t index = 0);

std::vector<DesignArtifacts> design_artifacts(const PanelDataset& dataset);

}  // namespace crcpanel
