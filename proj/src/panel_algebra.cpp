#include "crcpanel/panel_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "crcpanel/error.hpp"
#include "crcpanel/linalg.hpp"

namespace crcpanel {
namespace {

void require_square(const Matrix& m, const char* op) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::Dimension, std::string(op) + ": matrix is " + std::to_string(m.rows()) + "x" +
                                              std::to_string(m.cols()) + ", expected square");
    }
    if (!m.allFinite()) throw Error(ErrorKind::Validation, std::string(op) + ": non-finite entries");
}

double lu_determinant(Matrix a) {
    const auto n = a.rows();
    double det = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index pivot = k;
        double best = std::abs(a(k, k));
        for (Eigen::Index r = k + 1; r < n; ++r) {
            if (std::abs(a(r, k)) > best) {
                best = std::abs(a(r, k));
                pivot = r;
            }
        }
        if (best == 0.0) return 0.0;
        if (pivot != k) {
            a.row(k).swap(a.row(pivot));
            det = -det;
        }
        det *= a(k, k);
        for (Eigen::Index r = k + 1; r < n; ++r) {
            const double f = a(r, k) / a(k, k);
            if (f == 0.0) continue;
            a.row(r).tail(n - k - 1) -= f * a.row(k).tail(n - k - 1);
        }
    }
    return det;
}

// Exact-polynomial Laplace expansion along the first row; only used for
// n <= 3 minors of the small-p adjugate.
double laplace_determinant(const Matrix& m) {
    switch (m.rows()) {
    case 0: return 1.0;
    case 1: return m(0, 0);
    case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default: return lu_determinant(m);
    }
}

Matrix minor_of(const Matrix& m, Eigen::Index row, Eigen::Index col) {
    const auto n = m.rows();
    Matrix out(n - 1, n - 1);
    for (Eigen::Index i = 0, oi = 0; i < n; ++i) {
        if (i == row) continue;
        for (Eigen::Index j = 0, oj = 0; j < n; ++j) {
            if (j == col) continue;
            out(oi, oj++) = m(i, j);
        }
        ++oi;
    }
    return out;
}

}  // namespace

double determinant(const Matrix& m) {
    require_square(m, "determinant");
    switch (m.rows()) {
    case 0: return 1.0;
    case 1: return m(0, 0);
    case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    default: return lu_determinant(m);
    }
}

Matrix adjugate(const Matrix& m) {
    require_square(m, "adjugate");
    const auto p = m.rows();
    if (p == 0) throw Error(ErrorKind::Dimension, "adjugate: empty matrix");
    if (p == 1) return Matrix::Ones(1, 1);
    if (p == 2) {
        Matrix adj(2, 2);
        adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
        return adj;
    }
    Matrix adj(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            const Matrix minor = minor_of(m, i, j);
            const double det = p <= 4 ? laplace_determinant(minor) : lu_determinant(minor);
            adj(j, i) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * det;
        }
    }
    return adj;
}

Matrix build_time_shift_design(const Matrix& x) {
    const auto periods = x.rows();
    const auto p = x.cols();
    if (periods < 2) {
        throw Error(ErrorKind::UnsupportedShape,
                    "time-shift design needs T >= 2, got T=" + std::to_string(periods));
    }
    Matrix w = Matrix::Zero(periods, p * (periods - 1));
    for (Eigen::Index t = 1; t < periods; ++t) {
        w.block(t, (t - 1) * p, 1, p) = x.row(t);
    }
    return w;
}

Matrix residual_projector(const Matrix& x, std::size_t observation) {
    const auto periods = x.rows();
    const auto p = x.cols();
    if (periods <= p) {
        throw Error(ErrorKind::UnsupportedShape, "residual projector needs T > p");
    }
    const Matrix gram = x.transpose() * x;
    Matrix coef;
    try {
        coef = solve_checked(gram, x.transpose(), ErrorKind::SingularDesign, "X'X");
    } catch (const Error& e) {
        throw Error(ErrorKind::SingularDesign,
                    "observation " + std::to_string(observation) + ": " + e.what());
    }
    Matrix mx = Matrix::Identity(periods, periods) - x * coef;
    // Symmetrize away round-off so downstream quadratic forms are symmetric.
    return 0.5 * (mx + mx.transpose());
}

DesignArtifacts design_artifacts(const PanelObservation& obs, PanelMode mode, std::size_t index) {
    const auto periods = obs.x.rows();
    const auto p = obs.x.cols();
    if ((mode == PanelMode::SquareTP) != (periods == p)) {
        throw Error(ErrorKind::Dimension, "observation " + std::to_string(index) + " shape does not match mode");
    }
    DesignArtifacts out;
    out.w = build_time_shift_design(obs.x);
    if (mode == PanelMode::SquareTP) {
        out.d = determinant(obs.x);
        out.a_matrix = adjugate(obs.x);
        return out;
    }
    const Matrix gram = obs.x.transpose() * obs.x;
    // A Gram determinant is non-negative, but round-off on stayers leaves it
    // a few ulps either side of zero. Numerically singular Grams count as
    // stayers.
    out.d = std::max(0.0, determinant(gram));
    out.a_matrix = adjugate(gram) * obs.x.transpose();
    if (out.d > 0.0) {
        if (condition_number(gram) <= kConditionLimit) {
            out.m_x = residual_projector(obs.x, index);
        } else {
            out.d = 0.0;
        }
    }
    return out;
}

std::vector<DesignArtifacts> design_artifacts(const PanelDataset& dataset) {
    std::vector<DesignArtifacts> out;
    out.reserve(dataset.n());
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        out.push_back(design_artifacts(dataset[i], dataset.mode(), i));
    }
    return out;
}

}  // namespace crcpanel
