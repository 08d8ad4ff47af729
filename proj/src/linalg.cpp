#include "crcpanel/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace crcpanel {

double condition_number(const Matrix& a) {
    if (a.size() == 0) return 1.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

Matrix solve_checked(const Matrix& a, const Matrix& b, ErrorKind on_singular, std::string_view what) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) {
        throw Error(ErrorKind::Dimension, "solve: incompatible shapes for " + std::string(what));
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw Error(ErrorKind::Propagation, "solve: non-finite entries in " + std::string(what));
    }
    const auto n = a.rows();

    Vector scale = Vector::Ones(n);
    bool equilibrate = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a(i, i) == 0.0) {
            equilibrate = false;
            break;
        }
    }
    if (equilibrate) {
        for (Eigen::Index i = 0; i < n; ++i) scale(i) = 1.0 / std::sqrt(std::abs(a(i, i)));
    }
    const Matrix scaled = scale.asDiagonal() * a * scale.asDiagonal();

    const double cond = condition_number(scaled);
    if (!(cond <= kConditionLimit)) {
        std::ostringstream msg;
        msg << std::string(what) << " is singular or ill-conditioned (condition number " << cond
            << " exceeds " << kConditionLimit << ")";
        throw Error(on_singular, msg.str());
    }

    Eigen::PartialPivLU<Matrix> lu(scaled);
    const Matrix z = lu.solve(scale.asDiagonal() * b);
    return scale.asDiagonal() * z;
}

}  // namespace crcpanel
