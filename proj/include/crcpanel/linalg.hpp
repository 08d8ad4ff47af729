#pragma once

#include <string_view>

#include "crcpanel/error.hpp"
#include "crcpanel/panel.hpp"

namespace crcpanel {

// Largest admissible 2-norm condition number for any explicit solve.
inline constexpr double kConditionLimit = 1e12;

// 2-norm condition number via singular values; +inf for singular input.
double condition_number(const Matrix& a);

// Solves a * x = b for square a with partial-pivoting LU.
//
// When every diagonal entry of `a` is nonzero the system is first
// equilibrated symmetrically, a -> S a S with S = diag(|a_ii|^-1/2), and the
// condition limit is applied to the equilibrated matrix. Polynomial moment
// matrices (1, D, ..., D^2L) are badly scaled but well posed, and this keeps
// their solve exact in intent. A failing check throws Error(`on_singular`)
// naming `what`.
Matrix solve_checked(const Matrix& a, const Matrix& b, ErrorKind on_singular, std::string_view what);

}  // namespace crcpanel
