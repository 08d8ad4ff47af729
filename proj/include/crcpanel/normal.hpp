#pragma once

namespace crcpanel {

// Standard normal quantile, Wichura's AS241 (PPND16) rational
// approximation; relative accuracy about 1e-16 on (0, 1).
// Returns -inf / +inf at 0 / 1 and NaN outside [0, 1].
double normal_quantile(double prob);

double normal_cdf(double x);

}  // namespace crcpanel
