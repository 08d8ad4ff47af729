#include "crcpanel/estimator_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crcpanel/error.hpp"
#include "crcpanel/linalg.hpp"

namespace crcpanel {
namespace {

std::string counts_text(const GroupCounts& c) {
    return "stayers=" + std::to_string(c.stayers) + ", slow movers=" + std::to_string(c.slow_movers) +
           ", movers=" + std::to_string(c.movers);
}

void require_consistent(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                        const PolyStacks& stacks) {
    if (artifacts.size() != dataset.n() || stacks.n() != dataset.n()) {
        throw Error(ErrorKind::Dimension, "artifacts/stacks do not match the dataset size");
    }
}

}  // namespace

void EstimatorConfig::validate(int periods) const {
    if (poly_order < 1) {
        throw Error(ErrorKind::Validation, "polynomial order must be >= 1, got " + std::to_string(poly_order));
    }
    if (!bandwidth.is_plugin && !(bandwidth.value > 0.0 && std::isfinite(bandwidth.value))) {
        throw Error(ErrorKind::Validation, "explicit bandwidth must be a positive finite number");
    }
    if (target_period < 1 || target_period > periods) {
        throw Error(ErrorKind::InvalidPeriod, "target period " + std::to_string(target_period) +
                                                  " outside [1, " + std::to_string(periods) + "]");
    }
    for (double level : ci_levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw Error(ErrorKind::Validation, "confidence level must lie in (0, 1)");
        }
    }
}

double plugin_bandwidth_from_spread(double sd, double iqr, std::size_t n, int poly_order) {
    if (n < 4) throw Error(ErrorKind::Validation, "plug-in bandwidth needs N >= 4");
    if (poly_order < 1) throw Error(ErrorKind::Validation, "polynomial order must be >= 1");
    const double spread = std::min(sd, iqr / 1.34);
    const double h = 0.5 * spread * std::pow(static_cast<double>(n), -1.0 / (2.0 * poly_order + 1.0));
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(ErrorKind::DegenerateSample,
                    "plug-in bandwidth is not positive (sd=" + std::to_string(sd) + ", iqr=" + std::to_string(iqr) +
                        ")");
    }
    return h;
}

double sorted_quantile(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw Error(ErrorKind::Validation, "quantile of an empty sample");
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double plugin_bandwidth(std::span<const double> d, int poly_order) {
    const std::size_t n = d.size();
    if (n < 4) throw Error(ErrorKind::Validation, "plug-in bandwidth needs N >= 4, got " + std::to_string(n));

    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    std::vector<double> sorted(d.begin(), d.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw Error(ErrorKind::DegenerateSample, "all D values are identical; plug-in bandwidth undefined");
    }
    const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
    return plugin_bandwidth_from_spread(sd, iqr, n, poly_order);
}

PolyStacks stack_poly(std::span<const double> d, double h, int poly_order) {
    if (!(h > 0.0)) throw Error(ErrorKind::Validation, "bandwidth must be positive");
    if (poly_order < 1) throw Error(ErrorKind::Validation, "polynomial order must be >= 1");

    const auto n = static_cast<Eigen::Index>(d.size());
    const int order = poly_order;
    PolyStacks s;
    s.bandwidth = h;
    s.poly_order = poly_order;
    s.d = Eigen::Map<const Vector>(d.data(), n);
    s.local.assign(d.size(), false);
    s.d0l = Matrix::Zero(n, order + 1);
    s.d1l = Matrix::Zero(n, order);
    s.h_hat = Vector::Zero(order);

    for (Eigen::Index i = 0; i < n; ++i) {
        const double di = d[static_cast<std::size_t>(i)];
        if (std::abs(di) > h) {
            ++s.counts.movers;
            continue;
        }
        s.local[static_cast<std::size_t>(i)] = true;
        if (di == 0.0) {
            ++s.counts.stayers;
        } else {
            ++s.counts.slow_movers;
        }
        double power = 1.0;
        for (int l = 0; l <= order; ++l) {
            s.d0l(i, l) = power;
            if (l >= 1) s.d1l(i, l - 1) = power;
            if (l < order) s.h_hat(l) += power;
            power *= di;
        }
    }
    if (n > 0) s.h_hat /= static_cast<double>(n);
    return s;
}

std::vector<double> determinants(const std::vector<DesignArtifacts>& artifacts) {
    std::vector<double> d;
    d.reserve(artifacts.size());
    for (const auto& a : artifacts) d.push_back(a.d);
    return d;
}

Vector intercept_weights(const PolyStacks& stacks) {
    const double n = static_cast<double>(stacks.n());
    const Matrix gram = stacks.d0l.transpose() * stacks.d0l / n;
    const Vector e1 = Vector::Unit(stacks.poly_order + 1, 0);
    Vector c;
    try {
        c = solve_checked(gram, e1, ErrorKind::TooFewSlowMovers, "E_N[D_{0:L} D_{0:L}']");
    } catch (const Error& e) {
        throw Error(ErrorKind::TooFewSlowMovers, std::string(e.what()) + " (" + counts_text(stacks.counts) + ")");
    }
    return stacks.d0l * c;
}

DeltaFit estimate_delta(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                        const PolyStacks& stacks) {
    require_consistent(dataset, artifacts, stacks);
    const Vector w = intercept_weights(stacks);
    const auto q = artifacts.front().w.cols();
    Matrix v = Matrix::Zero(q, q);
    Vector b = Vector::Zero(q);
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const double wi = w(static_cast<Eigen::Index>(i));
        if (wi == 0.0) continue;
        const auto& art = artifacts[i];
        const Matrix z = art.a_matrix * art.w;
        v.noalias() += wi * (z.transpose() * z);
        b.noalias() += wi * (z.transpose() * (art.a_matrix * dataset[i].y));
    }
    const double n = static_cast<double>(dataset.n());
    v /= n;
    b /= n;
    DeltaFit fit;
    fit.delta = solve_checked(v, b, ErrorKind::CollinearTimeShift, "weighted time-shift Gram E_N[w (X*W)'X*W]");
    fit.weights = w;
    fit.v_hat = v;
    return fit;
}

Matrix adjusted_residuals(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                          const Vector& delta) {
    const auto p = dataset.regressors();
    Matrix r(static_cast<Eigen::Index>(dataset.n()), p);
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const auto& art = artifacts[i];
        r.row(static_cast<Eigen::Index>(i)) = (art.a_matrix * (dataset[i].y - art.w * delta)).transpose();
    }
    return r;
}

Matrix estimate_gamma(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                      const PolyStacks& stacks, const Vector& delta) {
    require_consistent(dataset, artifacts, stacks);
    const double n = static_cast<double>(dataset.n());
    const Matrix r = adjusted_residuals(dataset, artifacts, delta);
    const Matrix gram = stacks.d1l.transpose() * stacks.d1l / n;
    const Matrix cross = r.transpose() * stacks.d1l / n;  // p x L
    Matrix gamma_t;
    try {
        gamma_t = solve_checked(gram, cross.transpose(), ErrorKind::TooFewSlowMovers, "E_N[D_{1:L} D_{1:L}']");
    } catch (const Error& e) {
        throw Error(ErrorKind::TooFewSlowMovers, std::string(e.what()) + " (" + counts_text(stacks.counts) + ")");
    }
    return gamma_t.transpose();
}

Vector estimate_beta_mover(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                           const PolyStacks& stacks, const Vector& delta) {
    require_consistent(dataset, artifacts, stacks);
    if (stacks.counts.movers == 0) {
        throw Error(ErrorKind::NoMovers, "no observation has |D| > h = " + std::to_string(stacks.bandwidth));
    }
    Vector sum = Vector::Zero(dataset.regressors());
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        if (stacks.local[i]) continue;
        const auto& art = artifacts[i];
        sum += art.a_matrix * (dataset[i].y - art.w * delta) / art.d;
    }
    return sum / static_cast<double>(stacks.counts.movers);
}

Vector estimate_beta_unified(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                             const PolyStacks& stacks, const Vector& delta, const Matrix& gamma) {
    require_consistent(dataset, artifacts, stacks);
    Vector mover_term = Vector::Zero(dataset.regressors());
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        if (stacks.local[i]) continue;
        const auto& art = artifacts[i];
        mover_term += art.a_matrix * (dataset[i].y - art.w * delta) / art.d;
    }
    mover_term /= static_cast<double>(dataset.n());
    return mover_term + gamma * stacks.h_hat;
}

Vector estimate_beta_unified_decomposed(const PanelDataset& dataset,
                                        const std::vector<DesignArtifacts>& artifacts,
                                        const PolyStacks& stacks, const Vector& delta,
                                        const Matrix& gamma) {
    require_consistent(dataset, artifacts, stacks);
    const double n = static_cast<double>(dataset.n());
    Vector out = Vector::Zero(dataset.regressors());
    if (stacks.counts.movers > 0) {
        const double mover_share = static_cast<double>(stacks.counts.movers) / n;
        out += mover_share * estimate_beta_mover(dataset, artifacts, stacks, delta);
    }
    for (int l = 1; l <= stacks.poly_order; ++l) {
        double moment = 0.0;
        for (std::size_t i = 0; i < dataset.n(); ++i) {
            if (!stacks.local[i]) continue;
            double power = 1.0;
            for (int k = 1; k < l; ++k) power *= stacks.d(static_cast<Eigen::Index>(i));
            moment += power;
        }
        out += gamma.col(l - 1) * (moment / n);
    }
    return out;
}

Matrix selector_matrix(int target_period, int periods, int regressors) {
    if (target_period < 1 || target_period > periods) {
        throw Error(ErrorKind::InvalidPeriod, "target period " + std::to_string(target_period) + " outside [1, " +
                                                  std::to_string(periods) + "]");
    }
    Matrix r = Matrix::Zero(regressors, regressors * (periods - 1));
    if (target_period >= 2) {
        r.block(0, (target_period - 2) * regressors, regressors, regressors) =
            Matrix::Identity(regressors, regressors);
    }
    return r;
}

CoreFit fit_core(const PanelDataset& dataset, const EstimatorConfig& config) {
    if (dataset.mode() != PanelMode::SquareTP) {
        throw Error(ErrorKind::UnsupportedShape, "the T = p estimator needs a square panel");
    }
    config.validate(dataset.periods());

    CoreFit fit;
    auto stage = [](const char* name, auto&& body) {
        try {
            return body();
        } catch (const Error& e) {
            throw e.with_stage(name);
        }
    };

    fit.artifacts = stage("artifacts", [&] { return design_artifacts(dataset); });
    const std::vector<double> d = determinants(fit.artifacts);
    const double h = stage("bandwidth", [&] {
        return config.bandwidth.is_plugin ? plugin_bandwidth(d, config.poly_order) : config.bandwidth.value;
    });
    fit.stacks = stage("stacks", [&] { return stack_poly(d, h, config.poly_order); });
    fit.delta_fit = stage("delta", [&] { return estimate_delta(dataset, fit.artifacts, fit.stacks); });
    const Vector& delta = fit.delta_fit.delta;

    auto& est = fit.estimates;
    est.delta_hat = delta;
    est.bandwidth_used = h;
    est.counts = fit.stacks.counts;
    est.gamma_hat = stage("gamma", [&] { return estimate_gamma(dataset, fit.artifacts, fit.stacks, delta); });
    if (fit.stacks.counts.movers > 0) {
        est.beta_mover = stage("beta_mover", [&] {
            return estimate_beta_mover(dataset, fit.artifacts, fit.stacks, delta);
        });
    } else {
        est.warnings.push_back("no movers (|D| > h); mover estimator undefined, unified estimator uses a zero "
                               "mover term");
    }
    est.beta_unified = stage("beta_unified", [&] {
        return estimate_beta_unified(dataset, fit.artifacts, fit.stacks, delta, est.gamma_hat);
    });
    fit.selector = selector_matrix(config.target_period, dataset.periods(), dataset.regressors());
    est.theta_hat = est.beta_unified + fit.selector * delta;
    if (!est.theta_hat.allFinite() || !est.gamma_hat.allFinite()) {
        throw Error(ErrorKind::Propagation, "non-finite estimates");
    }
    return fit;
}

CoreEstimates estimate_all(const PanelDataset& dataset, const EstimatorConfig& config) {
    return fit_core(dataset, config).estimates;
}

}  // namespace crcpanel
