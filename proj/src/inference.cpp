#include "crcpanel/inference.hpp"

#include <cmath>
#include <string>

#include "crcpanel/error.hpp"
#include "crcpanel/linalg.hpp"
#include "crcpanel/normal.hpp"

namespace crcpanel {

UnifiedInfluenceParts unified_influence_parts(const PanelDataset& dataset,
                                              const std::vector<DesignArtifacts>& artifacts,
                                              const PolyStacks& stacks, const Vector& delta,
                                              const Matrix& gamma, const Matrix& selector) {
    const auto n = static_cast<Eigen::Index>(dataset.n());
    const double nd = static_cast<double>(n);
    const auto p = dataset.regressors();
    const Matrix r = adjusted_residuals(dataset, artifacts, delta);

    const Matrix g1 = stacks.d1l.transpose() * stacks.d1l / nd;
    const Vector g1_inv_h =
        solve_checked(g1, stacks.h_hat, ErrorKind::TooFewSlowMovers, "E_N[D_{1:L} D_{1:L}']");
    const Vector local_weight = stacks.d1l * g1_inv_h;  // D_{1:L,i}' G1^-1 h_hat

    UnifiedInfluenceParts parts;
    parts.mover_block = Matrix::Zero(n, p);
    parts.local_block = Matrix::Zero(n, p);
    Matrix weighted_aw = Matrix::Zero(p, selector.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& art = artifacts[static_cast<std::size_t>(i)];
        double weight = local_weight(i);
        if (!stacks.local[static_cast<std::size_t>(i)]) {
            parts.mover_block.row(i) = r.row(i) / art.d;
            weight += 1.0 / art.d;
        } else {
            parts.local_block.row(i) =
                (r.row(i).transpose() - gamma * stacks.d1l.row(i).transpose()).transpose() * local_weight(i);
        }
        if (weight != 0.0) weighted_aw.noalias() += weight * (art.a_matrix * art.w);
    }
    const Eigen::RowVectorXd mover_mean = parts.mover_block.colwise().sum() / nd;
    parts.mover_block.rowwise() -= mover_mean;
    parts.q_hat = selector - weighted_aw / nd;
    return parts;
}

Matrix local_delta_scores(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                          const Vector& weights, const Vector& delta) {
    const auto n = static_cast<Eigen::Index>(dataset.n());
    const auto q = delta.size();
    Matrix scores = Matrix::Zero(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double wi = weights(i);
        if (wi == 0.0) continue;
        const auto& art = artifacts[static_cast<std::size_t>(i)];
        const Matrix z = art.a_matrix * art.w;
        const Vector resid = art.a_matrix * (dataset[static_cast<std::size_t>(i)].y - art.w * delta);
        scores.row(i) = wi * (z.transpose() * resid).transpose();
    }
    return scores;
}

Matrix propagate_delta_scores(const Matrix& q, const Matrix& v, const Matrix& scores) {
    // K = Q V^-1, obtained from V' K' = Q'.
    const Matrix k_t = solve_checked(v.transpose(), q.transpose(), ErrorKind::CollinearTimeShift, "V-hat");
    return scores * k_t;
}

InfluenceSet influence_contributions(const PanelDataset& dataset, const CoreFit& fit) {
    const auto& est = fit.estimates;
    UnifiedInfluenceParts parts = unified_influence_parts(dataset, fit.artifacts, fit.stacks, est.delta_hat,
                                                          est.gamma_hat, fit.selector);
    const Matrix scores = local_delta_scores(dataset, fit.artifacts, fit.delta_fit.weights, est.delta_hat);
    InfluenceSet out;
    out.zeta = parts.mover_block + parts.local_block +
               propagate_delta_scores(parts.q_hat, fit.delta_fit.v_hat, scores);
    out.mover_block = std::move(parts.mover_block);
    out.v_hat = fit.delta_fit.v_hat;
    out.q_hat = std::move(parts.q_hat);
    return out;
}

Matrix mover_influence(const PanelDataset& dataset, const CoreFit& fit) {
    const auto& est = fit.estimates;
    if (!est.beta_mover) throw Error(ErrorKind::NoMovers, "mover estimator undefined without movers");
    const auto n = static_cast<Eigen::Index>(dataset.n());
    const double nd = static_cast<double>(n);
    const double share = static_cast<double>(fit.stacks.counts.movers) / nd;
    const auto p = dataset.regressors();
    const Matrix r = adjusted_residuals(dataset, fit.artifacts, est.delta_hat);

    Matrix zeta = Matrix::Zero(n, p);
    Matrix mover_aw = Matrix::Zero(p, fit.selector.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (fit.stacks.local[static_cast<std::size_t>(i)]) continue;
        const auto& art = fit.artifacts[static_cast<std::size_t>(i)];
        zeta.row(i) = (r.row(i).transpose() / art.d - *est.beta_mover).transpose() / share;
        mover_aw.noalias() += (art.a_matrix * art.w) / art.d;
    }
    const Matrix q = fit.selector - mover_aw / nd / share;
    const Matrix scores = local_delta_scores(dataset, fit.artifacts, fit.delta_fit.weights, est.delta_hat);
    return zeta + propagate_delta_scores(q, fit.delta_fit.v_hat, scores);
}

InferenceReport covariance_and_se(const Matrix& zeta) {
    const auto n = zeta.rows();
    if (n < 2) throw Error(ErrorKind::Validation, "inference needs N >= 2");
    if (!zeta.allFinite()) throw Error(ErrorKind::Propagation, "influence function has non-finite entries");
    const double nd = static_cast<double>(n);
    InferenceReport rep;
    rep.covariance = zeta.transpose() * zeta / nd / nd;
    rep.covariance = 0.5 * (rep.covariance + rep.covariance.transpose());
    rep.std_errors = rep.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    return rep;
}

IntervalSet confidence_intervals(const Vector& theta, const Vector& std_errors, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorKind::Validation, "confidence level must lie in (0, 1), got " + std::to_string(level));
    }
    if (theta.size() != std_errors.size()) throw Error(ErrorKind::Dimension, "theta/SE length mismatch");
    const double z = normal_quantile(0.5 * (1.0 + level));
    IntervalSet out;
    out.level = level;
    out.lower = theta - z * std_errors;
    out.upper = theta + z * std_errors;
    return out;
}

InferenceReport infer(const Vector& theta, const Matrix& zeta, std::span<const double> levels) {
    InferenceReport rep = covariance_and_se(zeta);
    for (double level : levels) rep.intervals.push_back(confidence_intervals(theta, rep.std_errors, level));
    return rep;
}

}  // namespace crcpanel
