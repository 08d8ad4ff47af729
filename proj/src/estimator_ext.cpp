#include "crcpanel/estimator_ext.hpp"

#include <string>

#include "crcpanel/error.hpp"
#include "crcpanel/linalg.hpp"

namespace crcpanel {

PooledDeltaFit estimate_delta_pooled(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                                     double h) {
    if (dataset.mode() != PanelMode::TallTP) {
        throw Error(ErrorKind::UnsupportedShape, "pooled delta needs T > p");
    }
    if (artifacts.size() != dataset.n()) throw Error(ErrorKind::Dimension, "artifacts do not match dataset");
    const auto q = artifacts.front().w.cols();
    Matrix v = Matrix::Zero(q, q);
    Vector b = Vector::Zero(q);
    std::size_t movers = 0;
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const auto& art = artifacts[i];
        if (!(art.d > h)) continue;
        if (!art.m_x) {
            throw Error(ErrorKind::SingularDesign,
                        "observation " + std::to_string(i) + ": X'X is ill-conditioned although D > h");
        }
        const Matrix mw = *art.m_x * art.w;
        v.noalias() += art.w.transpose() * mw;
        b.noalias() += mw.transpose() * dataset[i].y;
        ++movers;
    }
    if (movers == 0) {
        throw Error(ErrorKind::InsufficientMoverVariation, "no observation has D > h = " + std::to_string(h));
    }
    const double n = static_cast<double>(dataset.n());
    v /= n;
    b /= n;
    PooledDeltaFit fit;
    fit.delta = solve_checked(v, b, ErrorKind::InsufficientMoverVariation,
                              "pooled mover Gram E_N[1{D>h} W'M_X W] (" + std::to_string(movers) + " movers)");
    fit.v_hat = v;
    return fit;
}

ExtBeta estimate_beta_unified_ext(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                                  const PolyStacks& stacks, const Vector& delta) {
    ExtBeta out;
    out.gamma = estimate_gamma(dataset, artifacts, stacks, delta);
    out.beta_unified = estimate_beta_unified(dataset, artifacts, stacks, delta, out.gamma);
    return out;
}

InfluenceSet influence_ext(const PanelDataset& dataset, const std::vector<DesignArtifacts>& artifacts,
                           const PolyStacks& stacks, const PooledDeltaFit& delta_fit, const Matrix& gamma,
                           const Matrix& selector) {
    UnifiedInfluenceParts parts =
        unified_influence_parts(dataset, artifacts, stacks, delta_fit.delta, gamma, selector);

    const auto n = static_cast<Eigen::Index>(dataset.n());
    Matrix scores = Matrix::Zero(n, delta_fit.delta.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& art = artifacts[static_cast<std::size_t>(i)];
        if (!(art.d > stacks.bandwidth)) continue;
        const Vector resid = dataset[static_cast<std::size_t>(i)].y - art.w * delta_fit.delta;
        scores.row(i) = (art.w.transpose() * (*art.m_x * resid)).transpose();
    }

    InfluenceSet out;
    out.zeta = parts.mover_block + parts.local_block + propagate_delta_scores(parts.q_hat, delta_fit.v_hat, scores);
    out.mover_block = std::move(parts.mover_block);
    out.v_hat = delta_fit.v_hat;
    out.q_hat = std::move(parts.q_hat);
    return out;
}

ExtFit fit_ext(const PanelDataset& dataset, const EstimatorConfig& config) {
    if (dataset.mode() != PanelMode::TallTP) {
        throw Error(ErrorKind::UnsupportedShape, "the T > p estimator needs a tall panel");
    }
    config.validate(dataset.periods());

    auto stage = [](const char* name, auto&& body) {
        try {
            return body();
        } catch (const Error& e) {
            throw e.with_stage(name);
        }
    };

    ExtFit fit;
    fit.artifacts = stage("artifacts", [&] { return design_artifacts(dataset); });
    const std::vector<double> d = determinants(fit.artifacts);
    const double h = stage("bandwidth", [&] {
        return config.bandwidth.is_plugin ? plugin_bandwidth(d, config.poly_order) : config.bandwidth.value;
    });
    fit.stacks = stage("stacks", [&] { return stack_poly(d, h, config.poly_order); });
    const PooledDeltaFit delta_fit = stage("delta", [&] { return estimate_delta_pooled(dataset, fit.artifacts, h); });

    auto& est = fit.estimates;
    est.delta_hat = delta_fit.delta;
    est.bandwidth_used = h;
    est.counts = fit.stacks.counts;
    const ExtBeta beta =
        stage("beta_unified", [&] { return estimate_beta_unified_ext(dataset, fit.artifacts, fit.stacks, est.delta_hat); });
    est.gamma_hat = beta.gamma;
    est.beta_unified = beta.beta_unified;
    if (fit.stacks.counts.movers > 0) {
        est.beta_mover = estimate_beta_mover(dataset, fit.artifacts, fit.stacks, est.delta_hat);
    }
    fit.selector = selector_matrix(config.target_period, dataset.periods(), dataset.regressors());
    est.theta_hat = est.beta_unified + fit.selector * est.delta_hat;

    const InfluenceSet infl = stage("influence", [&] {
        return influence_ext(dataset, fit.artifacts, fit.stacks, delta_fit, est.gamma_hat, fit.selector);
    });
    est.v_hat = infl.v_hat;
    est.q_hat = infl.q_hat;
    est.zeta = infl.zeta;
    if (!est.theta_hat.allFinite() || !est.zeta.allFinite()) {
        throw Error(ErrorKind::Propagation, "non-finite estimates");
    }
    return fit;
}

}  // namespace crcpanel
