#include <random>

#include "doctest.h"

#include "crcpanel/error.hpp"
#include "crcpanel/inference.hpp"
#include "crcpanel/simulation.hpp"
#include "desk_data.hpp"
#include "oracles.hpp"

using namespace crcpanel;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Validation;
}

EstimatorConfig fixed(double h, int L, int period = 1) {
    EstimatorConfig c;
    c.bandwidth = Bandwidth::fixed(h);
    c.poly_order = L;
    c.target_period = period;
    return c;
}

desk::Shape square_shape(int p, std::size_t n) {
    desk::Shape s;
    s.periods = p;
    s.regressors = p;
    s.n = n;
    return s;
}

}  // namespace

TEST_CASE("covariance from influence rows") {
    const InferenceReport zero = covariance_and_se(Matrix::Zero(5, 2));
    CHECK(zero.covariance.isZero());
    CHECK(zero.std_errors.isZero());

    Matrix z(2, 2);
    z << 1, 0, -1, 0;
    const InferenceReport r = covariance_and_se(z);
    CHECK(r.covariance(0, 0) == 0.5);
    CHECK(r.covariance(0, 1) == 0.0);
    CHECK(r.covariance(1, 1) == 0.0);
    CHECK(r.std_errors(0) == doctest::Approx(std::sqrt(0.5)));

    CHECK(kind_of([] { covariance_and_se(Matrix::Zero(1, 2)); }) == ErrorKind::Validation);
    Matrix bad = Matrix::Zero(3, 2);
    bad(1, 1) = std::nan("");
    CHECK(kind_of([&] { covariance_and_se(bad); }) == ErrorKind::Propagation);
}

TEST_CASE("normal intervals") {
    const IntervalSet a = confidence_intervals(Vector::Zero(1), Vector::Ones(1), 0.95);
    CHECK(a.lower(0) == doctest::Approx(-1.959964).epsilon(1e-6));
    CHECK(a.upper(0) == doctest::Approx(1.959964).epsilon(1e-6));

    const IntervalSet b = confidence_intervals(Vector::Constant(1, 0.3), Vector::Zero(1), 0.9);
    CHECK(b.lower(0) == 0.3);
    CHECK(b.upper(0) == 0.3);

    const IntervalSet c = confidence_intervals(Vector::Constant(1, 0.075), Vector::Constant(1, 0.006), 0.9);
    CHECK(c.lower(0) == doctest::Approx(0.075 - 1.6448536269514722 * 0.006).epsilon(1e-12));
    CHECK(c.upper(0) == doctest::Approx(0.075 + 1.6448536269514722 * 0.006).epsilon(1e-12));

    CHECK(kind_of([] { confidence_intervals(Vector::Zero(1), Vector::Ones(1), 1.0); }) == ErrorKind::Validation);
    CHECK(kind_of([] { confidence_intervals(Vector::Zero(1), Vector::Ones(1), 0.0); }) == ErrorKind::Validation);
}

TEST_CASE("influence function equals the term-by-term oracle on DS1") {
    const PanelDataset ds = desk::ds1();
    for (int L = 1; L <= 3; ++L) {
        for (int period = 1; period <= 2; ++period) {
            const CoreFit fit = fit_core(ds, fixed(desk::kDs1Bandwidth, L, period));
            const InfluenceSet infl = influence_contributions(ds, fit);
            const Matrix expect = oracle::zeta(ds, fit.estimates.delta_hat, fit.estimates.gamma_hat,
                                               desk::kDs1Bandwidth, L, period);
            CHECK(desk::max_abs(infl.zeta - expect) <= 1e-10);

            const Matrix mover = mover_influence(ds, fit);
            const Matrix mover_expect =
                oracle::zeta_mover(ds, fit.estimates.delta_hat, desk::kDs1Bandwidth, L, period);
            CHECK(desk::max_abs(mover - mover_expect) <= 1e-10);
        }
    }
}

TEST_CASE("zero residuals give a degenerate report") {
    std::mt19937_64 rng(31);
    for (int p = 2; p <= 3; ++p) {
        const auto xs = desk::random_designs(rng, square_shape(p, 50));
        const PanelDataset ds = desk::homogeneous(xs, Vector::Zero(p), Vector::Constant(p * (p - 1), 0.3));
        for (int period = 1; period <= p; ++period) {
            const CoreFit fit = fit_core(ds, fixed(0.3, 2, period));
            const InfluenceSet infl = influence_contributions(ds, fit);
            CHECK(desk::max_abs(infl.zeta) <= 1e-12);
            CHECK(desk::max_abs(mover_influence(ds, fit)) <= 1e-12);
            const std::vector<double> levels{0.9, 0.95};
            const InferenceReport rep = infer(fit.estimates.theta_hat, infl.zeta, levels);
            CHECK(desk::max_abs(rep.covariance) <= 1e-24);
            CHECK(desk::max_abs(rep.intervals[1].upper - rep.intervals[1].lower) <= 1e-11);
        }
    }
}

TEST_CASE("block one is centered and the whole influence function has mean zero") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 2 + trial % 2;
        const int L = 1 + trial % 3;
        const PanelDataset ds = desk::random_panel(rng, square_shape(p, 40 + trial % 30));
        const CoreFit fit = fit_core(ds, fixed(0.3, L, 1 + trial % p));
        const InfluenceSet infl = influence_contributions(ds, fit);
        const double scale = 1.0 + desk::max_abs(infl.zeta);
        CHECK(desk::max_abs(infl.mover_block.colwise().mean()) <= 1e-10 * scale);
        // The normal equations behind gamma-hat and delta-hat make the other
        // two blocks mean-zero in sample as well.
        CHECK(desk::max_abs(infl.zeta.colwise().mean()) <= 1e-10 * scale);
    }
}

TEST_CASE("report invariants on simulated data") {
    SimulationConfig cfg;
    cfg.n = 800;
    cfg.seed = 3;
    const std::vector<double> levels{0.9, 0.95, 0.99};
    for (std::uint64_t rep_index = 0; rep_index < 5; ++rep_index) {
        const PanelDataset ds = generate_panel(cfg, rep_index);
        const CoreFit fit = fit_core(ds, EstimatorConfig{});
        const InfluenceSet infl = influence_contributions(ds, fit);
        const InferenceReport rep = infer(fit.estimates.theta_hat, infl.zeta, levels);
        CHECK((rep.std_errors.array() > 0.0).all());
        CHECK(rep.covariance == rep.covariance.transpose());
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(rep.covariance);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * rep.covariance.trace());
        for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
            CHECK((rep.intervals[k + 1].lower.array() <= rep.intervals[k].lower.array()).all());
            CHECK((rep.intervals[k + 1].upper.array() >= rep.intervals[k].upper.array()).all());
        }
        const Vector mid = (rep.intervals[1].lower + rep.intervals[1].upper) / 2.0;
        CHECK(desk::max_abs(mid - fit.estimates.theta_hat) <= 1e-15);

        // Scaling Y scales zeta and the SEs, and keeps hit/miss unchanged.
        const double c = 3.0;
        const PanelDataset scaled = ds.scaled_outcomes(c);
        const CoreFit sfit = fit_core(scaled, EstimatorConfig{});
        const InfluenceSet sinfl = influence_contributions(scaled, sfit);
        CHECK(desk::max_abs(sinfl.zeta - c * infl.zeta) <= 1e-9 * (1.0 + desk::max_abs(infl.zeta)));
        const InferenceReport srep = infer(sfit.estimates.theta_hat, sinfl.zeta, levels);
        CHECK(desk::max_abs(srep.std_errors - c * rep.std_errors) <= 1e-10);
        const Vector truth = true_parameters(cfg).beta;
        for (int k = 0; k < 2; ++k) {
            const bool hit = std::abs(fit.estimates.theta_hat(k) - truth(k)) <= 1.959964 * rep.std_errors(k);
            const bool shit =
                std::abs(sfit.estimates.theta_hat(k) - c * truth(k)) <= 1.959964 * srep.std_errors(k);
            CHECK(hit == shit);
        }
    }
}
