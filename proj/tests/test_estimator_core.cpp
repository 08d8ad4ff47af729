#include <algorithm>
#include <random>

#include "doctest.h"

#include "crcpanel/error.hpp"
#include "crcpanel/estimator_core.hpp"
#include "crcpanel/simulation.hpp"
#include "desk_data.hpp"
#include "oracles.hpp"

using namespace crcpanel;

namespace {

template <typename F>
Error error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected an Error");
    return Error(ErrorKind::Validation, "");
}

struct Pipeline {
    std::vector<DesignArtifacts> arts;
    PolyStacks stacks;
    DeltaFit delta;
    Matrix gamma;
};

Pipeline run(const PanelDataset& ds, double h, int L) {
    Pipeline p;
    p.arts = design_artifacts(ds);
    const auto d = determinants(p.arts);
    p.stacks = stack_poly(d, h, L);
    p.delta = estimate_delta(ds, p.arts, p.stacks);
    p.gamma = estimate_gamma(ds, p.arts, p.stacks, p.delta.delta);
    return p;
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

TEST_CASE("plug-in bandwidth arithmetic") {
    CHECK(plugin_bandwidth_from_spread(0.5, 0.67, 32, 2) == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(error_of([] { plugin_bandwidth_from_spread(1.0, 13.4, 1, 2); }).kind() == ErrorKind::Validation);
    const std::vector<double> same(10, 0.3);
    CHECK(error_of([&] { plugin_bandwidth(same, 2); }).kind() == ErrorKind::DegenerateSample);
}

TEST_CASE("plug-in bandwidth matches a sort-based oracle on a simulated sample") {
    SimulationConfig cfg;
    cfg.seed = 1;
    const PanelDataset ds = generate_panel(cfg, 0);
    const auto d = determinants(design_artifacts(ds));
    for (int L = 1; L <= 3; ++L) {
        CHECK(plugin_bandwidth(d, L) == doctest::Approx(oracle::plugin(d, L)).epsilon(1e-13));
    }
    const std::vector<double> small{4.0, 1.0, 3.0, 2.0};
    CHECK(oracle::type7(small, 0.25) == 1.75);
    std::vector<double> sorted = small;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted_quantile(sorted, 0.25) == 1.75);
    CHECK(sorted_quantile(sorted, 0.75) == 3.25);
}

TEST_CASE("polynomial stacks") {
    const std::vector<double> d{0.0, 0.1, 2.0};
    const PolyStacks s = stack_poly(d, 0.5, 2);
    CHECK(s.counts.stayers == 1);
    CHECK(s.counts.slow_movers == 1);
    CHECK(s.counts.movers == 1);
    CHECK(s.h_hat(0) == doctest::Approx(2.0 / 3.0));
    CHECK(s.h_hat(1) == doctest::Approx(0.1 / 3.0));
    CHECK(s.d0l.row(2).isZero());
    CHECK(s.d1l.row(0).isZero());

    const std::vector<double> edge{0.3};
    const PolyStacks b = stack_poly(edge, 0.3, 1);
    CHECK(b.counts.slow_movers == 1);
    CHECK(b.local[0]);

    const std::vector<double> neg{-0.2};
    const PolyStacks n = stack_poly(neg, 0.5, 3);
    CHECK(n.d0l(0, 0) == 1.0);
    CHECK(n.d0l(0, 1) == -0.2);
    CHECK(n.d0l(0, 2) == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(n.d0l(0, 3) == doctest::Approx(-0.008).epsilon(1e-15));
    CHECK(n.d1l.cols() == 3);

    std::mt19937_64 rng(21);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(30);
        for (auto& x : v) x = trial % 2 ? z(rng) : std::round(z(rng) * 3.0) / 3.0;
        const PolyStacks st = stack_poly(v, 0.4, 1 + trial % 3);
        CHECK(st.counts.total() == v.size());
    }
}

TEST_CASE("delta recovers pure time effects exactly") {
    std::mt19937_64 rng(22);
    for (int p = 2; p <= 3; ++p) {
        const auto xs = desk::random_designs(rng, square_shape(p, 60));
        const Vector delta0 = Vector::Constant(p * (p - 1), 0.3);
        const PanelDataset ds = desk::homogeneous(xs, Vector::Zero(p), delta0);
        for (int L = 1; L <= 3; ++L) {
            const Pipeline pl = run(ds, 0.3, L);
            CHECK(desk::max_abs(pl.delta.delta - delta0) <= 1e-10);
        }
    }
}

TEST_CASE("delta equals the per-entry local polynomial oracle on DS1") {
    const PanelDataset ds = desk::ds1();
    for (int L = 1; L <= 3; ++L) {
        const Pipeline pl = run(ds, desk::kDs1Bandwidth, L);
        CHECK(desk::max_abs(pl.delta.delta - oracle::delta_square(ds, desk::kDs1Bandwidth, L)) <= 1e-10);
    }
}

TEST_CASE("gamma, beta^M and beta_L agree with loop oracles on DS1") {
    const PanelDataset ds = desk::ds1();
    const double h = desk::kDs1Bandwidth;
    for (int L = 1; L <= 3; ++L) {
        const Pipeline pl = run(ds, h, L);
        const Vector& delta = pl.delta.delta;
        CHECK(desk::max_abs(pl.gamma - oracle::gamma(ds, delta, h, L)) <= 1e-10);
        const Vector bm = estimate_beta_mover(ds, pl.arts, pl.stacks, delta);
        CHECK(desk::max_abs(bm - oracle::beta_mover(ds, delta, h)) <= 1e-12);
        const Vector bl = estimate_beta_unified(ds, pl.arts, pl.stacks, delta, pl.gamma);
        CHECK(desk::max_abs(bl - oracle::beta_unified(ds, delta, pl.gamma, h, L)) <= 1e-10);
        const Vector alt = estimate_beta_unified_decomposed(ds, pl.arts, pl.stacks, delta, pl.gamma);
        CHECK(desk::max_abs(bl - alt) <= 1e-10);
    }
}

TEST_CASE("homogeneous coefficients: gamma, beta^M and beta_L are exact given true delta") {
    std::mt19937_64 rng(23);
    for (int p = 2; p <= 3; ++p) {
        const auto xs = desk::random_designs(rng, square_shape(p, 60));
        Vector b(p);
        for (int k = 0; k < p; ++k) b(k) = 1.0 + k;
        const Vector delta0 = Vector::LinSpaced(p * (p - 1), -0.4, 0.5);
        const PanelDataset ds = desk::homogeneous(xs, b, delta0);
        const auto arts = design_artifacts(ds);
        const auto d = determinants(arts);
        for (int L = 1; L <= 3; ++L) {
            for (double h : {0.15, 0.3, 0.6}) {
                const PolyStacks st = stack_poly(d, h, L);
                const Matrix g = estimate_gamma(ds, arts, st, delta0);
                Matrix expect = Matrix::Zero(p, L);
                expect.col(0) = b;
                CHECK(desk::max_abs(g - expect) <= 1e-10);
                CHECK(desk::max_abs(estimate_beta_mover(ds, arts, st, delta0) - b) <= 1e-10);
                CHECK(desk::max_abs(estimate_beta_unified(ds, arts, st, delta0, g) - b) <= 1e-10);
            }
        }
    }
}

TEST_CASE("one mover mean") {
    // Mover X = [[1, 0], [1, 2]] so D = 2 and X* Y = (4, 6) for Y = (2, 8).
    std::vector<PanelObservation> obs{desk::square2(0.0, 2.0, 2.0, 8.0), desk::square2(0.3, 0.1, 0.5, 0.2),
                                      desk::square2(-0.4, -0.15, 0.1, 0.9), desk::square2(1.0, 0.05, 0.3, 0.3)};
    const PanelDataset ds = PanelDataset::from_observations(std::move(obs));
    const auto arts = design_artifacts(ds);
    const PolyStacks st = stack_poly(determinants(arts), 0.5, 1);
    const Vector bm = estimate_beta_mover(ds, arts, st, Vector::Zero(2));
    CHECK(bm(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(bm(1) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("L = 1 reduces to the mixture estimator") {
    const PanelDataset ds = desk::ds1();
    const double h = desk::kDs1Bandwidth;
    const Pipeline pl = run(ds, h, 1);
    const Vector bm = estimate_beta_mover(ds, pl.arts, pl.stacks, pl.delta.delta);
    const double n = static_cast<double>(ds.n());
    const double mover_share = pl.stacks.counts.movers / n;
    const double local_share = (pl.stacks.counts.slow_movers + pl.stacks.counts.stayers) / n;
    const Vector mixture = mover_share * bm + local_share * pl.gamma.col(0);
    CHECK(desk::max_abs(estimate_beta_unified(ds, pl.arts, pl.stacks, pl.delta.delta, pl.gamma) - mixture) <= 1e-10);
}

TEST_CASE("randomized path identities") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 60; ++trial) {
        const int p = 2 + trial % 2;
        const int L = 1 + trial % 3;
        const PanelDataset ds = desk::random_panel(rng, square_shape(p, 50 + trial));
        const Pipeline pl = run(ds, 0.3, L);
        CHECK(desk::max_abs(pl.delta.delta - oracle::delta_square(ds, 0.3, L)) <= 1e-10);
        const Vector bl = estimate_beta_unified(ds, pl.arts, pl.stacks, pl.delta.delta, pl.gamma);
        const Vector alt = estimate_beta_unified_decomposed(ds, pl.arts, pl.stacks, pl.delta.delta, pl.gamma);
        CHECK(desk::max_abs(bl - alt) <= 1e-10);
    }
}

TEST_CASE("too few slow movers and other degenerate designs") {
    // All local units are stayers: D_{1:L} is identically zero.
    std::vector<PanelObservation> obs{desk::square2(0.1, 0.0, 1, 2), desk::square2(0.5, 0.0, 0, 1),
                                      desk::square2(-0.3, 0.0, 2, 2), desk::square2(0.2, 1.5, 1, 0),
                                      desk::square2(0.9, -2.0, 0, 3)};
    const PanelDataset stayers = PanelDataset::from_observations(obs);
    const auto arts = design_artifacts(stayers);
    const PolyStacks st = stack_poly(determinants(arts), 0.5, 1);
    CHECK(error_of([&] { estimate_delta(stayers, arts, st); }).kind() == ErrorKind::TooFewSlowMovers);
    CHECK(error_of([&] { estimate_gamma(stayers, arts, st, Vector::Zero(2)); }).kind() ==
          ErrorKind::TooFewSlowMovers);

    // No unit inside the window at all.
    std::vector<PanelObservation> movers{desk::square2(0.1, 1.0, 1, 2), desk::square2(0.5, -1.2, 0, 1),
                                         desk::square2(-0.3, 2.0, 2, 2), desk::square2(0.2, 1.5, 1, 0)};
    const PanelDataset all_movers = PanelDataset::from_observations(movers);
    const Error e = error_of([&] { estimate_all(all_movers, fixed(0.5, 2)); });
    CHECK(e.kind() == ErrorKind::TooFewSlowMovers);
    CHECK(std::string(e.what()).find("delta") != std::string::npos);

    const auto marts = design_artifacts(all_movers);
    const PolyStacks wide = stack_poly(determinants(marts), 10.0, 1);
    CHECK(error_of([&] { estimate_beta_mover(all_movers, marts, wide, Vector::Zero(2)); }).kind() ==
          ErrorKind::NoMovers);
}

TEST_CASE("no movers: unified estimate with a warning") {
    const PanelDataset ds = desk::ds1();
    const CoreEstimates est = estimate_all(ds, fixed(5.0, 2));
    CHECK_FALSE(est.beta_mover.has_value());
    CHECK(est.counts.movers == 0);
    CHECK_FALSE(est.warnings.empty());
    CHECK(est.beta_unified.allFinite());
}

TEST_CASE("selector matrix") {
    CHECK(selector_matrix(1, 2, 2) == Matrix::Zero(2, 2));
    CHECK(selector_matrix(2, 2, 2) == Matrix::Identity(2, 2));
    Matrix r(1, 2);
    r << 0, 1;
    CHECK(selector_matrix(3, 3, 1) == r);
    CHECK(error_of([] { selector_matrix(5, 2, 2); }).kind() == ErrorKind::InvalidPeriod);
    CHECK(error_of([] { selector_matrix(0, 2, 2); }).kind() == ErrorKind::InvalidPeriod);
}

TEST_CASE("estimate_all pipeline properties") {
    std::mt19937_64 rng(25);
    const auto xs = desk::random_designs(rng, square_shape(2, 80));
    const Vector delta0 = Vector::Constant(2, 0.3);
    const PanelDataset pure = desk::homogeneous(xs, Vector::Zero(2), delta0);
    const CoreEstimates e = estimate_all(pure, fixed(0.3, 2, 2));
    CHECK(desk::max_abs(e.theta_hat - delta0) <= 1e-10);

    const PanelDataset ds = desk::heterogeneous(rng, xs, delta0, 0.2);
    for (int period = 1; period <= 2; ++period) {
        EstimatorConfig cfg;
        cfg.target_period = period;
        const CoreEstimates a = estimate_all(ds, cfg);
        CHECK(a.theta_hat == a.beta_unified + selector_matrix(period, 2, 2) * a.delta_hat);
        CHECK(a.bandwidth_used == doctest::Approx(oracle::plugin(determinants(design_artifacts(ds)), 2)));

        const double c = -2.5;
        const CoreEstimates s = estimate_all(ds.scaled_outcomes(c), cfg);
        CHECK(s.bandwidth_used == a.bandwidth_used);
        CHECK(desk::max_abs(s.delta_hat - c * a.delta_hat) <= 1e-10);
        CHECK(desk::max_abs(s.gamma_hat - c * a.gamma_hat) <= 1e-9);
        CHECK(desk::max_abs(*s.beta_mover - c * *a.beta_mover) <= 1e-10);
        CHECK(desk::max_abs(s.theta_hat - c * a.theta_hat) <= 1e-10);

        std::vector<PanelObservation> shuffled = ds.observations();
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const CoreEstimates q = estimate_all(PanelDataset::from_observations(shuffled), cfg);
        CHECK(desk::max_abs(q.theta_hat - a.theta_hat) <= 1e-10);
        CHECK(desk::max_abs(q.gamma_hat - a.gamma_hat) <= 1e-9);
        CHECK(q.counts.movers == a.counts.movers);
    }

    CHECK(error_of([&] { estimate_all(ds, fixed(0.3, 2, 3)); }).kind() == ErrorKind::InvalidPeriod);
    CHECK(error_of([&] { estimate_all(ds, fixed(-1.0, 2)); }).kind() == ErrorKind::Validation);
    CHECK(error_of([&] { estimate_all(ds, fixed(0.3, 0)); }).kind() == ErrorKind::Validation);
    CHECK(error_of([&] { estimate_all(desk::ds2(), fixed(0.3, 2)); }).kind() == ErrorKind::UnsupportedShape);
    CHECK(error_of([] { PanelDataset::from_observations({}); }).kind() == ErrorKind::Validation);
}

TEST_CASE("simulated draw: counts follow the stayer mass") {
    SimulationConfig cfg;
    cfg.pi0 = 0.2;
    cfg.n = 2000;
    cfg.seed = 99;
    const PanelDataset ds = generate_panel(cfg, 3);
    const CoreEstimates e = estimate_all(ds, EstimatorConfig{});
    const auto d = determinants(design_artifacts(ds));
    const auto zeros = static_cast<std::size_t>(std::count(d.begin(), d.end(), 0.0));
    CHECK(e.counts.stayers == zeros);
    CHECK(std::abs(static_cast<double>(zeros) / 2000.0 - 0.2) < 4.0 * std::sqrt(0.2 * 0.8 / 2000.0));
    CHECK(e.theta_hat.allFinite());
    CHECK(e.counts.total() == 2000);
}
