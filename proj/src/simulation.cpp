#include "crcpanel/simulation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "crcpanel/error.hpp"
#include "crcpanel/inference.hpp"
#include "crcpanel/normal.hpp"
#include "crcpanel/random.hpp"

namespace crcpanel {
namespace {

constexpr std::size_t kKeptFailures = 5;

void check_probability_list(const std::vector<double>& levels) {
    for (double level : levels) {
        if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::Validation, "ci level outside (0, 1)");
    }
}

EstimatorDraw make_draw(const Vector& estimate, const Matrix& zeta, const Vector& truth,
                        const std::vector<double>& levels) {
    const InferenceReport rep = covariance_and_se(zeta);
    EstimatorDraw draw;
    draw.estimate = estimate;
    draw.std_error = rep.std_errors;
    for (double level : levels) {
        const double z = normal_quantile(0.5 * (1.0 + level));
        std::vector<bool> hit(static_cast<std::size_t>(estimate.size()));
        for (Eigen::Index k = 0; k < estimate.size(); ++k) {
            hit[static_cast<std::size_t>(k)] = std::abs(estimate(k) - truth(k)) <= z * rep.std_errors(k);
        }
        draw.hits.push_back(std::move(hit));
    }
    return draw;
}

std::vector<CoefficientSummary> summarize_estimator(const std::vector<const EstimatorDraw*>& draws,
                                                    const Vector& truth, std::size_t levels) {
    const auto p = truth.size();
    const double reps = static_cast<double>(draws.size());
    std::vector<CoefficientSummary> out(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) {
        auto& c = out[static_cast<std::size_t>(k)];
        c.true_value = truth(k);
        double sum = 0.0;
        for (const auto* d : draws) sum += d->estimate(k);
        c.mean = sum / reps;
        double ss = 0.0;
        double se = 0.0;
        for (const auto* d : draws) {
            const double dev = d->estimate(k) - c.mean;
            const double err = d->estimate(k) - c.true_value;
            ss += dev * dev;
            se += err * err;
        }
        c.bias = c.mean - c.true_value;
        c.sd = std::sqrt(ss / reps);
        c.rmse = std::sqrt(se / reps);
        c.coverage.assign(levels, 0.0);
        for (std::size_t l = 0; l < levels; ++l) {
            std::size_t hits = 0;
            for (const auto* d : draws) hits += d->hits[l][static_cast<std::size_t>(k)] ? 1 : 0;
            c.coverage[l] = static_cast<double>(hits) / reps;
        }
    }
    return out;
}

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string level_label(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g%%", level * 100.0);
    return buf;
}

}  // namespace

void SimulationConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Validation, msg); };
    if (!std::isfinite(rho)) fail("rho must be finite");
    if (!(pi0 >= 0.0 && pi0 < 1.0)) fail("pi0 must lie in [0, 1)");
    if (!(alpha > 0.0 && std::isfinite(alpha))) fail("alpha must be positive");
    if (!(sigma_a > 0.0 && std::isfinite(sigma_a))) fail("sigma_a must be positive");
    if (!(sigma_u > 0.0 && std::isfinite(sigma_u))) fail("sigma_u must be positive");
    if (!std::isfinite(time_shift)) fail("time_shift must be finite");
    if (n < 4) fail("n must be at least 4");
    if (poly_order < 1) fail("poly_order must be >= 1");
    if (reps < 1) fail("reps must be >= 1");
    check_probability_list(ci_levels);
}

double draw_epsilon(double u, double pi0, double alpha) {
    if (u < pi0) return 0.0;
    return std::pow((u - pi0) / (1.0 - pi0), 1.0 / alpha);
}

PanelDataset generate_panel(const SimulationConfig& config, std::uint64_t index, const DrawHooks& hooks) {
    config.validate();
    CounterStream rng(config.seed, index);
    const double noise = hooks.zero_noise ? 0.0 : config.sigma_u;
    std::vector<PanelObservation> obs;
    obs.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        const double x1 = rng.normal();
        const double eps = draw_epsilon(rng.uniform(), config.pi0, config.alpha);
        const double lambda = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double a_noise = rng.normal();
        const double a = hooks.fixed_a ? *hooks.fixed_a
                                       : config.rho * config.sigma_a * (1.0 + eps) + config.sigma_a * a_noise;
        PanelObservation o;
        o.x.resize(2, 2);
        o.y.resize(2);
        const double xs[2] = {x1, x1 + lambda * eps};
        for (int t = 0; t < 2; ++t) {
            const double u11 = noise * rng.normal();
            const double u12 = noise * rng.normal();
            const double u21 = noise * rng.normal();
            const double u22 = noise * rng.normal();
            const double shift = t == 1 ? config.time_shift : 0.0;
            const double b0 = a + u11 + u21 + shift;
            const double b1 = a + u12 + u22 + shift;
            o.x(t, 0) = 1.0;
            o.x(t, 1) = xs[t];
            o.y(t) = b0 + xs[t] * b1;
        }
        obs.push_back(std::move(o));
    }
    return PanelDataset::from_observations(std::move(obs));
}

PanelDataset generate_tall_panel(const SimulationConfig& config, std::uint64_t index, int periods,
                                 const DrawHooks& hooks) {
    config.validate();
    if (periods < 3) throw Error(ErrorKind::Validation, "tall design needs T >= 3");
    CounterStream rng(config.seed, index);
    const double noise = hooks.zero_noise ? 0.0 : config.sigma_u;
    std::vector<PanelObservation> obs;
    obs.reserve(config.n);
    for (std::size_t i = 0; i < config.n; ++i) {
        const double x1 = rng.normal();
        const double eps = draw_epsilon(rng.uniform(), config.pi0, config.alpha);
        const double a_noise = rng.normal();
        const double a = hooks.fixed_a ? *hooks.fixed_a
                                       : config.rho * config.sigma_a * (1.0 + eps) + config.sigma_a * a_noise;
        PanelObservation o;
        o.x.resize(periods, 2);
        o.y.resize(periods);
        for (int t = 0; t < periods; ++t) {
            const double lambda = t == 0 ? 0.0 : (rng.uniform() < 0.5 ? -1.0 : 1.0);
            const double xt = x1 + lambda * eps;
            const double u11 = noise * rng.normal();
            const double u12 = noise * rng.normal();
            const double u21 = noise * rng.normal();
            const double u22 = noise * rng.normal();
            const double shift = config.time_shift * t;
            o.x(t, 0) = 1.0;
            o.x(t, 1) = xt;
            o.y(t) = (a + u11 + u21 + shift) + xt * (a + u12 + u22 + shift);
        }
        obs.push_back(std::move(o));
    }
    return PanelDataset::from_observations(std::move(obs));
}

TrueParameters true_parameters(const SimulationConfig& config, int periods) {
    config.validate();
    const double scale =
        (config.pi0 + (1.0 - config.pi0) * (2.0 * config.alpha + 1.0) / (config.alpha + 1.0)) * config.rho *
        config.sigma_a;
    TrueParameters tp;
    tp.beta = Vector::Constant(2, scale);
    for (int t = 0; t < periods; ++t) tp.delta.push_back(Vector::Constant(2, config.time_shift * t));
    return tp;
}

ReplicationRecord run_replication(const SimulationConfig& config, std::uint64_t index, const DrawHooks& hooks) {
    ReplicationRecord rec;
    rec.index = index;
    try {
        const PanelDataset data = generate_panel(config, index, hooks);
        EstimatorConfig est;
        est.poly_order = config.poly_order;
        est.target_period = 1;
        est.ci_levels = config.ci_levels;
        const CoreFit fit = fit_core(data, est);
        rec.bandwidth = fit.estimates.bandwidth_used;
        rec.counts = fit.estimates.counts;
        if (!fit.estimates.beta_mover) throw Error(ErrorKind::NoMovers, "no movers in replication");

        // A pinned by the hook makes every unit share b* = (A, A).
        const Vector truth = hooks.fixed_a ? Vector::Constant(2, *hooks.fixed_a) : true_parameters(config).beta;
        const InfluenceSet infl = influence_contributions(data, fit);
        rec.unified = make_draw(fit.estimates.theta_hat, infl.zeta, truth, config.ci_levels);
        rec.mover = make_draw(*fit.estimates.beta_mover, mover_influence(data, fit), truth, config.ci_levels);
    } catch (const Error& e) {
        rec.failed = true;
        rec.failure = std::string(to_string(e.kind())) + ": " + e.what();
    }
    return rec;
}

SimulationSummary summarize(const SimulationConfig& config, const std::vector<ReplicationRecord>& records) {
    SimulationSummary s;
    s.ci_levels = config.ci_levels;
    std::vector<const EstimatorDraw*> mover;
    std::vector<const EstimatorDraw*> unified;
    for (const auto& rec : records) {
        if (rec.failed) {
            ++s.reps_failed;
            if (s.failures.size() < kKeptFailures) {
                s.failures.push_back("rep " + std::to_string(rec.index) + ": " + rec.failure);
            }
            continue;
        }
        mover.push_back(&rec.mover);
        unified.push_back(&rec.unified);
    }
    s.reps_completed = unified.size();
    if (s.reps_completed == 0) {
        std::string msg = "all " + std::to_string(records.size()) + " replications failed";
        if (!s.failures.empty()) msg += "; first: " + s.failures.front();
        throw Error(ErrorKind::StudyFailed, msg);
    }
    const Vector truth = true_parameters(config).beta;
    s.mover = summarize_estimator(mover, truth, config.ci_levels.size());
    s.unified = summarize_estimator(unified, truth, config.ci_levels.size());
    return s;
}

SimulationSummary run_study(const SimulationConfig& config, unsigned threads) {
    config.validate();
    std::vector<ReplicationRecord> records(config.reps);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(config.reps)));
    if (workers == 1) {
        for (std::size_t r = 0; r < config.reps; ++r) records[r] = run_replication(config, r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < config.reps; r = next++) records[r] = run_replication(config, r);
            });
        }
        for (auto& t : pool) t.join();
    }
    return summarize(config, records);
}

std::string emit_table(const std::vector<NamedSummary>& studies, TableFormat format) {
    std::vector<std::string> header{"Study", "Estimator", "Coefficient", "True", "Mean", "Bias", "SD", "RMSE"};
    if (!studies.empty()) {
        for (double level : studies.front().summary.ci_levels) header.push_back(level_label(level));
    }
    std::ostringstream out;
    auto emit_row = [&](const std::vector<std::string>& cells) {
        if (format == TableFormat::Csv) {
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
            out << '\n';
        } else {
            out << '|';
            for (const auto& c : cells) out << ' ' << c << " |";
            out << '\n';
        }
    };
    emit_row(header);
    if (format == TableFormat::Markdown) {
        out << '|';
        for (std::size_t i = 0; i < header.size(); ++i) out << (i < 3 ? " --- |" : " ---: |");
        out << '\n';
    }
    for (const auto& study : studies) {
        const auto& s = study.summary;
        auto rows = [&](const char* name, const std::vector<CoefficientSummary>& coefs) {
            for (std::size_t k = 0; k < coefs.size(); ++k) {
                const auto& c = coefs[k];
                std::vector<std::string> cells{study.name, name, "beta0" + std::to_string(k),
                                               fixed3(c.true_value), fixed3(c.mean), fixed3(c.bias),
                                               fixed3(c.sd), fixed3(c.rmse)};
                for (double cov : c.coverage) cells.push_back(fixed3(cov));
                emit_row(cells);
            }
        };
        rows("mover", s.mover);
        rows("unified", s.unified);
    }
    return out.str();
}

}  // namespace crcpanel
