#include "crcpanel/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "crcpanel/error.hpp"
#include "crcpanel/estimator_ext.hpp"
#include "crcpanel/version.hpp"

namespace crcpanel {
namespace {

// Minimal pretty-printing JSON emitter; keys come out in call order.
class JsonWriter {
public:
    std::string str() const { return out_.str() + "\n"; }

    void begin_object() { open('{'); }
    void end_object() { close('}'); }
    void begin_array() { open('['); }
    void end_array() { close(']'); }

    void key(std::string_view k) {
        separator();
        write_string(k);
        out_ << ": ";
        pending_key_ = true;
    }

    void number(double v) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Serialization, "refusing to serialize a non-finite number");
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        value_text(buf);
    }
    void integer(long long v) { value_text(std::to_string(v)); }
    void unsigned_integer(unsigned long long v) { value_text(std::to_string(v)); }
    void boolean(bool v) { value_text(v ? "true" : "false"); }
    void null() { value_text("null"); }
    void string(std::string_view s) {
        separator();
        write_string(s);
    }

    // Inline numeric array: [a, b, c].
    void numbers(const Vector& v) {
        separator();
        out_ << '[';
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v(i))) {
                throw Error(ErrorKind::Serialization, "refusing to serialize a non-finite number");
            }
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v(i));
            out_ << (i ? ", " : "") << buf;
        }
        out_ << ']';
    }
    void numbers(const std::vector<double>& v) { numbers(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))); }

    void matrix(const Matrix& m) {
        begin_array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) numbers(m.row(r).transpose());
        end_array();
    }

private:
    void open(char c) {
        separator();
        out_ << c;
        first_.push_back(true);
    }
    void close(char c) {
        const bool empty = first_.back();
        first_.pop_back();
        if (!empty) newline();
        out_ << c;
    }
    void separator() {
        if (pending_key_) {
            pending_key_ = false;
            return;
        }
        if (first_.empty()) return;
        if (!first_.back()) out_ << ',';
        first_.back() = false;
        newline();
    }
    void newline() { out_ << '\n' << std::string(2 * first_.size(), ' '); }
    void value_text(const std::string& text) {
        separator();
        out_ << text;
    }
    void write_string(std::string_view s) {
        out_ << '"';
        for (char ch : s) {
            switch (ch) {
            case '"': out_ << "\\\""; break;
            case '\\': out_ << "\\\\"; break;
            case '\n': out_ << "\\n"; break;
            case '\t': out_ << "\\t"; break;
            case '\r': out_ << "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out_ << buf;
                } else {
                    out_ << ch;
                }
            }
        }
        out_ << '"';
    }

    std::ostringstream out_;
    std::vector<bool> first_;
    bool pending_key_ = false;
};

bool same(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}
bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }
bool same(const std::optional<Vector>& a, const std::optional<Vector>& b) {
    return a.has_value() == b.has_value() && (!a || same(*a, *b));
}
bool same(const InferenceSection& a, const InferenceSection& b) {
    if (!same(a.estimate, b.estimate) || !same(a.covariance, b.covariance) || !same(a.std_errors, b.std_errors) ||
        a.intervals.size() != b.intervals.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.intervals.size(); ++i) {
        const auto& x = a.intervals[i];
        const auto& y = b.intervals[i];
        if (x.level != y.level || !same(x.lower, y.lower) || !same(x.upper, y.upper)) return false;
    }
    return true;
}

InferenceSection make_section(const Vector& estimate, const Matrix& zeta, const std::vector<double>& levels) {
    InferenceReport rep = infer(estimate, zeta, levels);
    return {estimate, rep.covariance, rep.std_errors, rep.intervals};
}

void write_section(JsonWriter& w, const InferenceSection& s) {
    w.begin_object();
    w.key("estimate");
    w.numbers(s.estimate);
    w.key("std_errors");
    w.numbers(s.std_errors);
    w.key("covariance");
    w.matrix(s.covariance);
    w.key("intervals");
    w.begin_array();
    for (const auto& iv : s.intervals) {
        w.begin_object();
        w.key("level");
        w.number(iv.level);
        w.key("lower");
        w.numbers(iv.lower);
        w.key("upper");
        w.numbers(iv.upper);
        w.end_object();
    }
    w.end_array();
    w.end_object();
}

Vector to_vector(const nlohmann::json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

Matrix to_matrix(const nlohmann::json& j) {
    if (j.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.at(0).size()));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j.at(r).size() != static_cast<std::size_t>(m.cols())) throw Error(ErrorKind::Parse, "ragged matrix");
        m.row(static_cast<Eigen::Index>(r)) = to_vector(j.at(r)).transpose();
    }
    return m;
}

InferenceSection read_section(const nlohmann::json& j) {
    InferenceSection s;
    s.estimate = to_vector(j.at("estimate"));
    s.std_errors = to_vector(j.at("std_errors"));
    s.covariance = to_matrix(j.at("covariance"));
    for (const auto& iv : j.at("intervals")) {
        s.intervals.push_back({iv.at("level").get<double>(), to_vector(iv.at("lower")), to_vector(iv.at("upper"))});
    }
    return s;
}

template <typename F>
auto parse_json(std::string_view text, F&& body) {
    try {
        return body(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed JSON document: ") + e.what());
    }
}

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    return s == "-0.000" ? "0.000" : s;
}

}  // namespace

bool operator==(const RunReport& a, const RunReport& b) {
    const auto& ca = a.config;
    const auto& cb = b.config;
    return a.version == b.version && a.input == b.input && ca.poly_order == cb.poly_order &&
           ca.bandwidth.is_plugin == cb.bandwidth.is_plugin && ca.bandwidth.value == cb.bandwidth.value &&
           ca.target_period == cb.target_period && ca.ci_levels == cb.ci_levels && a.mode == b.mode &&
           a.n == b.n && a.periods == b.periods && a.regressors == b.regressors && a.bandwidth == b.bandwidth &&
           a.counts.stayers == b.counts.stayers && a.counts.slow_movers == b.counts.slow_movers &&
           a.counts.movers == b.counts.movers && same(a.delta_hat, b.delta_hat) && same(a.gamma_hat, b.gamma_hat) &&
           same(a.beta_unified, b.beta_unified) && same(a.beta_mover, b.beta_mover) && same(a.theta, b.theta) &&
           a.mover.has_value() == b.mover.has_value() && (!a.mover || same(*a.mover, *b.mover)) &&
           a.warnings == b.warnings;
}

RunReport run_estimation(const PanelDataset& dataset, const EstimatorConfig& config, std::string input) {
    RunReport rep;
    rep.version = kVersion;
    rep.input = std::move(input);
    rep.config = config;
    rep.mode = dataset.mode();
    rep.n = dataset.n();
    rep.periods = dataset.periods();
    rep.regressors = dataset.regressors();

    if (dataset.mode() == PanelMode::SquareTP) {
        const CoreFit fit = fit_core(dataset, config);
        const auto& est = fit.estimates;
        rep.bandwidth = est.bandwidth_used;
        rep.counts = est.counts;
        rep.delta_hat = est.delta_hat;
        rep.gamma_hat = est.gamma_hat;
        rep.beta_unified = est.beta_unified;
        rep.beta_mover = est.beta_mover;
        rep.warnings = est.warnings;
        const InfluenceSet infl = [&] {
            try {
                return influence_contributions(dataset, fit);
            } catch (const Error& e) {
                throw e.with_stage("influence");
            }
        }();
        rep.theta = make_section(est.theta_hat, infl.zeta, config.ci_levels);
        if (est.beta_mover) {
            const Vector mover_theta = *est.beta_mover + fit.selector * est.delta_hat;
            rep.mover = make_section(mover_theta, mover_influence(dataset, fit), config.ci_levels);
        }
    } else {
        const ExtFit fit = fit_ext(dataset, config);
        const auto& est = fit.estimates;
        rep.bandwidth = est.bandwidth_used;
        rep.counts = est.counts;
        rep.delta_hat = est.delta_hat;
        rep.gamma_hat = est.gamma_hat;
        rep.beta_unified = est.beta_unified;
        rep.beta_mover = est.beta_mover;
        rep.warnings = est.warnings;
        rep.theta = make_section(est.theta_hat, est.zeta, config.ci_levels);
    }
    return rep;
}

std::string write_report_json(const RunReport& r) {
    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.string(r.version);
    w.key("input");
    w.string(r.input);
    w.key("config");
    w.begin_object();
    w.key("poly_order");
    w.integer(r.config.poly_order);
    w.key("bandwidth");
    if (r.config.bandwidth.is_plugin) {
        w.string("plugin");
    } else {
        w.number(r.config.bandwidth.value);
    }
    w.key("target_period");
    w.integer(r.config.target_period);
    w.key("ci_levels");
    w.numbers(r.config.ci_levels);
    w.end_object();
    w.key("panel");
    w.begin_object();
    w.key("mode");
    w.string(to_string(r.mode));
    w.key("n");
    w.unsigned_integer(r.n);
    w.key("periods");
    w.integer(r.periods);
    w.key("regressors");
    w.integer(r.regressors);
    w.end_object();
    w.key("bandwidth");
    w.number(r.bandwidth);
    w.key("counts");
    w.begin_object();
    w.key("stayers");
    w.unsigned_integer(r.counts.stayers);
    w.key("slow_movers");
    w.unsigned_integer(r.counts.slow_movers);
    w.key("movers");
    w.unsigned_integer(r.counts.movers);
    w.end_object();
    w.key("delta_hat");
    w.numbers(r.delta_hat);
    w.key("gamma_hat");
    w.matrix(r.gamma_hat);
    w.key("beta_unified");
    w.numbers(r.beta_unified);
    w.key("beta_mover");
    if (r.beta_mover) {
        w.numbers(*r.beta_mover);
    } else {
        w.null();
    }
    w.key("theta");
    write_section(w, r.theta);
    w.key("mover");
    if (r.mover) {
        write_section(w, *r.mover);
    } else {
        w.null();
    }
    w.key("warnings");
    w.begin_array();
    for (const auto& s : r.warnings) w.string(s);
    w.end_array();
    w.end_object();
    return w.str();
}

RunReport read_report_json(std::string_view text) {
    return parse_json(text, [](const nlohmann::json& j) {
        RunReport r;
        r.version = j.at("version").get<std::string>();
        r.input = j.at("input").get<std::string>();
        const auto& c = j.at("config");
        r.config.poly_order = c.at("poly_order").get<int>();
        if (c.at("bandwidth").is_string()) {
            r.config.bandwidth = Bandwidth::plugin();
        } else {
            r.config.bandwidth = Bandwidth::fixed(c.at("bandwidth").get<double>());
        }
        r.config.target_period = c.at("target_period").get<int>();
        r.config.ci_levels = c.at("ci_levels").get<std::vector<double>>();
        const auto& p = j.at("panel");
        r.mode = p.at("mode").get<std::string>() == "square" ? PanelMode::SquareTP : PanelMode::TallTP;
        r.n = p.at("n").get<std::size_t>();
        r.periods = p.at("periods").get<int>();
        r.regressors = p.at("regressors").get<int>();
        r.bandwidth = j.at("bandwidth").get<double>();
        const auto& k = j.at("counts");
        r.counts.stayers = k.at("stayers").get<std::size_t>();
        r.counts.slow_movers = k.at("slow_movers").get<std::size_t>();
        r.counts.movers = k.at("movers").get<std::size_t>();
        r.delta_hat = to_vector(j.at("delta_hat"));
        r.gamma_hat = to_matrix(j.at("gamma_hat"));
        r.beta_unified = to_vector(j.at("beta_unified"));
        if (!j.at("beta_mover").is_null()) r.beta_mover = to_vector(j.at("beta_mover"));
        r.theta = read_section(j.at("theta"));
        if (!j.at("mover").is_null()) r.mover = read_section(j.at("mover"));
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    });
}

std::string write_report_table(const RunReport& r, TableFormat format) {
    std::vector<std::string> header{"Estimator", "Coefficient", "Estimate", "SE"};
    for (const auto& iv : r.theta.intervals) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g%%", iv.level * 100.0);
        header.push_back(std::string(buf) + " lower");
        header.push_back(std::string(buf) + " upper");
    }
    std::ostringstream out;
    auto row = [&](const std::vector<std::string>& cells) {
        if (format == TableFormat::Csv) {
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        } else {
            out << '|';
            for (const auto& c : cells) out << ' ' << c << " |";
        }
        out << '\n';
    };
    row(header);
    if (format == TableFormat::Markdown) {
        out << '|';
        for (std::size_t i = 0; i < header.size(); ++i) out << (i < 2 ? " --- |" : " ---: |");
        out << '\n';
    }
    auto section = [&](const char* name, const InferenceSection& s) {
        for (Eigen::Index k = 0; k < s.estimate.size(); ++k) {
            std::vector<std::string> cells{name, "theta" + std::to_string(k), fixed3(s.estimate(k)),
                                           fixed3(s.std_errors(k))};
            for (const auto& iv : s.intervals) {
                cells.push_back(fixed3(iv.lower(k)));
                cells.push_back(fixed3(iv.upper(k)));
            }
            row(cells);
        }
    };
    section("unified", r.theta);
    if (r.mover) section("mover", *r.mover);
    return out.str();
}

std::string write_summary_json(const std::vector<NamedSummary>& studies) {
    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.string(kVersion);
    w.key("studies");
    w.begin_array();
    for (const auto& st : studies) {
        const auto& c = st.config;
        const auto& s = st.summary;
        w.begin_object();
        w.key("name");
        w.string(st.name);
        w.key("config");
        w.begin_object();
        w.key("rho");
        w.number(c.rho);
        w.key("pi0");
        w.number(c.pi0);
        w.key("alpha");
        w.number(c.alpha);
        w.key("sigma_a");
        w.number(c.sigma_a);
        w.key("sigma_u");
        w.number(c.sigma_u);
        w.key("time_shift");
        w.number(c.time_shift);
        w.key("n");
        w.unsigned_integer(c.n);
        w.key("poly_order");
        w.integer(c.poly_order);
        w.key("reps");
        w.unsigned_integer(c.reps);
        w.key("seed");
        w.unsigned_integer(c.seed);
        w.key("ci_levels");
        w.numbers(c.ci_levels);
        w.end_object();
        w.key("reps_completed");
        w.unsigned_integer(s.reps_completed);
        w.key("reps_failed");
        w.unsigned_integer(s.reps_failed);
        w.key("failures");
        w.begin_array();
        for (const auto& f : s.failures) w.string(f);
        w.end_array();
        w.key("ci_levels");
        w.numbers(s.ci_levels);
        auto estimator = [&](const char* name, const std::vector<CoefficientSummary>& coefs) {
            w.key(name);
            w.begin_array();
            for (const auto& k : coefs) {
                w.begin_object();
                w.key("true");
                w.number(k.true_value);
                w.key("mean");
                w.number(k.mean);
                w.key("bias");
                w.number(k.bias);
                w.key("sd");
                w.number(k.sd);
                w.key("rmse");
                w.number(k.rmse);
                w.key("coverage");
                w.numbers(k.coverage);
                w.end_object();
            }
            w.end_array();
        };
        estimator("mover", s.mover);
        estimator("unified", s.unified);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.str();
}

std::vector<NamedSummary> read_summary_json(std::string_view text) {
    return parse_json(text, [](const nlohmann::json& j) {
        std::vector<NamedSummary> out;
        for (const auto& st : j.at("studies")) {
            NamedSummary ns;
            ns.name = st.at("name").get<std::string>();
            const auto& c = st.at("config");
            ns.config.rho = c.at("rho").get<double>();
            ns.config.pi0 = c.at("pi0").get<double>();
            ns.config.alpha = c.at("alpha").get<double>();
            ns.config.sigma_a = c.at("sigma_a").get<double>();
            ns.config.sigma_u = c.at("sigma_u").get<double>();
            ns.config.time_shift = c.at("time_shift").get<double>();
            ns.config.n = c.at("n").get<std::size_t>();
            ns.config.poly_order = c.at("poly_order").get<int>();
            ns.config.reps = c.at("reps").get<std::size_t>();
            ns.config.seed = c.at("seed").get<std::uint64_t>();
            ns.config.ci_levels = c.at("ci_levels").get<std::vector<double>>();
            auto& s = ns.summary;
            s.reps_completed = st.at("reps_completed").get<std::size_t>();
            s.reps_failed = st.at("reps_failed").get<std::size_t>();
            s.failures = st.at("failures").get<std::vector<std::string>>();
            s.ci_levels = st.at("ci_levels").get<std::vector<double>>();
            auto estimator = [&](const char* name) {
                std::vector<CoefficientSummary> coefs;
                for (const auto& k : st.at(name)) {
                    CoefficientSummary cs;
                    cs.true_value = k.at("true").get<double>();
                    cs.mean = k.at("mean").get<double>();
                    cs.bias = k.at("bias").get<double>();
                    cs.sd = k.at("sd").get<double>();
                    cs.rmse = k.at("rmse").get<double>();
                    cs.coverage = k.at("coverage").get<std::vector<double>>();
                    coefs.push_back(std::move(cs));
                }
                return coefs;
            };
            s.mover = estimator("mover");
            s.unified = estimator("unified");
            out.push_back(std::move(ns));
        }
        return out;
    });
}

}  // namespace crcpanel
