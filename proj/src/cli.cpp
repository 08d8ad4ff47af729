#include "crcpanel/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"

#include "crcpanel/data_io.hpp"
#include "crcpanel/error.hpp"
#include "crcpanel/report.hpp"
#include "crcpanel/version.hpp"

namespace crcpanel {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Validation, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double parse_real(const std::string& text, const char* what) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw Error(ErrorKind::Validation, std::string("invalid ") + what + " '" + text + "'");
    }
    return v;
}

std::vector<double> parse_levels(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const double v = parse_real(item, "confidence level");
        if (!(v > 0.0 && v < 1.0)) throw Error(ErrorKind::Validation, "confidence level must lie in (0, 1)");
        out.push_back(v);
    }
    if (out.empty()) throw Error(ErrorKind::Validation, "no confidence levels given");
    return out;
}

// Writes to a sibling temp file and renames it into place.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        out.flush();
        return;
    }
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::Validation, "cannot write '" + path + "'");
        f << text;
        f.flush();
        if (!f) {
            f.close();
            std::filesystem::remove(tmp);
            throw Error(ErrorKind::Validation, "failed writing '" + path + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorKind::Validation, "cannot move output into '" + path + "': " + ec.message());
    }
}

struct EstimateArgs {
    std::string input;
    int poly_order = 2;
    std::string bandwidth = "plugin";
    int period = 1;
    std::string ci = "0.90,0.95";
    std::string mode = "auto";
    std::string format = "json";
    int regressors = 0;
    std::string out;
};

struct SimulateArgs {
    std::string config;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string format = "json";
    std::string out;
};

struct TableArgs {
    std::string input;
    std::string format = "markdown";
    std::string out;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
    EstimatorConfig config;
    config.poly_order = a.poly_order;
    config.target_period = a.period;
    config.ci_levels = parse_levels(a.ci);
    if (a.bandwidth != "plugin") config.bandwidth = Bandwidth::fixed(parse_real(a.bandwidth, "bandwidth"));
    std::optional<PanelMode> forced;
    if (a.mode == "square") forced = PanelMode::SquareTP;
    if (a.mode == "tall") forced = PanelMode::TallTP;

    std::istringstream in(read_file(a.input));
    PanelReadResult data = read_panel_csv(in, a.regressors, forced);
    config.validate(data.dataset.periods());
    for (const auto& w : data.warnings) err << "warning: " << w << '\n';

    const RunReport report = run_estimation(data.dataset, config, a.input);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    std::string text;
    if (a.format == "json") {
        text = write_report_json(report);
    } else {
        text = write_report_table(report, a.format == "csv" ? TableFormat::Csv : TableFormat::Markdown);
    }
    emit(text, a.out, out);
    return kExitOk;
}

int cmd_simulate(const SimulateArgs& a, bool reps_set, bool seed_set, std::ostream& out, std::ostream& err) {
    std::vector<NamedConfig> configs = parse_simulation_configs(read_file(a.config));
    for (auto& c : configs) {
        if (reps_set) c.config.reps = a.reps;
        if (seed_set) c.config.seed = a.seed;
        c.config.validate();
    }
    std::vector<NamedSummary> studies;
    for (const auto& c : configs) {
        SimulationSummary s;
        try {
            s = run_study(c.config, a.threads);
        } catch (const Error& e) {
            throw e.with_stage(c.name);
        }
        if (s.reps_failed > 0) {
            err << "warning: " << c.name << ": " << s.reps_failed << " of " << c.config.reps
                << " replications failed\n";
        }
        studies.push_back({c.name, c.config, std::move(s)});
    }
    std::string text;
    if (a.format == "json") {
        text = write_summary_json(studies);
    } else {
        text = emit_table(studies, a.format == "csv" ? TableFormat::Csv : TableFormat::Markdown);
    }
    emit(text, a.out, out);
    return kExitOk;
}

int cmd_table(const TableArgs& a, std::ostream& out) {
    const std::vector<NamedSummary> studies = read_summary_json(read_file(a.input));
    std::string text;
    if (a.format == "json") {
        text = write_summary_json(studies);
    } else {
        text = emit_table(studies, a.format == "csv" ? TableFormat::Csv : TableFormat::Markdown);
    }
    emit(text, a.out, out);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Slow-mover robust estimation for correlated random coefficient panels", "crcpanel"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Fit a long-format CSV panel");
    estimate->add_option("input", est.input, "CSV file with id, period, y, x1..xp")->required();
    estimate->add_option("--poly-order", est.poly_order, "Local polynomial order L")->check(CLI::PositiveNumber);
    estimate->add_option("--bandwidth", est.bandwidth, "'plugin' or a positive number");
    estimate->add_option("--period", est.period, "Target period t (1-based)");
    estimate->add_option("--ci", est.ci, "Comma-separated confidence levels");
    estimate->add_option("--mode", est.mode, "Panel shape")->check(CLI::IsMember({"auto", "square", "tall"}));
    estimate->add_option("--format", est.format)->check(CLI::IsMember({"json", "csv", "markdown"}));
    estimate->add_option("--regressors", est.regressors, "Number of regressors (0 = infer)")
        ->check(CLI::NonNegativeNumber);
    estimate->add_option("--out", est.out, "Output file (default stdout)");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run Monte Carlo studies from a config file");
    simulate->add_option("config", sim.config, "Study config file")->required();
    auto* reps_opt = simulate->add_option("--reps", sim.reps, "Override replications")->check(CLI::PositiveNumber);
    auto* seed_opt = simulate->add_option("--seed", sim.seed, "Override seed");
    simulate->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--format", sim.format)->check(CLI::IsMember({"json", "csv", "markdown"}));
    simulate->add_option("--out", sim.out, "Output file (default stdout)");

    TableArgs tab;
    auto* table = app.add_subcommand("table", "Render a summary JSON document as a table");
    table->add_option("input", tab.input, "Summary JSON from `simulate`")->required();
    table->add_option("--format", tab.format)->check(CLI::IsMember({"json", "csv", "markdown"}));
    table->add_option("--out", tab.out, "Output file (default stdout)");

    auto* version = app.add_subcommand("version", "Print the version");

    std::vector<const char*> argv{"crcpanel"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*estimate) return cmd_estimate(est, out, err);
        if (*simulate) return cmd_simulate(sim, reps_opt->count() > 0, seed_opt->count() > 0, out, err);
        if (*table) return cmd_table(tab, out);
        if (*version) {
            out << kVersion << '\n';
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        const bool numerical = is_numerical(e.kind()) || e.kind() == ErrorKind::Serialization;
        return numerical ? kExitNumerical : kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace crcpanel
