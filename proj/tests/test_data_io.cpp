#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"

#include "crcpanel/data_io.hpp"
#include "crcpanel/error.hpp"
#include "crcpanel/report.hpp"
#include "desk_data.hpp"

using namespace crcpanel;

namespace {

struct Caught {
    ErrorKind kind;
    std::string what;
};

template <typename F>
Caught catch_error(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return {e.kind(), e.what()};
    }
    FAIL("expected an Error");
    return {ErrorKind::Validation, ""};
}

PanelReadResult read_text(const std::string& text, int regressors = 0) {
    std::istringstream in(text);
    return read_panel_csv(in, regressors);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_golden(const std::string& name, const std::string& text) {
    const std::string path = std::string(CRCPANEL_FIXTURES) + "/" + name;
    if (std::getenv("CRCPANEL_UPDATE_GOLDEN")) {
        std::ofstream(path, std::ios::binary) << text;
    }
    CHECK(slurp(path) == text);
}

void check_same_config(const SimulationConfig& a, const SimulationConfig& b) {
    CHECK(a.rho == b.rho);
    CHECK(a.pi0 == b.pi0);
    CHECK(a.alpha == b.alpha);
    CHECK(a.sigma_a == b.sigma_a);
    CHECK(a.sigma_u == b.sigma_u);
    CHECK(a.time_shift == b.time_shift);
    CHECK(a.n == b.n);
    CHECK(a.poly_order == b.poly_order);
    CHECK(a.reps == b.reps);
    CHECK(a.seed == b.seed);
    CHECK(a.ci_levels == b.ci_levels);
}

}  // namespace

TEST_CASE("well-formed 2x2 file") {
    const auto r = read_text(
        "id,period,y,x1,x2\n"
        "b,1,1.5,1,0.2\n"
        "a,2,3,1,1.4\n"
        "a,1,2,1,0.5\n"
        "b,2,4,1,-0.3\n");
    CHECK(r.dataset.n() == 2);
    CHECK(r.dataset.periods() == 2);
    CHECK(r.dataset.regressors() == 2);
    CHECK(r.dataset.mode() == PanelMode::SquareTP);
    CHECK(r.ids == std::vector<std::string>{"a", "b"});
    CHECK(r.warnings.empty());
    const auto& a = r.dataset[0];
    CHECK(a.y(0) == 2.0);
    CHECK(a.y(1) == 3.0);
    CHECK(a.x(0, 1) == 0.5);
    CHECK(a.x(1, 1) == 1.4);
    CHECK(r.dataset[1].x(1, 1) == -0.3);
}

TEST_CASE("column order and extra columns") {
    const auto r = read_text(
        "x2,note,y,period,x1,id\n"
        "0.5,foo,2,1,1,u\n"
        "1.4,bar,3,2,1,u\n"
        "0.1,baz,1,1,1,v\n"
        "0.9,qux,2,2,1,v\n");
    CHECK(r.dataset.n() == 2);
    CHECK(r.dataset[0].x(1, 1) == 1.4);
    CHECK(r.dataset[0].y(1) == 3.0);
}

TEST_CASE("period labels are remapped with a warning") {
    const auto r = read_text(
        "id,period,y,x1,x2\n"
        "a,2019,2,1,0.5\n"
        "a,2020,3,1,1.4\n"
        "b,2020,5,1,0.7\n"
        "b,2019,4,1,0.2\n");
    CHECK(r.dataset[1].y(0) == 4.0);
    CHECK(r.dataset[0].y(0) == 2.0);
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("malformed panels") {
    const auto unbalanced = catch_error([] {
        read_text("id,period,y,x1,x2\n"
                  "a,1,2,1,0.5\n"
                  "a,2,3,1,1.4\n"
                  "unit7,1,1,1,0.1\n");
    });
    CHECK(unbalanced.kind == ErrorKind::UnbalancedPanel);
    CHECK(unbalanced.what.find("unit7") != std::string::npos);

    const auto repeated = catch_error([] {
        read_text("id,period,y,x1,x2\n"
                  "a,1,2,1,0.5\n"
                  "a,1,3,1,1.4\n");
    });
    CHECK(repeated.kind == ErrorKind::UnbalancedPanel);

    const auto bad_number = catch_error([] {
        read_text("id,period,y,x1,x2\n"
                  "a,1,2,1,0.5\n"
                  "a,2,three,1,1.4\n");
    });
    CHECK(bad_number.kind == ErrorKind::Parse);
    CHECK(bad_number.what.find("line 3") != std::string::npos);

    const auto short_row = catch_error([] {
        read_text("id,period,y,x1,x2\n"
                  "a,1,2,1\n");
    });
    CHECK(short_row.kind == ErrorKind::Parse);
    CHECK(short_row.what.find("line 2") != std::string::npos);

    CHECK(catch_error([] { read_text("id,period,x1\n"); }).kind == ErrorKind::Parse);
    CHECK(catch_error([] { read_text(""); }).kind == ErrorKind::Parse);

    const auto too_short = catch_error([] {
        read_text("id,period,y,x1,x2,x3\n"
                  "a,1,2,1,0.5,1\n"
                  "a,2,3,1,1.4,2\n");
    });
    CHECK(too_short.kind == ErrorKind::UnsupportedShape);
}

TEST_CASE("explicit regressor count") {
    const auto r = read_text(
        "id,period,y,x1,x2,x3\n"
        "a,1,2,1,0.5,9\n"
        "a,2,3,1,1.4,9\n"
        "b,1,2,1,0.3,9\n"
        "b,2,3,1,1.1,9\n",
        2);
    CHECK(r.dataset.regressors() == 2);
}

TEST_CASE("generated panels survive a write/read cycle") {
    SimulationConfig c;
    c.n = 120;
    c.seed = 8;
    for (const auto& ds : {generate_panel(c, 0), generate_tall_panel(c, 0, 4), desk::ds2()}) {
        std::ostringstream out;
        write_panel_csv(out, ds);
        const std::string first = out.str();
        std::istringstream in(first);
        const auto back = read_panel_csv(in);
        CHECK(back.dataset == ds);
        CHECK(back.warnings.empty());
        std::ostringstream again;
        write_panel_csv(again, back.dataset);
        CHECK(again.str() == first);
    }
}

TEST_CASE("report json round trip and fixture") {
    EstimatorConfig cfg;
    cfg.bandwidth = Bandwidth::fixed(desk::kDs1Bandwidth);
    const RunReport square = run_estimation(desk::ds1(), cfg, "ds1.csv");
    REQUIRE(square.mover.has_value());
    const std::string text = write_report_json(square);
    CHECK(read_report_json(text) == square);
    CHECK(write_report_json(read_report_json(text)) == text);
    check_golden("report_ds1.json", text);
    check_golden("report_ds1.md", write_report_table(square, TableFormat::Markdown));

    EstimatorConfig tall_cfg;
    tall_cfg.bandwidth = Bandwidth::fixed(1.0);
    tall_cfg.target_period = 2;
    const RunReport tall = run_estimation(desk::ds2(), tall_cfg);
    CHECK_FALSE(tall.mover.has_value());
    CHECK(read_report_json(write_report_json(tall)) == tall);

    RunReport broken = square;
    broken.theta.std_errors(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK(catch_error([&] { write_report_json(broken); }).kind == ErrorKind::Serialization);
    broken = square;
    broken.beta_unified(1) = std::numeric_limits<double>::infinity();
    CHECK(catch_error([&] { write_report_json(broken); }).kind == ErrorKind::Serialization);

    CHECK(catch_error([] { read_report_json("{\"version\": "); }).kind == ErrorKind::Parse);
    CHECK(catch_error([] { read_report_json("[]"); }).kind == ErrorKind::Parse);
}

TEST_CASE("simulation config files") {
    const auto sections = parse_simulation_configs(
        "# shared\n"
        "n = 250\n"
        "reps = 20\n"
        "ci_levels = 0.8, 0.95\n"
        "\n"
        "[headline]\n"
        "rho = 0.5\n"
        "[contrast]  # trailing comment\n"
        "rho = 1.0\n"
        "alpha = 0.25\n"
        "pi0 = 0.1\n"
        "seed = 18446744073709551615\n");
    REQUIRE(sections.size() == 2);
    CHECK(sections[0].name == "headline");
    CHECK(sections[0].config.n == 250);
    CHECK(sections[0].config.alpha == 1.0);
    CHECK(sections[0].config.sigma_u == 0.1);
    CHECK(sections[0].config.ci_levels == std::vector<double>{0.8, 0.95});
    CHECK(sections[1].config.rho == 1.0);
    CHECK(sections[1].config.alpha == 0.25);
    CHECK(sections[1].config.pi0 == 0.1);
    CHECK(sections[1].config.reps == 20);
    CHECK(sections[1].config.seed == 18446744073709551615ULL);

    const auto single = parse_simulation_configs("rho = 1\n");
    REQUIRE(single.size() == 1);
    check_same_config(single[0].config, [] {
        SimulationConfig c;
        c.rho = 1.0;
        return c;
    }());

    const auto unknown = catch_error([] { parse_simulation_configs("rho = 1\nbeta = 2\n"); });
    CHECK(unknown.kind == ErrorKind::Parse);
    CHECK(unknown.what.find("line 2") != std::string::npos);
    CHECK(unknown.what.find("beta") != std::string::npos);
    CHECK(catch_error([] { parse_simulation_configs("rho 1\n"); }).kind == ErrorKind::Parse);
    CHECK(catch_error([] { parse_simulation_configs("[a]\n[a]\n"); }).kind == ErrorKind::Parse);
    CHECK(catch_error([] { parse_simulation_configs("[a\n"); }).kind == ErrorKind::Parse);
    CHECK(catch_error([] { parse_simulation_configs("n = ten\n"); }).kind == ErrorKind::Parse);
    const auto invalid = catch_error([] { parse_simulation_configs("[bad]\npi0 = 1\n"); });
    CHECK(invalid.kind == ErrorKind::Validation);
    CHECK(invalid.what.find("bad") != std::string::npos);
}

TEST_CASE("summary json round trip") {
    SimulationConfig c;
    c.n = 300;
    c.reps = 6;
    c.seed = 12;
    const std::vector<NamedSummary> studies{{"one", c, run_study(c)}};
    const std::string text = write_summary_json(studies);
    const auto back = read_summary_json(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].name == "one");
    check_same_config(back[0].config, c);
    const auto& s = back[0].summary;
    CHECK(s.reps_completed == studies[0].summary.reps_completed);
    CHECK(s.ci_levels == studies[0].summary.ci_levels);
    for (int k = 0; k < 2; ++k) {
        CHECK(s.unified[k].mean == studies[0].summary.unified[k].mean);
        CHECK(s.unified[k].sd == studies[0].summary.unified[k].sd);
        CHECK(s.mover[k].rmse == studies[0].summary.mover[k].rmse);
        CHECK(s.mover[k].coverage == studies[0].summary.mover[k].coverage);
    }
    CHECK(write_summary_json(back) == text);
}
