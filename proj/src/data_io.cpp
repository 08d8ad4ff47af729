#include "crcpanel/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "crcpanel/error.hpp"

namespace crcpanel {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string_view cell = trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') cell = cell.substr(1, cell.size() - 2);
        cells.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

double parse_double(std::string_view text, std::size_t line, std::string_view column) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": column '" + std::string(column) +
                                          "' is not a finite number: '" + std::string(text) + "'");
    }
    return v;
}

long long parse_integer(std::string_view text, std::size_t line, std::string_view column) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": column '" + std::string(column) +
                                          "' is not an integer: '" + std::string(text) + "'");
    }
    return v;
}

struct CsvRow {
    long long period;
    double y;
    std::vector<double> x;
};

}  // namespace

PanelReadResult read_panel_csv(std::istream& in, int regressors, std::optional<PanelMode> forced_mode) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorKind::Parse, "missing header row");

    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    auto required = [&](const std::string& name) {
        auto c = column(name);
        if (!c) throw Error(ErrorKind::Parse, "header lacks required column '" + name + "'");
        return *c;
    };
    const std::size_t id_col = required("id");
    const std::size_t period_col = required("period");
    const std::size_t y_col = required("y");
    if (regressors <= 0) {
        regressors = 0;
        while (column("x" + std::to_string(regressors + 1))) ++regressors;
        if (regressors == 0) throw Error(ErrorKind::Parse, "header has no regressor columns x1, x2, ...");
    }
    std::vector<std::size_t> x_cols;
    for (int k = 1; k <= regressors; ++k) x_cols.push_back(required("x" + std::to_string(k)));

    std::map<std::string, std::vector<CsvRow>> groups;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " cells, found " +
                                              std::to_string(cells.size()));
        }
        if (cells[id_col].empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty id");
        CsvRow row;
        row.period = parse_integer(cells[period_col], line_no, "period");
        row.y = parse_double(cells[y_col], line_no, "y");
        for (std::size_t k = 0; k < x_cols.size(); ++k) {
            row.x.push_back(parse_double(cells[x_cols[k]], line_no, header[x_cols[k]]));
        }
        groups[cells[id_col]].push_back(std::move(row));
    }
    if (groups.empty()) throw Error(ErrorKind::Parse, "no data rows");

    std::size_t periods = 0;
    for (const auto& [id, rows] : groups) periods = std::max(periods, rows.size());

    std::vector<std::string> ids;
    std::vector<std::string> warnings;
    std::optional<std::vector<long long>> labels;
    std::vector<PanelObservation> observations;
    for (auto& [id, rows] : groups) {
        std::sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) { return a.period < b.period; });
        if (rows.size() != periods) {
            throw Error(ErrorKind::UnbalancedPanel, "id '" + id + "' has " + std::to_string(rows.size()) +
                                                        " rows, expected " + std::to_string(periods));
        }
        std::vector<long long> own;
        for (const auto& r : rows) own.push_back(r.period);
        if (std::adjacent_find(own.begin(), own.end()) != own.end()) {
            throw Error(ErrorKind::UnbalancedPanel, "id '" + id + "' repeats a period");
        }
        if (!labels) {
            labels = own;
        } else if (*labels != own) {
            throw Error(ErrorKind::UnbalancedPanel, "id '" + id + "' has a different set of periods");
        }
        PanelObservation obs;
        obs.y.resize(static_cast<Eigen::Index>(periods));
        obs.x.resize(static_cast<Eigen::Index>(periods), regressors);
        for (std::size_t t = 0; t < periods; ++t) {
            obs.y(static_cast<Eigen::Index>(t)) = rows[t].y;
            for (int k = 0; k < regressors; ++k) obs.x(static_cast<Eigen::Index>(t), k) = rows[t].x[static_cast<std::size_t>(k)];
        }
        observations.push_back(std::move(obs));
        ids.push_back(id);
    }
    if (static_cast<int>(periods) < regressors) {
        throw Error(ErrorKind::UnsupportedShape, "T=" + std::to_string(periods) + " is smaller than p=" +
                                                     std::to_string(regressors));
    }
    for (std::size_t t = 0; t < periods; ++t) {
        if ((*labels)[t] != static_cast<long long>(t + 1)) {
            warnings.push_back("period labels are not 1..T; mapped in sorted order (first label " +
                                      std::to_string(labels->front()) + " -> 1)");
            break;
        }
    }
    return {PanelDataset::from_observations(std::move(observations), forced_mode), std::move(ids),
            std::move(warnings)};
}

void write_panel_csv(std::ostream& out, const PanelDataset& dataset) {
    const int width = static_cast<int>(std::to_string(dataset.n()).size());
    out << "id,period,y";
    for (int k = 1; k <= dataset.regressors(); ++k) out << ",x" << k;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const auto& obs = dataset[i];
        for (int t = 0; t < dataset.periods(); ++t) {
            std::snprintf(buf, sizeof buf, "%0*zu", width, i + 1);
            out << buf << ',' << (t + 1);
            std::snprintf(buf, sizeof buf, "%.17g", obs.y(t));
            out << ',' << buf;
            for (int k = 0; k < dataset.regressors(); ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", obs.x(t, k));
                out << ',' << buf;
            }
            out << '\n';
        }
    }
}

std::vector<NamedConfig> parse_simulation_configs(std::string_view text) {
    SimulationConfig defaults;
    std::vector<NamedConfig> sections;
    std::set<std::string> names;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;

    auto apply = [&](SimulationConfig& cfg, std::string_view key, std::string_view value) {
        auto num = [&] { return parse_double(value, line_no, key); };
        auto count = [&] {
            const long long v = parse_integer(value, line_no, key);
            if (v < 0) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": '" + std::string(key) + "' must be non-negative");
            return v;
        };
        if (key == "rho") cfg.rho = num();
        else if (key == "pi0") cfg.pi0 = num();
        else if (key == "alpha") cfg.alpha = num();
        else if (key == "sigma_a") cfg.sigma_a = num();
        else if (key == "sigma_u") cfg.sigma_u = num();
        else if (key == "time_shift") cfg.time_shift = num();
        else if (key == "n") cfg.n = static_cast<std::size_t>(count());
        else if (key == "poly_order") cfg.poly_order = static_cast<int>(count());
        else if (key == "reps") cfg.reps = static_cast<std::size_t>(count());
        else if (key == "seed") {
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": seed is not an unsigned integer");
            }
            cfg.seed = v;
        } else if (key == "ci_levels") {
            cfg.ci_levels.clear();
            std::size_t start = 0;
            while (start <= value.size()) {
                const auto comma = value.find(',', start);
                const auto item = trim(value.substr(start, comma == value.npos ? value.npos : comma - start));
                cfg.ci_levels.push_back(parse_double(item, line_no, key));
                if (comma == value.npos) break;
                start = comma + 1;
            }
        } else {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
        }
    };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": malformed section header");
            }
            std::string name(trim(line.substr(1, line.size() - 2)));
            if (!names.insert(name).second) {
                throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": duplicate section '" + name + "'");
            }
            sections.push_back({name, defaults});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == line.npos) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        apply(sections.empty() ? defaults : sections.back().config, key, value);
    }
    if (sections.empty()) sections.push_back({"study", defaults});
    for (const auto& s : sections) {
        try {
            s.config.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::Validation, "section '" + s.name + "': " + e.what());
        }
    }
    return sections;
}

}  // namespace crcpanel
