#include "bdarma/ingest.hpp"

#include "bdarma/errors.hpp"
#include "bdarma/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace bdarma {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    out.push_back(cell);
    for (auto& c : out) {
        const auto b = c.find_first_not_of(" \t");
        const auto e = c.find_last_not_of(" \t");
        c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
    }
    return out;
}

double parse_value(const std::string& text) {
    if (text.empty() || text == "NA" || text == "NaN" || text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ValidationError("not a number: '" + text + "'");
    }
    if (used != text.size()) throw ValidationError("not a number: '" + text + "'");
    return v;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool is_weekday(const Date& d) {
    const std::chrono::weekday wd{std::chrono::sys_days{d}};
    return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

}  // namespace

Date parse_date(const std::string& text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        throw ValidationError("bad date '" + text + "' (expected YYYY-MM-DD)");
    }
    const Date out{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!out.ok()) throw ValidationError("bad date '" + text + "'");
    return out;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["ok"] = ok();
    j["rows"] = rows;
    j["sectors"] = sectors;
    j["issues"] = nlohmann::json::array();
    for (const auto& i : issues) j["issues"].push_back({{"date", i.date}, {"sector", i.sector}, {"message", i.message}});
    return j.dump(2);
}

SectorPanel read_long_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV");
    const auto header = split_csv_line(line);
    if (header.size() != 3 || lower(header[0]) != "date" || lower(header[1]) != "sector" ||
        lower(header[2]) != "value") {
        throw ValidationError("long CSV header must be date,sector,value");
    }
    std::map<std::string, std::size_t> sector_index;
    std::vector<std::string> sectors;
    std::map<std::string, std::map<std::size_t, double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 3) throw ValidationError("line " + std::to_string(lineno) + ": expected 3 fields");
        parse_date(cells[0]);
        auto [it, inserted] = sector_index.emplace(cells[1], sectors.size());
        if (inserted) sectors.push_back(cells[1]);
        auto& row = rows[cells[0]];
        if (row.count(it->second)) {
            throw ValidationError("duplicate entry for " + cells[0] + " / " + cells[1]);
        }
        row[it->second] = parse_value(cells[2]);
    }
    SectorPanel panel;
    panel.sectors = sectors;
    for (const auto& [date, cells] : rows) {  // ISO dates sort chronologically
        panel.dates.push_back(parse_date(date));
        std::vector<double> v(sectors.size(), std::numeric_limits<double>::quiet_NaN());
        for (const auto& [k, value] : cells) v[k] = value;
        panel.values.push_back(std::move(v));
    }
    return panel;
}

SectorPanel read_wide_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || lower(header[0]) != "date") {
        throw ValidationError("wide CSV header must be date followed by at least two sectors");
    }
    SectorPanel panel;
    panel.sectors.assign(header.begin() + 1, header.end());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError("line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(header.size()) + " fields");
        }
        panel.dates.push_back(parse_date(cells[0]));
        std::vector<double> v;
        for (std::size_t k = 1; k < cells.size(); ++k) v.push_back(parse_value(cells[k]));
        panel.values.push_back(std::move(v));
    }
    return panel;
}

SectorPanel read_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string first;
    std::getline(in, first);
    const auto header = split_csv_line(first);
    in.clear();
    in.seekg(0);
    if (header.size() == 3 && lower(header[1]) == "sector") return read_long_csv(in);
    return read_wide_csv(in);
}

ValidationReport validate_panel(const SectorPanel& panel) {
    ValidationReport r;
    r.rows = panel.dates.size();
    r.sectors = panel.sectors.size();
    if (panel.sectors.size() < 2) r.issues.push_back({"", "", "need at least two sectors"});
    if (panel.dates.empty()) r.issues.push_back({"", "", "no rows"});
    if (panel.values.size() != panel.dates.size()) r.issues.push_back({"", "", "row count mismatch"});
    for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        const auto date = format_date(panel.dates[t]);
        if (!is_weekday(panel.dates[t])) r.issues.push_back({date, "", "date falls on a weekend"});
        if (t > 0 && !(std::chrono::sys_days{panel.dates[t - 1]} < std::chrono::sys_days{panel.dates[t]})) {
            r.issues.push_back({date, "", "dates are not strictly increasing"});
        }
        if (t >= panel.values.size()) continue;
        for (std::size_t k = 0; k < panel.sectors.size(); ++k) {
            const double v = k < panel.values[t].size() ? panel.values[t][k] : std::nan("");
            if (std::isnan(v)) {
                r.issues.push_back({date, panel.sectors[k], "missing value"});
            } else if (!std::isfinite(v) || v <= 0.0) {
                r.issues.push_back({date, panel.sectors[k], "value must be positive and finite"});
            }
        }
    }
    return r;
}

std::vector<Composition> to_shares(const SectorPanel& panel) {
    std::vector<Composition> out;
    out.reserve(panel.values.size());
    for (std::size_t t = 0; t < panel.values.size(); ++t) {
        const auto& row = panel.values[t];
        double total = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (!std::isfinite(row[k]) || row[k] <= 0.0) {
                const std::string date = t < panel.dates.size() ? format_date(panel.dates[t]) : "?";
                throw ValidationError("nonpositive or missing value on " + date + " for sector " +
                                      (k < panel.sectors.size() ? panel.sectors[k] : "?"));
            }
            total += row[k];
        }
        std::vector<double> shares(row.size());
        for (std::size_t k = 0; k < row.size(); ++k) shares[k] = row[k] / total;
        out.push_back(Composition::normalized(std::move(shares)));
    }
    return out;
}

Design fourier_design(const std::vector<Date>& dates, int dim, FourierTerms terms) {
    if (dates.empty()) throw ValidationError("fourier design needs at least one date");
    return Design::fourier(dim, terms, 0);
}

Split<Composition> split_rows(const std::vector<Composition>& series, std::size_t train_rows,
                              std::size_t test_length) {
    if (train_rows == 0 || train_rows + test_length > series.size()) {
        throw ValidationError("not enough rows: need " + std::to_string(train_rows + test_length) +
                              ", have " + std::to_string(series.size()));
    }
    Split<Composition> out;
    out.train.assign(series.begin(), series.begin() + static_cast<long>(train_rows));
    out.test.assign(series.begin() + static_cast<long>(train_rows),
                    series.begin() + static_cast<long>(train_rows + test_length));
    return out;
}

Split<Composition> split(const std::vector<Composition>& series, const std::vector<Date>& dates,
                         const Date& train_end, std::size_t test_length) {
    if (dates.size() != series.size()) throw ValidationError("dates and series differ in length");
    const auto end = std::chrono::sys_days{train_end};
    std::size_t train_rows = 0;
    while (train_rows < dates.size() && std::chrono::sys_days{dates[train_rows]} <= end) ++train_rows;
    return split_rows(series, train_rows, test_length);
}

SectorPanel synthetic_panel(const SyntheticPanelConfig& cfg) {
    if (cfg.sectors < 2 || cfg.days < 10) throw ValidationError("synthetic panel is too small");
    static const char* kNames[] = {"Technology", "Financial Services", "Healthcare", "Consumer Cyclical",
                                   "Communication Services", "Industrials", "Consumer Defensive",
                                   "Energy", "Real Estate", "Utilities", "Basic Materials"};
    Rng rng(cfg.seed);
    const std::size_t K = cfg.sectors;
    const std::size_t d = K - 1;

    SectorPanel panel;
    for (std::size_t k = 0; k < K; ++k) {
        panel.sectors.push_back(k < std::size(kNames) ? kNames[k] : "Sector " + std::to_string(k + 1));
    }
    std::chrono::sys_days day{cfg.start};
    while (panel.dates.size() < cfg.days) {
        const Date date{day};
        if (is_weekday(date)) panel.dates.push_back(date);
        day += std::chrono::days{1};
    }

    // Level shares decay geometrically; the last sector is the ALR reference.
    std::vector<double> level(K);
    for (std::size_t k = 0; k < K; ++k) level[k] = std::pow(0.82, static_cast<double>(k));
    std::vector<double> base(d);
    for (std::size_t k = 0; k < d; ++k) base[k] = std::log(level[k] / level[K - 1]);
    std::vector<double> weekly(d), annual_sin(d), annual_cos(d);
    for (std::size_t k = 0; k < d; ++k) {
        weekly[k] = 0.04 * rng.normal();
        annual_sin[k] = 0.06 * rng.normal();
        annual_cos[k] = 0.06 * rng.normal();
    }

    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> mean(d), eta(d), prev_dev(d, 0.0), alpha(K);
    for (std::size_t t = 0; t < cfg.days; ++t) {
        const double td = static_cast<double>(t);
        for (std::size_t k = 0; k < d; ++k) {
            mean[k] = base[k] + weekly[k] * std::sin(two_pi * td / 5.0) +
                      annual_sin[k] * std::sin(two_pi * td / 252.0) +
                      annual_cos[k] * std::cos(two_pi * td / 252.0);
            eta[k] = mean[k] + cfg.persistence * prev_dev[k];
        }
        const Composition mu = alr_inv(eta);
        for (std::size_t k = 0; k < K; ++k) alpha[k] = cfg.precision * mu[k];
        const Composition y = dirichlet_sample(alpha, rng);
        const AlrVector a = alr(y);
        for (std::size_t k = 0; k < d; ++k) prev_dev[k] = a[k] - mean[k];
        const double total = 3.0e11 * std::exp(0.15 * rng.normal());
        std::vector<double> v(K);
        for (std::size_t k = 0; k < K; ++k) v[k] = total * y[k];
        panel.values.push_back(std::move(v));
    }
    return panel;
}

void write_panel_long_csv(const SectorPanel& panel, std::ostream& out) {
    out << "date,sector,value\n";
    out << std::setprecision(17);
    for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        const auto date = format_date(panel.dates[t]);
        for (std::size_t k = 0; k < panel.sectors.size(); ++k) {
            out << date << ',' << panel.sectors[k] << ',' << panel.values[t][k] << '\n';
        }
    }
}

}  // namespace bdarma
