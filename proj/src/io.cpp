#include "bdarma/io.hpp"

#include "bdarma/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace bdarma {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, std::size_t lineno) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("line " + std::to_string(lineno) + ": not a number '" + s + "'");
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return in;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream ss;
    ss << std::setprecision(precision) << v;
    return ss.str();
}

}  // namespace

void write_series_csv(const std::vector<Composition>& series, std::ostream& out) {
    if (series.empty()) throw ValidationError("empty series");
    const std::size_t J = series.front().size();
    out << "t";
    for (std::size_t j = 0; j < J; ++j) out << ",y_" << j + 1;
    out << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < series.size(); ++t) {
        out << t + 1;
        for (std::size_t j = 0; j < J; ++j) out << ',' << series[t][j];
        out << '\n';
    }
}

std::vector<Composition> read_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty series CSV");
    const std::size_t cols = split_line(line).size();
    if (cols < 3) throw ValidationError("series CSV needs an index column and at least two shares");
    std::vector<Composition> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_line(line);
        if (cells.size() != cols) throw ValidationError("line " + std::to_string(lineno) + ": wrong field count");
        std::vector<double> v;
        for (std::size_t j = 1; j < cells.size(); ++j) v.push_back(to_double(cells[j], lineno));
        double s = 0.0;
        for (double x : v) {
            if (!(x >= 0.0) || !std::isfinite(x)) {
                throw ValidationError("line " + std::to_string(lineno) + ": shares must be non-negative");
            }
            s += x;
        }
        if (std::abs(s - 1.0) > 1e-6) throw ValidationError("line " + std::to_string(lineno) + ": shares do not sum to 1");
        out.push_back(Composition::normalized(std::move(v)));
    }
    if (out.empty()) throw ValidationError("series CSV has no rows");
    return out;
}

std::vector<Composition> read_series_csv(const std::string& path) {
    auto in = open_input(path);
    return read_series_csv(in);
}

void write_draws_csv(const PosteriorDraws& draws, std::ostream& out) {
    out << "chain,iteration";
    for (const auto& n : draws.names) out << ",\"" << n << '"';
    out << '\n' << std::setprecision(17);
    for (std::size_t c = 0; c < draws.chains; ++c) {
        for (std::size_t i = 0; i < draws.iterations; ++i) {
            out << c + 1 << ',' << i + 1;
            for (double v : draws.draw(c, i)) out << ',' << v;
            out << '\n';
        }
    }
}

PosteriorDraws read_draws_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty draws CSV");
    // names may contain commas inside quotes
    std::vector<std::string> header;
    {
        std::string cell;
        bool quoted = false;
        for (char ch : line) {
            if (ch == '"') quoted = !quoted;
            else if (ch == ',' && !quoted) {
                header.push_back(cell);
                cell.clear();
            } else if (ch != '\r') cell.push_back(ch);
        }
        header.push_back(cell);
    }
    if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration") {
        throw ValidationError("draws CSV must start with chain,iteration");
    }
    PosteriorDraws d;
    d.names.assign(header.begin() + 2, header.end());
    d.dim = d.names.size();
    std::vector<std::size_t> per_chain;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) throw ValidationError("line " + std::to_string(lineno) + ": wrong field count");
        const auto chain = static_cast<std::size_t>(to_double(cells[0], lineno));
        if (chain < 1) throw ValidationError("chain index must start at 1");
        if (per_chain.size() < chain) {
            if (chain != per_chain.size() + 1) throw ValidationError("draws must be grouped by chain");
            per_chain.push_back(0);
        }
        ++per_chain[chain - 1];
        for (std::size_t k = 2; k < cells.size(); ++k) d.values.push_back(to_double(cells[k], lineno));
    }
    if (per_chain.empty()) throw ValidationError("draws CSV has no rows");
    for (auto n : per_chain) {
        if (n != per_chain.front()) throw ValidationError("chains differ in length");
    }
    d.chains = per_chain.size();
    d.iterations = per_chain.front();
    d.chain_info.resize(d.chains);
    if (d.chains >= 2 && d.iterations >= 4) {
        const auto conv = diagnostics(d);
        d.rhat = conv.rhat;
        d.ess = conv.ess;
    }
    return d;
}

PosteriorDraws read_draws_csv(const std::string& path) {
    auto in = open_input(path);
    return read_draws_csv(in);
}

std::string diagnostics_json(const PosteriorDraws& draws) {
    using nlohmann::json;
    auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["chains"] = draws.chains;
    j["iterations"] = draws.iterations;
    j["total_divergences"] = draws.total_divergences();
    j["divergence_rate"] = draws.divergence_rate();
    j["divergence_flagged"] = draws.divergence_flagged();
    double max_rhat = 0.0, min_ess = std::numeric_limits<double>::infinity();
    for (double r : draws.rhat) {
        if (std::isfinite(r)) max_rhat = std::max(max_rhat, r);
    }
    for (double e : draws.ess) {
        if (std::isfinite(e)) min_ess = std::min(min_ess, e);
    }
    j["max_rhat"] = draws.rhat.empty() ? json(nullptr) : num(max_rhat);
    j["min_ess"] = draws.ess.empty() ? json(nullptr) : num(min_ess);
    j["chain"] = json::array();
    for (const auto& ci : draws.chain_info) {
        j["chain"].push_back({{"divergences", ci.divergences},
                              {"step_size", ci.step_size},
                              {"mean_accept", ci.mean_accept},
                              {"mean_treedepth", ci.mean_treedepth},
                              {"max_treedepth_hits", ci.max_treedepth_hits},
                              {"gradient_evaluations", ci.gradient_evaluations}});
    }
    j["parameters"] = json::array();
    for (std::size_t k = 0; k < draws.dim; ++k) {
        j["parameters"].push_back({{"name", draws.names[k]},
                                   {"rhat", k < draws.rhat.size() ? num(draws.rhat[k]) : json(nullptr)},
                                   {"ess", k < draws.ess.size() ? num(draws.ess[k]) : json(nullptr)}});
    }
    return j.dump(2);
}

void write_forecast_csv(const ForecastResult& f, const std::vector<std::string>& components,
                        std::ostream& out) {
    if (components.size() != f.J) throw ValidationError("component names do not match the forecast");
    out << "h,component,point,q05,q50,q95\n" << std::setprecision(12);
    for (std::size_t h = 0; h < f.horizon; ++h) {
        for (std::size_t j = 0; j < f.J; ++j) {
            out << h + 1 << ',' << components[j] << ',' << f.point[h][j] << ',' << f.q05[h][j] << ','
                << f.q50[h][j] << ',' << f.q95[h][j] << '\n';
        }
    }
}

std::string line_chart_svg(const std::string& title, const std::vector<PlotSeries>& lines,
                           const std::optional<PlotSeries>& band_lo,
                           const std::optional<PlotSeries>& band_hi) {
    const double W = 720, Hh = 360, L = 60, R = 20, Tm = 40, B = 40;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto extend = [&](const PlotSeries& s) {
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    };
    for (const auto& s : lines) extend(s);
    if (band_lo) extend(*band_lo);
    if (band_hi) extend(*band_hi);
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1e-3;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return Hh - B - (y - y0) / (y1 - y0) * (Hh - Tm - B); };

    std::ostringstream s;
    s << std::fixed << std::setprecision(2);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << L << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << Hh - B << "\" x2=\"" << W - R << "\" y2=\"" << Hh - B
      << "\" stroke=\"#444\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << Hh - B
      << "\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = y0 + (y1 - y0) * i / 4.0;
        s << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << fmt(v, 3)
          << "</text>\n";
    }
    if (band_lo && band_hi) {
        s << "<polygon fill=\"" << band_hi->color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < band_hi->x.size(); ++i) s << px(band_hi->x[i]) << ',' << py(band_hi->y[i]) << ' ';
        for (std::size_t i = band_lo->x.size(); i-- > 0;) s << px(band_lo->x[i]) << ',' << py(band_lo->y[i]) << ' ';
        s << "\"/>\n";
    }
    double legend_y = Tm + 4;
    for (const auto& line : lines) {
        s << "<polyline fill=\"none\" stroke=\"" << line.color << "\" stroke-width=\"1.5\""
          << (line.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
        for (std::size_t i = 0; i < line.x.size(); ++i) s << px(line.x[i]) << ',' << py(line.y[i]) << ' ';
        s << "\"/>\n";
        s << "<text x=\"" << W - R - 4 << "\" y=\"" << legend_y << "\" text-anchor=\"end\" fill=\""
          << line.color << "\">" << line.label << "</text>\n";
        legend_y += 14;
    }
    s << "</svg>\n";
    return s.str();
}

std::string slug(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!out.empty() && out.back() != '_') out.push_back('_');
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out.empty() ? "x" : out;
}

std::vector<std::string> write_forecast_svgs(const std::string& dir, const std::string& prefix,
                                             const ForecastResult& f,
                                             const std::vector<std::string>& components,
                                             const std::vector<Composition>& history,
                                             const std::vector<Composition>& actuals) {
    std::vector<std::string> files;
    const std::size_t T = history.size();
    const std::size_t tail = std::min<std::size_t>(T, std::max<std::size_t>(f.horizon, 40));
    for (std::size_t j = 0; j < f.J; ++j) {
        PlotSeries hist{"history", "#555555", {}, {}};
        for (std::size_t t = T - tail; t < T; ++t) {
            hist.x.push_back(static_cast<double>(t + 1));
            hist.y.push_back(history[t][j]);
        }
        PlotSeries point{"forecast", "#1b9e9e", {}, {}};
        PlotSeries lo{"q05", "#1b9e9e", {}, {}};
        PlotSeries hi{"q95", "#1b9e9e", {}, {}};
        for (std::size_t h = 0; h < f.horizon; ++h) {
            const double x = static_cast<double>(T + h + 1);
            point.x.push_back(x);
            point.y.push_back(f.point[h][j]);
            lo.x.push_back(x);
            lo.y.push_back(f.q05[h][j]);
            hi.x.push_back(x);
            hi.y.push_back(f.q95[h][j]);
        }
        std::vector<PlotSeries> lines{hist};
        if (!actuals.empty()) {
            PlotSeries act{"actual", "#d7301f", {}, {}};
            for (std::size_t h = 0; h < std::min(actuals.size(), f.horizon); ++h) {
                act.x.push_back(static_cast<double>(T + h + 1));
                act.y.push_back(actuals[h][j]);
            }
            lines.push_back(act);
        }
        point.dashed = true;
        lines.push_back(point);
        const std::string name = prefix + slug(components[j]) + ".svg";
        write_text_file((std::filesystem::path(dir) / name).string(), line_chart_svg(components[j], lines, lo, hi));
        files.push_back(name);
    }
    return files;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace bdarma
