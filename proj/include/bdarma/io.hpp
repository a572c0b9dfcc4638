#pragma once

#include "bdarma/forecaster.hpp"
#include "bdarma/sampler.hpp"
#include "bdarma/simplex.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bdarma {

/// CSV with header t,y_1..y_J; t counts from 1.
void write_series_csv(const std::vector<Composition>& series, std::ostream& out);
/// Reads write_series_csv output (any first column, then J shares per row).
std::vector<Composition> read_series_csv(std::istream& in);
std::vector<Composition> read_series_csv(const std::string& path);

/// Columnar draws: chain,iteration,<parameter names...>.
void write_draws_csv(const PosteriorDraws& draws, std::ostream& out);
PosteriorDraws read_draws_csv(std::istream& in);
PosteriorDraws read_draws_csv(const std::string& path);

/// Per-parameter R-hat/ESS plus per-chain sampler statistics as JSON text.
std::string diagnostics_json(const PosteriorDraws& draws);

/// h,component,point,q05,q50,q95 with h counting from 1.
void write_forecast_csv(const ForecastResult& f, const std::vector<std::string>& components,
                        std::ostream& out);

struct PlotSeries {
    std::string label;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

/// Minimal line chart; an optional band is drawn as a shaded polygon.
std::string line_chart_svg(const std::string& title, const std::vector<PlotSeries>& lines,
                           const std::optional<PlotSeries>& band_lo = std::nullopt,
                           const std::optional<PlotSeries>& band_hi = std::nullopt);

/// One chart per component: recent history, actuals (when given), point forecast and 90% band.
/// Returns the file names written into `dir`.
std::vector<std::string> write_forecast_svgs(const std::string& dir, const std::string& prefix,
                                             const ForecastResult& f,
                                             const std::vector<std::string>& components,
                                             const std::vector<Composition>& history,
                                             const std::vector<Composition>& actuals = {});

/// File-name-safe version of a label.
std::string slug(const std::string& label);

/// Writes text atomically enough for batch use (truncate + write); throws Error on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace bdarma
