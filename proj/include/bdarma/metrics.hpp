#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bdarma {

using Interval = std::pair<double, double>;

/// Aggregates over the coefficients of one block (e.g. "A1").
struct BlockSummary {
    std::size_t count = 0;
    double mean_bias = 0.0;
    double mean_rmse = 0.0;
    double mean_length = 0.0;
    double coverage = 0.0;
};

struct RecoverySummary {
    std::vector<std::string> names;
    std::vector<double> bias;
    std::vector<double> rmse;
    std::vector<double> interval_length;
    std::vector<double> coverage;
    std::map<std::string, BlockSummary> blocks;
};

/// estimates and intervals are S x C (replicate-major), truth has C entries.
/// Bias_j = mean_s(est - truth), RMSE_j = sqrt(mean_s((est - truth)^2)), coverage_j the
/// fraction of replicates whose interval contains truth. Blocks are name prefixes
/// before '[' ("A1[2,3]" -> "A1"). Throws ValidationError on shape mismatch.
RecoverySummary recovery_metrics(const std::vector<std::vector<double>>& estimates,
                                 const std::vector<std::vector<Interval>>& intervals,
                                 const std::vector<double>& truth,
                                 const std::vector<std::string>& names);

/// Block name of a parameter name.
std::string block_of(const std::string& name);

/// A forecast array of S replicates x H steps x J components.
using ForecastArray = std::vector<std::vector<std::vector<double>>>;

/// sqrt of the grand mean of squared errors over replicates, steps and components.
double forecast_rmse(const ForecastArray& actuals, const ForecastArray& forecasts);
double forecast_mae(const ForecastArray& actuals, const ForecastArray& forecasts);

struct ForecastSummary {
    double m_rmse = 0.0;   ///< mean over replicates of the per-replicate RMSE
    double sd_rmse = 0.0;  ///< sample sd of the per-replicate RMSE
    double mae = 0.0;      ///< grand mean absolute error
    double rmse = 0.0;     ///< pooled RMSE
    std::size_t replicates = 0;
};

ForecastSummary forecast_summary(const ForecastArray& actuals, const ForecastArray& forecasts);

/// Cells keyed by (study, prior) for one metric.
using MetricCells = std::map<std::pair<std::string, std::string>, double>;

struct RatioColumn {
    std::string label;  ///< e.g. "S2/S1" or a study name for within-study columns
    std::map<std::string, std::optional<double>> by_prior;  ///< empty optional = hole
};

struct RatioReport {
    std::vector<std::string> priors;
    std::vector<RatioColumn> cross;   ///< numerator study over denominator study
    std::vector<RatioColumn> within;  ///< each prior over the best (smallest) prior in a study
};

/// `pairs` lists (numerator, denominator) studies. Missing cells leave holes.
RatioReport ratio_tables(const MetricCells& cells, const std::vector<std::string>& priors,
                         const std::vector<std::string>& studies,
                         const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace bdarma
