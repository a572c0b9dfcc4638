#include "bdarma/metrics.hpp"

#include "bdarma/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bdarma {

std::string block_of(const std::string& name) {
    const auto pos = name.find('[');
    return pos == std::string::npos ? name : name.substr(0, pos);
}

RecoverySummary recovery_metrics(const std::vector<std::vector<double>>& estimates,
                                 const std::vector<std::vector<Interval>>& intervals,
                                 const std::vector<double>& truth,
                                 const std::vector<std::string>& names) {
    const std::size_t S = estimates.size();
    const std::size_t C = truth.size();
    if (S == 0) throw ValidationError("recovery metrics need at least one replicate");
    if (intervals.size() != S || names.size() != C) throw ValidationError("recovery inputs disagree in shape");
    for (std::size_t s = 0; s < S; ++s) {
        if (estimates[s].size() != C || intervals[s].size() != C) {
            throw ValidationError("recovery inputs disagree in shape");
        }
    }
    RecoverySummary out;
    out.names = names;
    out.bias.assign(C, 0.0);
    out.rmse.assign(C, 0.0);
    out.interval_length.assign(C, 0.0);
    out.coverage.assign(C, 0.0);
    const double n = static_cast<double>(S);
    for (std::size_t j = 0; j < C; ++j) {
        double sum = 0.0, sq = 0.0, len = 0.0, hit = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double e = estimates[s][j] - truth[j];
            sum += e;
            sq += e * e;
            const auto [lo, hi] = intervals[s][j];
            len += hi - lo;
            hit += (lo <= truth[j] && truth[j] <= hi) ? 1.0 : 0.0;
        }
        out.bias[j] = sum / n;
        out.rmse[j] = std::sqrt(sq / n);
        out.interval_length[j] = len / n;
        out.coverage[j] = hit / n;
    }
    for (std::size_t j = 0; j < C; ++j) {
        auto& b = out.blocks[block_of(names[j])];
        ++b.count;
        b.mean_bias += out.bias[j];
        b.mean_rmse += out.rmse[j];
        b.mean_length += out.interval_length[j];
        b.coverage += out.coverage[j];
    }
    for (auto& [_, b] : out.blocks) {
        const double k = static_cast<double>(b.count);
        b.mean_bias /= k;
        b.mean_rmse /= k;
        b.mean_length /= k;
        b.coverage /= k;
    }
    return out;
}

namespace {

void check_forecast_shapes(const ForecastArray& a, const ForecastArray& f) {
    if (a.size() != f.size() || a.empty()) throw ValidationError("forecast arrays disagree in shape");
    for (std::size_t s = 0; s < a.size(); ++s) {
        if (a[s].size() != f[s].size()) throw ValidationError("forecast arrays disagree in shape");
        for (std::size_t h = 0; h < a[s].size(); ++h) {
            if (a[s][h].size() != f[s][h].size()) throw ValidationError("forecast arrays disagree in shape");
        }
    }
}

struct ErrorSums {
    double sq = 0.0;
    double abs = 0.0;
    double n = 0.0;
};

ErrorSums error_sums(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& f) {
    ErrorSums e;
    for (std::size_t h = 0; h < a.size(); ++h) {
        for (std::size_t j = 0; j < a[h].size(); ++j) {
            const double d = f[h][j] - a[h][j];
            e.sq += d * d;
            e.abs += std::abs(d);
            e.n += 1.0;
        }
    }
    return e;
}

}  // namespace

double forecast_rmse(const ForecastArray& actuals, const ForecastArray& forecasts) {
    check_forecast_shapes(actuals, forecasts);
    ErrorSums total;
    for (std::size_t s = 0; s < actuals.size(); ++s) {
        const auto e = error_sums(actuals[s], forecasts[s]);
        total.sq += e.sq;
        total.n += e.n;
    }
    return std::sqrt(total.sq / total.n);
}

double forecast_mae(const ForecastArray& actuals, const ForecastArray& forecasts) {
    check_forecast_shapes(actuals, forecasts);
    ErrorSums total;
    for (std::size_t s = 0; s < actuals.size(); ++s) {
        const auto e = error_sums(actuals[s], forecasts[s]);
        total.abs += e.abs;
        total.n += e.n;
    }
    return total.abs / total.n;
}

ForecastSummary forecast_summary(const ForecastArray& actuals, const ForecastArray& forecasts) {
    check_forecast_shapes(actuals, forecasts);
    ForecastSummary out;
    out.replicates = actuals.size();
    std::vector<double> per;
    for (std::size_t s = 0; s < actuals.size(); ++s) {
        const auto e = error_sums(actuals[s], forecasts[s]);
        per.push_back(std::sqrt(e.sq / e.n));
    }
    double mean = 0.0;
    for (double v : per) mean += v;
    mean /= static_cast<double>(per.size());
    double var = 0.0;
    for (double v : per) var += (v - mean) * (v - mean);
    out.m_rmse = mean;
    out.sd_rmse = per.size() > 1 ? std::sqrt(var / static_cast<double>(per.size() - 1)) : 0.0;
    out.mae = forecast_mae(actuals, forecasts);
    out.rmse = forecast_rmse(actuals, forecasts);
    return out;
}

RatioReport ratio_tables(const MetricCells& cells, const std::vector<std::string>& priors,
                         const std::vector<std::string>& studies,
                         const std::vector<std::pair<std::string, std::string>>& pairs) {
    RatioReport out;
    out.priors = priors;
    auto find = [&](const std::string& study, const std::string& prior) -> std::optional<double> {
        const auto it = cells.find({study, prior});
        if (it == cells.end() || !std::isfinite(it->second)) return std::nullopt;
        return it->second;
    };
    for (const auto& [num, den] : pairs) {
        RatioColumn col;
        col.label = num + "/" + den;
        for (const auto& p : priors) {
            const auto a = find(num, p);
            const auto b = find(den, p);
            col.by_prior[p] = (a && b && *b != 0.0) ? std::optional<double>(*a / *b) : std::nullopt;
        }
        out.cross.push_back(std::move(col));
    }
    for (const auto& study : studies) {
        RatioColumn col;
        col.label = study;
        std::optional<double> best;
        for (const auto& p : priors) {
            const auto v = find(study, p);
            if (v && (!best || *v < *best)) best = v;
        }
        for (const auto& p : priors) {
            const auto v = find(study, p);
            col.by_prior[p] = (v && best && *best != 0.0) ? std::optional<double>(*v / *best) : std::nullopt;
        }
        out.within.push_back(std::move(col));
    }
    return out;
}

}  // namespace bdarma
