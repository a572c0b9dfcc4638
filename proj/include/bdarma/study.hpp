#pragma once

#include "bdarma/design.hpp"
#include "bdarma/forecaster.hpp"
#include "bdarma/ingest.hpp"
#include "bdarma/metrics.hpp"
#include "bdarma/priors.hpp"
#include "bdarma/sampler.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bdarma {

/// Fitted orders for one simulation scenario.
struct Scenario {
    std::string name;
    int P = 0;
    int Q = 0;
};

/// correct (2,1), overfit (4,2), underfit (1,0).
const std::vector<Scenario>& standard_scenarios();
Scenario scenario_by_name(const std::string& name);

/// Names of the five prior families in report order.
const std::vector<std::string>& standard_priors();

/// Simulation study settings.
///
/// JSON form (every key optional; missing keys keep the profile's value):
///   {"dgp": "main", "replicates": 10, "T": 100, "train": 80, "horizon": 20,
///    "scenarios": ["correct", "overfit", "underfit"],
///    "priors": ["informative", "horseshoe", "laplace", "spike-slab", "hierarchical"],
///    "sampler": {"chains": 2, "warmup": 300, "sampling": 300, "target_accept": 0.85,
///                "max_treedepth": 11, "init_range": 0.25},
///    "seed": 20240601, "jobs": 1, "max_failure_rate": 0.2, "forecast_thin": 1}
/// A scenario may also be written {"name": "overfit", "P": 4, "Q": 2}; the orders
/// must match the named scenario.
struct StudyConfig {
    std::string profile = "desk";
    std::string dgp = "main";
    std::vector<Scenario> scenarios = standard_scenarios();
    std::vector<std::string> priors = standard_priors();
    int replicates = 10;
    int T = 100;
    int train = 80;
    int horizon = 20;
    SamplerConfig sampler;
    std::uint64_t seed = 20240601;
    /// Concurrent fits; 0 means hardware concurrency.
    int jobs = 1;
    double max_failure_rate = 0.2;
    std::size_t forecast_thin = 1;

    /// 10 replicates, 2 chains x (300 + 300).
    static StudyConfig desk();
    /// 50 replicates, 4 chains x (500 + 750).
    static StudyConfig paper();
    static StudyConfig for_profile(const std::string& name);

    /// Applies the keys present in `json_text` on top of `base`.
    static StudyConfig from_json(const std::string& json_text, const StudyConfig& base);
    std::string to_json() const;
    void validate() const;
};

/// Outcome of one scenario x prior fit on one replicate.
struct FitRecord {
    int replicate = 0;
    std::string scenario;
    std::string prior;
    bool ok = false;
    std::string message;
    std::uint64_t data_hash = 0;
    int divergences = 0;
    double divergence_rate = 0.0;
    double max_rhat = 0.0;
    double min_ess = 0.0;
    double forecast_rmse = 0.0;
};

struct CellReport {
    std::string scenario;
    std::string prior;
    int used = 0;
    int failed = 0;
    RecoverySummary recovery;
    ForecastSummary forecast;
    double mean_divergence_rate = 0.0;
    double max_rhat = 0.0;
};

struct StudyReport {
    StudyConfig config;
    std::vector<std::uint64_t> data_hashes;  ///< per replicate; 0 when simulation failed
    int failed_simulations = 0;
    std::vector<FitRecord> fits;
    std::vector<CellReport> cells;

    const CellReport& cell(const std::string& scenario, const std::string& prior) const;
    /// Cross-scenario (overfit/correct, underfit/correct) and within-scenario ratio tables.
    RatioReport forecast_ratios() const;
};

/// FNV-1a over the bit patterns of every share.
std::uint64_t series_hash(const std::vector<Composition>& series);

/// Simulates each replicate once and fits every scenario x prior to the same data.
/// Throws StudyAborted when any cell loses more than max_failure_rate of its replicates.
StudyReport run_study(const StudyConfig& cfg, const ProgressCallback& progress = {},
                      const ProgressCallback& sampler_progress = {});

/// Writes recovery_blocks.csv, recovery_parameters.csv, forecast.csv, ratios.csv,
/// tables.txt, fits.json and results.json into `dir`. Output bytes depend only on the report.
void write_study_report(const StudyReport& report, const std::string& dir);

/// Aligned text tables for a ratio report.
std::string format_ratio_tables(const RatioReport& r);

/// Reads {"metric": name, "cells": [{"study", "prior", "value"}], "pairs": [["S2", "S1"]]}.
struct MetricTable {
    std::string metric;
    MetricCells cells;
    std::vector<std::string> studies;
    std::vector<std::string> priors;
    std::vector<std::pair<std::string, std::string>> pairs;
};
MetricTable read_metric_table(const std::string& json_text);

/// Sector-share application settings.
struct ApplicationConfig {
    std::string profile = "desk";
    int P = 2;
    int Q = 0;
    std::vector<std::string> priors = standard_priors();
    SamplerConfig sampler;
    std::size_t test_length = 126;
    /// Last training date; by default all rows but the test window train.
    std::optional<std::string> train_end;
    FourierTerms terms;
    std::uint64_t seed = 20240601;
    /// Concurrent prior fits; 0 means hardware concurrency.
    int jobs = 1;
    std::size_t forecast_thin = 1;

    /// B-DARMA(2,0), 2 chains x (300 + 300).
    static ApplicationConfig desk();
    /// B-DARMA(10,0), 4 chains x (500 + 750).
    static ApplicationConfig paper();
    static ApplicationConfig for_profile(const std::string& name);
    static ApplicationConfig from_json(const std::string& json_text, const ApplicationConfig& base);
    std::string to_json() const;
    void validate() const;
};

struct PriorForecast {
    std::string prior;
    bool ok = false;
    std::string message;
    double rmse = 0.0;
    double mae = 0.0;
    std::vector<double> sector_rmse;
    std::vector<double> sector_mae;
    int divergences = 0;
    double divergence_rate = 0.0;
    double max_rhat = 0.0;
    ForecastResult forecast;
};

struct ApplicationReport {
    ApplicationConfig config;
    std::vector<std::string> sectors;
    std::vector<std::string> test_dates;
    std::size_t parameters = 0;
    std::vector<Composition> train;
    std::vector<Composition> test;
    std::vector<PriorForecast> priors;
};

/// Fits B-DARMA(P, Q) with the seasonal design under each prior and scores the
/// test-window forecast. Throws ValidationError when the panel fails validation
/// or the training window is too short for P lags.
ApplicationReport run_application(const SectorPanel& panel, const ApplicationConfig& cfg,
                                   const ProgressCallback& progress = {},
                                   const ProgressCallback& sampler_progress = {});

/// errors.csv (prior, rmse, mae), sector_errors.csv, forecast_<prior>.csv, tables.txt,
/// application.json and one SVG per prior and sector.
void write_application_report(const ApplicationReport& report, const std::string& dir);

}  // namespace bdarma
