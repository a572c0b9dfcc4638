#include "bdarma/study.hpp"

#include "bdarma/errors.hpp"
#include "bdarma/io.hpp"
#include "bdarma/posterior.hpp"
#include "bdarma/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace bdarma {

using nlohmann::json;

namespace {

std::string num(double v, int digits = 10) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Runs fn(i) for i in [0, n) on `jobs` threads (0 = hardware concurrency).
template <class Fn>
void run_pool(std::size_t n, int jobs, Fn fn) {
    std::size_t workers = jobs <= 0 ? std::max(1u, std::thread::hardware_concurrency())
                                    : static_cast<std::size_t>(jobs);
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

json sampler_to_json(const SamplerConfig& s) {
    return {{"chains", s.chains},           {"warmup", s.warmup},
            {"sampling", s.sampling},       {"target_accept", s.target_accept},
            {"max_treedepth", s.max_treedepth}, {"init_range", s.init_range}};
}

void sampler_from_json(const json& j, SamplerConfig& s) {
    if (!j.is_object()) throw ValidationError("'sampler' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "chains") s.chains = value.get<int>();
        else if (key == "warmup") s.warmup = value.get<int>();
        else if (key == "sampling") s.sampling = value.get<int>();
        else if (key == "target_accept") s.target_accept = value.get<double>();
        else if (key == "max_treedepth") s.max_treedepth = value.get<int>();
        else if (key == "init_range") s.init_range = value.get<double>();
        else throw ValidationError("unknown sampler key '" + key + "'");
    }
}

json parse_config_text(const std::string& text) {
    try {
        auto j = json::parse(text);
        if (!j.is_object()) throw ValidationError("config must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
}

void check_prior_names(const std::vector<std::string>& priors) {
    if (priors.empty()) throw ValidationError("at least one prior is required");
    for (const auto& p : priors) prior_family_from_string(p);
}

std::string study_id(const std::string& scenario) { return "sim-" + scenario; }

double max_finite(const std::vector<double>& v, std::size_t n) {
    double m = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < std::min(n, v.size()); ++k) {
        if (std::isfinite(v[k])) m = std::isnan(m) ? v[k] : std::max(m, v[k]);
    }
    return m;
}

double min_finite(const std::vector<double>& v, std::size_t n) {
    double m = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < std::min(n, v.size()); ++k) {
        if (std::isfinite(v[k])) m = std::isnan(m) ? v[k] : std::min(m, v[k]);
    }
    return m;
}

std::string pad(const std::string& s, std::size_t w, bool right = false) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

struct FitOutput {
    FitRecord record;
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<Interval> intervals;
    std::vector<std::vector<double>> forecast;
};

}  // namespace

const std::vector<Scenario>& standard_scenarios() {
    static const std::vector<Scenario> s{{"correct", 2, 1}, {"overfit", 4, 2}, {"underfit", 1, 0}};
    return s;
}

Scenario scenario_by_name(const std::string& name) {
    for (const auto& s : standard_scenarios()) {
        if (s.name == name) return s;
    }
    throw ValidationError("unknown scenario '" + name + "' (expected correct, overfit or underfit)");
}

const std::vector<std::string>& standard_priors() {
    static const std::vector<std::string> p{"informative", "horseshoe", "laplace", "spike-slab",
                                            "hierarchical"};
    return p;
}

std::uint64_t series_hash(const std::vector<Composition>& series) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& y : series) {
        for (double v : y.values()) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof v);
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

// ---------------------------------------------------------------- StudyConfig

StudyConfig StudyConfig::desk() {
    StudyConfig c;
    c.profile = "desk";
    c.replicates = 10;
    c.sampler.chains = 2;
    c.sampler.warmup = 300;
    c.sampler.sampling = 300;
    return c;
}

StudyConfig StudyConfig::paper() {
    StudyConfig c;
    c.profile = "paper";
    c.replicates = 50;
    c.sampler.chains = 4;
    c.sampler.warmup = 500;
    c.sampler.sampling = 750;
    return c;
}

StudyConfig StudyConfig::for_profile(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "paper") return paper();
    throw ValidationError("unknown profile '" + name + "' (expected desk or paper)");
}

StudyConfig StudyConfig::from_json(const std::string& json_text, const StudyConfig& base) {
    const json j = parse_config_text(json_text);
    StudyConfig c = base;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "profile") {
                const auto keep = c;
                c = for_profile(value.get<std::string>());
                // keys other than the profile's own still come from `base`
                c.dgp = keep.dgp;
                c.scenarios = keep.scenarios;
                c.priors = keep.priors;
                c.T = keep.T;
                c.train = keep.train;
                c.horizon = keep.horizon;
                c.seed = keep.seed;
                c.jobs = keep.jobs;
            } else if (key == "dgp") c.dgp = value.get<std::string>();
            else if (key == "replicates") c.replicates = value.get<int>();
            else if (key == "T") c.T = value.get<int>();
            else if (key == "train") c.train = value.get<int>();
            else if (key == "horizon") c.horizon = value.get<int>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "jobs") c.jobs = value.get<int>();
            else if (key == "max_failure_rate") c.max_failure_rate = value.get<double>();
            else if (key == "forecast_thin") c.forecast_thin = value.get<std::size_t>();
            else if (key == "priors") c.priors = value.get<std::vector<std::string>>();
            else if (key == "sampler") sampler_from_json(value, c.sampler);
            else if (key == "scenarios") {
                c.scenarios.clear();
                for (const auto& s : value) {
                    if (s.is_string()) {
                        c.scenarios.push_back(scenario_by_name(s.get<std::string>()));
                    } else {
                        c.scenarios.push_back({s.at("name").get<std::string>(), s.at("P").get<int>(),
                                               s.at("Q").get<int>()});
                    }
                }
            } else {
                throw ValidationError("unknown study config key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad study config value: ") + e.what());
    }
    return c;
}

std::string StudyConfig::to_json() const {
    json j;
    j["profile"] = profile;
    j["dgp"] = dgp;
    j["replicates"] = replicates;
    j["T"] = T;
    j["train"] = train;
    j["horizon"] = horizon;
    j["scenarios"] = json::array();
    for (const auto& s : scenarios) j["scenarios"].push_back({{"name", s.name}, {"P", s.P}, {"Q", s.Q}});
    j["priors"] = priors;
    j["sampler"] = sampler_to_json(sampler);
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["max_failure_rate"] = max_failure_rate;
    j["forecast_thin"] = forecast_thin;
    return j.dump(2);
}

void StudyConfig::validate() const {
    const auto names = builtin_dgp_names();
    if (std::find(names.begin(), names.end(), dgp) == names.end()) {
        throw ValidationError("unknown dgp '" + dgp + "'");
    }
    if (scenarios.empty()) throw ValidationError("at least one scenario is required");
    for (const auto& s : scenarios) {
        const auto expected = scenario_by_name(s.name);
        if (expected.P != s.P || expected.Q != s.Q) {
            throw ValidationError("scenario '" + s.name + "' must fit B-DARMA(" + std::to_string(expected.P) +
                                  "," + std::to_string(expected.Q) + ")");
        }
        if (train <= std::max(s.P, s.Q) + 1) throw ValidationError("training window too short for scenario " + s.name);
    }
    check_prior_names(priors);
    if (replicates < 1) throw ValidationError("replicates must be at least 1");
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
    if (train + horizon > T) throw ValidationError("train + horizon exceeds T");
    if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) {
        throw ValidationError("max_failure_rate must lie in [0, 1]");
    }
    if (forecast_thin < 1) throw ValidationError("forecast_thin must be at least 1");
    sampler.validate();
}

// ---------------------------------------------------------------- run_study

const CellReport& StudyReport::cell(const std::string& scenario, const std::string& prior) const {
    for (const auto& c : cells) {
        if (c.scenario == scenario && c.prior == prior) return c;
    }
    throw ValidationError("no cell " + scenario + "/" + prior + " in the report");
}

RatioReport StudyReport::forecast_ratios() const {
    MetricCells m;
    std::vector<std::string> studies;
    for (const auto& s : config.scenarios) studies.push_back(s.name);
    for (const auto& c : cells) {
        if (c.used > 0) m[{c.scenario, c.prior}] = c.forecast.m_rmse;
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    const bool has_correct = std::find(studies.begin(), studies.end(), "correct") != studies.end();
    for (const auto& s : studies) {
        if (has_correct && s != "correct") pairs.emplace_back(s, "correct");
    }
    return ratio_tables(m, config.priors, studies, pairs);
}

StudyReport run_study(const StudyConfig& cfg, const ProgressCallback& progress,
                      const ProgressCallback& sampler_progress) {
    cfg.validate();
    const auto dgp_base = builtin_dgp(cfg.dgp);
    const auto truth_names = ParameterLayout(dgp_base.spec).names();
    const auto truth_flat = dgp_base.truth.pack();
    std::map<std::string, double> truth_of;
    for (std::size_t k = 0; k < truth_names.size(); ++k) truth_of[truth_names[k]] = truth_flat[k];

    StudyReport report;
    report.config = cfg;
    const auto R = static_cast<std::size_t>(cfg.replicates);
    const auto S = cfg.scenarios.size();
    const auto Np = cfg.priors.size();

    // Each replicate is simulated exactly once; every fit reads the same vector.
    std::vector<std::vector<Composition>> data(R);
    report.data_hashes.assign(R, 0);
    for (std::size_t r = 0; r < R; ++r) {
        auto dgp = dgp_base;
        dgp.T = cfg.T;
        Rng rng = Rng::derive(cfg.seed, r);
        try {
            data[r] = simulate(dgp, rng);
            report.data_hashes[r] = series_hash(data[r]);
        } catch (const SimulationDiverged& e) {
            ++report.failed_simulations;
            if (progress) progress("replicate " + std::to_string(r + 1) + " simulation failed: " + e.what());
        }
    }

    const std::size_t tasks = R * S * Np;
    std::vector<FitOutput> outputs(tasks);
    std::mutex log_mutex;
    std::atomic<std::size_t> done{0};
    run_pool(tasks, cfg.jobs, [&](std::size_t task) {
        const std::size_t r = task / (S * Np);
        const std::size_t si = (task / Np) % S;
        const std::size_t pi = task % Np;
        const auto& sc = cfg.scenarios[si];
        FitOutput& out = outputs[task];
        out.record.replicate = static_cast<int>(r + 1);
        out.record.scenario = sc.name;
        out.record.prior = cfg.priors[pi];
        if (data[r].empty()) {
            out.record.message = "simulation failed";
        } else {
            try {
                const auto& series = data[r];
                const std::uint64_t h = series_hash(series);
                if (h != report.data_hashes[r]) throw Error("replicate data changed between fits");
                out.record.data_hash = h;
                const std::vector<Composition> train(series.begin(), series.begin() + cfg.train);
                const std::vector<Composition> test(series.begin() + cfg.train,
                                                    series.begin() + cfg.train + cfg.horizon);
                const auto spec = ModelSpec::for_design(sc.P, sc.Q, dgp_base.spec.J, dgp_base.design);
                const auto prior = default_prior(study_id(sc.name), prior_family_from_string(cfg.priors[pi]));
                const Posterior posterior(spec, dgp_base.design, train, prior);

                // Seeds depend on names, not positions, so sub-studies reproduce full-study fits.
                const std::uint64_t fit_seed =
                    mix_seed(mix_seed(cfg.seed, r), fnv1a(sc.name + "/" + cfg.priors[pi]));
                SamplerConfig sampler = cfg.sampler;
                sampler.seed = fit_seed;
                sampler.jobs = 1;
                ProgressCallback chain_log;
                if (sampler_progress) {
                    const std::string tag = "rep " + std::to_string(r + 1) + " " + sc.name + "/" + cfg.priors[pi] + ": ";
                    chain_log = [&, tag](const std::string& line) {
                        std::lock_guard<std::mutex> lock(log_mutex);
                        sampler_progress(tag + line);
                    };
                }
                const auto draws = sample(posterior, sampler, chain_log);
                const std::size_t C = count_parameters(spec);
                const auto names = ParameterLayout(spec).names();
                out.names = names;
                for (std::size_t k = 0; k < C; ++k) {
                    auto col = draws.column(k);
                    double m = 0.0;
                    for (double v : col) m += v;
                    out.mean.push_back(m / static_cast<double>(col.size()));
                    std::sort(col.begin(), col.end());
                    out.intervals.emplace_back(quantile(col, 0.025), quantile(col, 0.975));
                }
                ForecastOptions fo;
                fo.thin = cfg.forecast_thin;
                fo.seed = mix_seed(fit_seed, 1);
                out.forecast = mean_forecast_only(spec, dgp_base.design, draws, train, cfg.horizon, fo);
                out.record.divergences = draws.total_divergences();
                out.record.divergence_rate = draws.divergence_rate();
                out.record.max_rhat = max_finite(draws.rhat, C);
                out.record.min_ess = min_finite(draws.ess, C);
                double sq = 0.0;
                for (std::size_t hh = 0; hh < test.size(); ++hh) {
                    for (std::size_t j = 0; j < test[hh].size(); ++j) {
                        const double e = out.forecast[hh][j] - test[hh][j];
                        sq += e * e;
                    }
                }
                out.record.forecast_rmse = std::sqrt(sq / static_cast<double>(test.size() * test[0].size()));
                out.record.ok = true;
            } catch (const Error& e) {
                out.record.message = e.what();
            }
        }
        if (progress) {
            std::lock_guard<std::mutex> lock(log_mutex);
            const auto& rec = out.record;
            std::ostringstream line;
            line << "fit " << ++done << "/" << tasks << " rep " << rec.replicate << " " << rec.scenario << "/"
                 << rec.prior << ": ";
            if (rec.ok) {
                line << "divergences=" << rec.divergences << " max_rhat=" << num(rec.max_rhat, 4)
                     << " forecast_rmse=" << num(rec.forecast_rmse, 4);
            } else {
                line << "FAILED (" << rec.message << ")";
            }
            progress(line.str());
        }
    });

    for (const auto& o : outputs) report.fits.push_back(o.record);

    for (std::size_t si = 0; si < S; ++si) {
        for (std::size_t pi = 0; pi < Np; ++pi) {
            CellReport cell;
            cell.scenario = cfg.scenarios[si].name;
            cell.prior = cfg.priors[pi];
            std::vector<std::vector<double>> est;
            std::vector<std::vector<Interval>> iv;
            ForecastArray actual, fc;
            std::vector<std::string> names;
            double div_sum = 0.0;
            cell.max_rhat = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t r = 0; r < R; ++r) {
                const auto& o = outputs[(r * S + si) * Np + pi];
                if (!o.record.ok) {
                    ++cell.failed;
                    continue;
                }
                ++cell.used;
                names = o.names;
                est.push_back(o.mean);
                iv.push_back(o.intervals);
                fc.push_back(o.forecast);
                std::vector<std::vector<double>> a;
                for (int h = 0; h < cfg.horizon; ++h) a.push_back(data[r][static_cast<std::size_t>(cfg.train + h)].vector());
                actual.push_back(std::move(a));
                div_sum += o.record.divergence_rate;
                if (std::isfinite(o.record.max_rhat)) {
                    cell.max_rhat = std::isnan(cell.max_rhat) ? o.record.max_rhat : std::max(cell.max_rhat, o.record.max_rhat);
                }
            }
            if (cell.used > 0) {
                // Parameters absent from the generating model (extra lags) have truth 0.
                std::vector<double> truth;
                for (const auto& n : names) {
                    const auto it = truth_of.find(n);
                    truth.push_back(it == truth_of.end() ? 0.0 : it->second);
                }
                cell.recovery = recovery_metrics(est, iv, truth, names);
                cell.forecast = forecast_summary(actual, fc);
                cell.mean_divergence_rate = div_sum / cell.used;
            }
            report.cells.push_back(std::move(cell));
        }
    }

    for (const auto& c : report.cells) {
        if (c.failed > cfg.max_failure_rate * cfg.replicates) {
            json dump;
            dump["config"] = json::parse(cfg.to_json());
            dump["fits"] = json::array();
            for (const auto& f : report.fits) {
                dump["fits"].push_back({{"replicate", f.replicate}, {"scenario", f.scenario}, {"prior", f.prior},
                                        {"ok", f.ok}, {"message", f.message}});
            }
            throw StudyAborted("cell " + c.scenario + "/" + c.prior + " failed on " + std::to_string(c.failed) +
                                   " of " + std::to_string(cfg.replicates) + " replicates",
                               dump.dump(2));
        }
    }
    return report;
}

// ---------------------------------------------------------------- reports

std::string format_ratio_tables(const RatioReport& r) {
    std::ostringstream s;
    auto table = [&](const std::vector<RatioColumn>& cols, const std::string& title) {
        if (cols.empty()) return;
        s << title << "\n";
        s << pad("prior", 14);
        for (const auto& c : cols) s << pad(c.label, 18, true);
        s << "\n";
        for (const auto& p : r.priors) {
            s << pad(p, 14);
            for (const auto& c : cols) {
                const auto it = c.by_prior.find(p);
                const bool have = it != c.by_prior.end() && it->second.has_value();
                char buf[32];
                if (have) std::snprintf(buf, sizeof buf, "%.3f", *it->second);
                s << pad(have ? buf : "-", 18, true);
            }
            s << "\n";
        }
        s << "\n";
    };
    table(r.cross, "Ratio across studies");
    table(r.within, "Ratio to the best prior within each study");
    return s.str();
}

void write_study_report(const StudyReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    const auto& cfg = report.config;

    std::ostringstream blocks, params, fcsv, tables;
    blocks << "scenario,prior,block,count,mean_bias,mean_rmse,mean_interval_length,coverage,replicates,failed\n";
    params << "scenario,prior,parameter,bias,rmse,interval_length,coverage\n";
    fcsv << "scenario,prior,m_rmse,sd_rmse,mae,rmse,replicates,failed,mean_divergence_rate,max_rhat\n";
    for (const auto& c : report.cells) {
        for (const auto& [name, b] : c.recovery.blocks) {
            blocks << c.scenario << ',' << c.prior << ',' << name << ',' << b.count << ',' << num(b.mean_bias) << ','
                   << num(b.mean_rmse) << ',' << num(b.mean_length) << ',' << num(b.coverage) << ',' << c.used
                   << ',' << c.failed << '\n';
        }
        for (std::size_t k = 0; k < c.recovery.names.size(); ++k) {
            params << c.scenario << ',' << c.prior << ",\"" << c.recovery.names[k] << "\"," << num(c.recovery.bias[k])
                   << ',' << num(c.recovery.rmse[k]) << ',' << num(c.recovery.interval_length[k]) << ','
                   << num(c.recovery.coverage[k]) << '\n';
        }
        fcsv << c.scenario << ',' << c.prior << ',' << num(c.forecast.m_rmse) << ',' << num(c.forecast.sd_rmse) << ','
             << num(c.forecast.mae) << ',' << num(c.forecast.rmse) << ',' << c.used << ',' << c.failed << ','
             << num(c.mean_divergence_rate) << ',' << num(c.max_rhat) << '\n';
    }

    const auto ratios = report.forecast_ratios();
    std::ostringstream rcsv;
    rcsv << "table,column,prior,value\n";
    for (const auto& [kind, cols] : {std::pair{"cross", &ratios.cross}, std::pair{"within", &ratios.within}}) {
        for (const auto& col : *cols) {
            for (const auto& p : ratios.priors) {
                const auto& v = col.by_prior.at(p);
                rcsv << kind << ',' << col.label << ',' << p << ',' << (v ? num(*v) : "") << '\n';
            }
        }
    }

    tables << "Simulation study: dgp " << cfg.dgp << ", " << cfg.replicates << " replicates, T=" << cfg.T
           << ", train " << cfg.train << ", horizon " << cfg.horizon << ", " << cfg.sampler.chains << " chains x ("
           << cfg.sampler.warmup << " + " << cfg.sampler.sampling << "), seed " << cfg.seed << "\n";
    if (report.failed_simulations > 0) tables << "failed simulations: " << report.failed_simulations << "\n";
    tables << "\n";
    auto fixed = [](double v, int prec) {
        if (!std::isfinite(v)) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.*f", prec, v);
        return std::string(buf);
    };
    for (const auto& sc : cfg.scenarios) {
        tables << "Scenario " << sc.name << ": B-DARMA(" << sc.P << "," << sc.Q << ")\n";
        tables << pad("block", 8) << pad("prior", 14) << pad("bias", 10, true) << pad("rmse", 10, true)
               << pad("length", 10, true) << pad("coverage", 10, true) << pad("used", 6, true) << "\n";
        std::vector<std::string> block_order;
        for (const auto& c : report.cells) {
            if (c.scenario != sc.name) continue;
            for (const auto& [name, _] : c.recovery.blocks) {
                if (std::find(block_order.begin(), block_order.end(), name) == block_order.end()) block_order.push_back(name);
            }
        }
        for (const auto& b : block_order) {
            for (const auto& c : report.cells) {
                if (c.scenario != sc.name) continue;
                const auto it = c.recovery.blocks.find(b);
                if (it == c.recovery.blocks.end()) continue;
                tables << pad(b, 8) << pad(c.prior, 14) << pad(fixed(it->second.mean_bias, 3), 10, true)
                       << pad(fixed(it->second.mean_rmse, 3), 10, true) << pad(fixed(it->second.mean_length, 3), 10, true)
                       << pad(fixed(it->second.coverage, 3), 10, true) << pad(std::to_string(c.used), 6, true) << "\n";
            }
        }
        tables << "\n";
    }
    tables << "Forecast accuracy (posterior-mean forecast over the horizon)\n";
    tables << pad("scenario", 10) << pad("prior", 14) << pad("M-RMSE", 10, true) << pad("SD", 10, true)
           << pad("MAE", 10, true) << pad("div", 8, true) << pad("failed", 8, true) << "\n";
    for (const auto& c : report.cells) {
        tables << pad(c.scenario, 10) << pad(c.prior, 14) << pad(fixed(c.forecast.m_rmse, 4), 10, true)
               << pad(fixed(c.forecast.sd_rmse, 4), 10, true) << pad(fixed(c.forecast.mae, 4), 10, true)
               << pad(fixed(c.mean_divergence_rate, 3), 8, true) << pad(std::to_string(c.failed), 8, true) << "\n";
    }
    tables << "\n" << format_ratio_tables(ratios);

    json fits = json::array();
    for (const auto& f : report.fits) {
        fits.push_back({{"replicate", f.replicate},       {"scenario", f.scenario},
                        {"prior", f.prior},               {"ok", f.ok},
                        {"message", f.message},           {"data_hash", hex(f.data_hash)},
                        {"divergences", f.divergences},   {"divergence_rate", jnum(f.divergence_rate)},
                        {"max_rhat", jnum(f.max_rhat)},   {"min_ess", jnum(f.min_ess)},
                        {"forecast_rmse", jnum(f.forecast_rmse)}});
    }
    json fits_doc;
    fits_doc["data_hashes"] = json::array();
    for (auto h : report.data_hashes) fits_doc["data_hashes"].push_back(hex(h));
    fits_doc["failed_simulations"] = report.failed_simulations;
    fits_doc["fits"] = fits;

    json results;
    results["config"] = json::parse(cfg.to_json());
    results["cells"] = json::array();
    for (const auto& c : report.cells) {
        json cj{{"scenario", c.scenario}, {"prior", c.prior}, {"used", c.used}, {"failed", c.failed},
                {"mean_divergence_rate", jnum(c.mean_divergence_rate)}, {"max_rhat", jnum(c.max_rhat)}};
        cj["forecast"] = {{"m_rmse", jnum(c.forecast.m_rmse)}, {"sd_rmse", jnum(c.forecast.sd_rmse)},
                          {"mae", jnum(c.forecast.mae)}, {"rmse", jnum(c.forecast.rmse)}};
        cj["blocks"] = json::object();
        for (const auto& [name, b] : c.recovery.blocks) {
            cj["blocks"][name] = {{"count", b.count}, {"mean_bias", jnum(b.mean_bias)}, {"mean_rmse", jnum(b.mean_rmse)},
                                  {"mean_interval_length", jnum(b.mean_length)}, {"coverage", jnum(b.coverage)}};
        }
        results["cells"].push_back(cj);
    }

    write_text_file(path("recovery_blocks.csv"), blocks.str());
    write_text_file(path("recovery_parameters.csv"), params.str());
    write_text_file(path("forecast.csv"), fcsv.str());
    write_text_file(path("ratios.csv"), rcsv.str());
    write_text_file(path("tables.txt"), tables.str());
    write_text_file(path("fits.json"), fits_doc.dump(2) + "\n");
    write_text_file(path("results.json"), results.dump(2) + "\n");

    // M-RMSE per prior across scenarios
    std::vector<PlotSeries> lines;
    const char* colors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"};
    for (std::size_t pi = 0; pi < cfg.priors.size(); ++pi) {
        PlotSeries s{cfg.priors[pi], colors[pi % 5], {}, {}};
        for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
            const auto& c = report.cell(cfg.scenarios[si].name, cfg.priors[pi]);
            if (c.used == 0) continue;
            s.x.push_back(static_cast<double>(si + 1));
            s.y.push_back(c.forecast.m_rmse);
        }
        if (!s.x.empty()) lines.push_back(s);
    }
    if (!lines.empty()) {
        std::string title = "Forecast M-RMSE by scenario (";
        for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
            title += (si ? ", " : "") + std::to_string(si + 1) + "=" + cfg.scenarios[si].name;
        }
        write_text_file(path("forecast_mrmse.svg"), line_chart_svg(title + ")", lines));
    }
}

MetricTable read_metric_table(const std::string& json_text) {
    const json j = parse_config_text(json_text);
    MetricTable t;
    try {
        t.metric = j.value("metric", std::string("m_rmse"));
        for (const auto& c : j.at("cells")) {
            const auto study = c.at("study").get<std::string>();
            const auto prior = c.at("prior").get<std::string>();
            t.cells[{study, prior}] = c.at("value").get<double>();
            if (std::find(t.studies.begin(), t.studies.end(), study) == t.studies.end()) t.studies.push_back(study);
            if (std::find(t.priors.begin(), t.priors.end(), prior) == t.priors.end()) t.priors.push_back(prior);
        }
        if (j.contains("pairs")) {
            for (const auto& p : j.at("pairs")) t.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad metric table: ") + e.what());
    }
    if (t.cells.empty()) throw ValidationError("metric table has no cells");
    return t;
}

// ---------------------------------------------------------------- application

ApplicationConfig ApplicationConfig::desk() {
    ApplicationConfig c;
    c.profile = "desk";
    c.P = 2;
    c.sampler.chains = 2;
    c.sampler.warmup = 300;
    c.sampler.sampling = 300;
    return c;
}

ApplicationConfig ApplicationConfig::paper() {
    ApplicationConfig c;
    c.profile = "paper";
    c.P = 10;
    c.sampler.chains = 4;
    c.sampler.warmup = 500;
    c.sampler.sampling = 750;
    return c;
}

ApplicationConfig ApplicationConfig::for_profile(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "paper") return paper();
    throw ValidationError("unknown profile '" + name + "' (expected desk or paper)");
}

ApplicationConfig ApplicationConfig::from_json(const std::string& json_text, const ApplicationConfig& base) {
    const json j = parse_config_text(json_text);
    ApplicationConfig c = base;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "profile") {
                const auto keep = c;
                c = for_profile(value.get<std::string>());
                c.priors = keep.priors;
                c.seed = keep.seed;
                c.jobs = keep.jobs;
            } else if (key == "P") c.P = value.get<int>();
            else if (key == "Q") c.Q = value.get<int>();
            else if (key == "priors") c.priors = value.get<std::vector<std::string>>();
            else if (key == "sampler") sampler_from_json(value, c.sampler);
            else if (key == "test_length") c.test_length = value.get<std::size_t>();
            else if (key == "train_end") c.train_end = value.get<std::string>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "jobs") c.jobs = value.get<int>();
            else if (key == "forecast_thin") c.forecast_thin = value.get<std::size_t>();
            else if (key == "terms") {
                for (const auto& [k, v] : value.items()) {
                    if (k == "weekly_pairs") c.terms.weekly_pairs = v.get<int>();
                    else if (k == "weekly_period") c.terms.weekly_period = v.get<double>();
                    else if (k == "annual_pairs") c.terms.annual_pairs = v.get<int>();
                    else if (k == "annual_period") c.terms.annual_period = v.get<double>();
                    else if (k == "seasonal_precision") c.terms.seasonal_precision = v.get<bool>();
                    else throw ValidationError("unknown terms key '" + k + "'");
                }
            } else {
                throw ValidationError("unknown application config key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad application config value: ") + e.what());
    }
    return c;
}

std::string ApplicationConfig::to_json() const {
    json j;
    j["profile"] = profile;
    j["P"] = P;
    j["Q"] = Q;
    j["priors"] = priors;
    j["sampler"] = sampler_to_json(sampler);
    j["test_length"] = test_length;
    j["train_end"] = train_end ? json(*train_end) : json(nullptr);
    j["terms"] = {{"weekly_pairs", terms.weekly_pairs},
                  {"weekly_period", terms.weekly_period},
                  {"annual_pairs", terms.annual_pairs},
                  {"annual_period", terms.annual_period},
                  {"seasonal_precision", terms.seasonal_precision}};
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["forecast_thin"] = forecast_thin;
    return j.dump(2);
}

void ApplicationConfig::validate() const {
    if (P < 0 || Q < 0) throw ValidationError("lag orders must be non-negative");
    check_prior_names(priors);
    if (test_length < 1) throw ValidationError("test_length must be at least 1");
    if (forecast_thin < 1) throw ValidationError("forecast_thin must be at least 1");
    if (train_end) parse_date(*train_end);
    if (terms.weekly_pairs < 0 || terms.annual_pairs < 0) throw ValidationError("Fourier pair counts must be non-negative");
    sampler.validate();
}

ApplicationReport run_application(const SectorPanel& panel, const ApplicationConfig& cfg,
                                   const ProgressCallback& progress, const ProgressCallback& sampler_progress) {
    cfg.validate();
    const auto check = validate_panel(panel);
    if (!check.ok()) {
        const auto& i = check.issues.front();
        throw ValidationError("panel failed validation (" + std::to_string(check.issues.size()) + " issues; first: " +
                              (i.date.empty() ? "" : i.date + " ") + (i.sector.empty() ? "" : i.sector + " ") +
                              i.message + ")");
    }
    const auto shares = to_shares(panel);
    Split<Composition> parts;
    std::size_t train_rows;
    if (cfg.train_end) {
        parts = split(shares, panel.dates, parse_date(*cfg.train_end), cfg.test_length);
        train_rows = parts.train.size();
    } else {
        if (shares.size() <= cfg.test_length) throw ValidationError("panel is shorter than the test window");
        train_rows = shares.size() - cfg.test_length;
        parts = split_rows(shares, train_rows, cfg.test_length);
    }
    const std::size_t m = static_cast<std::size_t>(std::max(cfg.P, cfg.Q));
    if (parts.train.size() <= m + 1) {
        throw ValidationError("insufficient history for " + std::to_string(cfg.P) + " lags: " +
                              std::to_string(parts.train.size()) + " training rows");
    }

    const int K = static_cast<int>(panel.sectors.size());
    const Design design = fourier_design({panel.dates.begin(), panel.dates.begin() + static_cast<long>(train_rows)},
                                         K - 1, cfg.terms);
    const auto spec = ModelSpec::for_design(cfg.P, cfg.Q, K, design);

    ApplicationReport report;
    report.config = cfg;
    report.sectors = panel.sectors;
    report.parameters = count_parameters(spec);
    report.train = parts.train;
    report.test = parts.test;
    for (std::size_t t = 0; t < parts.test.size(); ++t) report.test_dates.push_back(format_date(panel.dates[train_rows + t]));
    report.priors.resize(cfg.priors.size());

    std::mutex log_mutex;
    run_pool(cfg.priors.size(), cfg.jobs, [&](std::size_t pi) {
        auto& out = report.priors[pi];
        out.prior = cfg.priors[pi];
        try {
            const auto prior = default_prior("application", prior_family_from_string(out.prior));
            const Posterior posterior(spec, design, parts.train, prior);
            SamplerConfig sampler = cfg.sampler;
            sampler.seed = mix_seed(cfg.seed, fnv1a(out.prior));
            sampler.jobs = 1;
            ProgressCallback chain_log;
            if (sampler_progress) {
                chain_log = [&, tag = out.prior + ": "](const std::string& line) {
                    std::lock_guard<std::mutex> lock(log_mutex);
                    sampler_progress(tag + line);
                };
            }
            const auto draws = sample(posterior, sampler, chain_log);
            ForecastOptions fo;
            fo.thin = cfg.forecast_thin;
            fo.seed = mix_seed(sampler.seed, 1);
            out.forecast = forecast(spec, design, draws, parts.train, static_cast<int>(parts.test.size()), fo);
            const std::size_t H = parts.test.size();
            const auto J = static_cast<std::size_t>(K);
            out.sector_rmse.assign(J, 0.0);
            out.sector_mae.assign(J, 0.0);
            double sq = 0.0, ab = 0.0;
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t j = 0; j < J; ++j) {
                    const double e = out.forecast.point[h][j] - parts.test[h][j];
                    sq += e * e;
                    ab += std::abs(e);
                    out.sector_rmse[j] += e * e;
                    out.sector_mae[j] += std::abs(e);
                }
            }
            for (std::size_t j = 0; j < J; ++j) {
                out.sector_rmse[j] = std::sqrt(out.sector_rmse[j] / static_cast<double>(H));
                out.sector_mae[j] /= static_cast<double>(H);
            }
            out.rmse = std::sqrt(sq / static_cast<double>(H * J));
            out.mae = ab / static_cast<double>(H * J);
            out.divergences = draws.total_divergences();
            out.divergence_rate = draws.divergence_rate();
            out.max_rhat = max_finite(draws.rhat, count_parameters(spec));
            out.ok = true;
        } catch (const Error& e) {
            out.message = e.what();
        }
        if (progress) {
            std::lock_guard<std::mutex> lock(log_mutex);
            if (out.ok) {
                progress("application " + out.prior + ": rmse=" + num(out.rmse, 4) + " mae=" + num(out.mae, 4) +
                         " divergence_rate=" + num(out.divergence_rate, 3));
            } else {
                progress("application " + out.prior + ": FAILED (" + out.message + ")");
            }
        }
    });
    return report;
}

void write_application_report(const ApplicationReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto path = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };
    std::ostringstream errors, sector, tables;
    errors << "prior,rmse,mae,divergences,divergence_rate,max_rhat,ok\n";
    sector << "prior,sector,rmse,mae\n";
    tables << "Sector-share application: B-DARMA(" << report.config.P << "," << report.config.Q << "), "
           << report.parameters << " parameters, " << report.train.size() << " training rows, "
           << report.test.size() << "-day forecast\n\n";
    tables << pad("prior", 14) << pad("RMSE", 10, true) << pad("MAE", 10, true) << pad("div.rate", 10, true) << "\n";
    for (const auto& p : report.priors) {
        errors << p.prior << ',' << num(p.rmse) << ',' << num(p.mae) << ',' << p.divergences << ','
               << num(p.divergence_rate) << ',' << num(p.max_rhat) << ',' << (p.ok ? "true" : "false") << '\n';
        char a[32], b[32], c[32];
        std::snprintf(a, sizeof a, "%.4f", p.rmse);
        std::snprintf(b, sizeof b, "%.4f", p.mae);
        std::snprintf(c, sizeof c, "%.3f", p.divergence_rate);
        tables << pad(p.prior, 14) << pad(p.ok ? a : "failed", 10, true) << pad(p.ok ? b : "-", 10, true)
               << pad(p.ok ? c : "-", 10, true) << "\n";
        if (!p.ok) continue;
        for (std::size_t k = 0; k < report.sectors.size(); ++k) {
            sector << p.prior << ",\"" << report.sectors[k] << "\"," << num(p.sector_rmse[k]) << ','
                   << num(p.sector_mae[k]) << '\n';
        }
        std::ostringstream fc;
        write_forecast_csv(p.forecast, report.sectors, fc);
        write_text_file(path("forecast_" + slug(p.prior) + ".csv"), fc.str());
        write_forecast_svgs(dir, "forecast_" + slug(p.prior) + "_", p.forecast, report.sectors, report.train, report.test);
    }
    json j;
    j["config"] = json::parse(report.config.to_json());
    j["sectors"] = report.sectors;
    j["parameters"] = report.parameters;
    j["train_rows"] = report.train.size();
    j["test_dates"] = report.test_dates;
    j["priors"] = json::array();
    for (const auto& p : report.priors) {
        j["priors"].push_back({{"prior", p.prior}, {"ok", p.ok}, {"message", p.message}, {"rmse", jnum(p.rmse)},
                               {"mae", jnum(p.mae)}, {"divergences", p.divergences},
                               {"divergence_rate", jnum(p.divergence_rate)}, {"max_rhat", jnum(p.max_rhat)},
                               {"sector_rmse", p.sector_rmse}, {"sector_mae", p.sector_mae}});
    }
    write_text_file(path("errors.csv"), errors.str());
    write_text_file(path("sector_errors.csv"), sector.str());
    write_text_file(path("tables.txt"), tables.str());
    write_text_file(path("application.json"), j.dump(2) + "\n");
}

}  // namespace bdarma
