// bdarma: command-line front end.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
// Diagnostics go to stderr; data goes to files. BDARMA_SEED overrides the seed
// from a config file; an explicit --seed overrides both.

#include "bdarma/errors.hpp"
#include "bdarma/forecaster.hpp"
#include "bdarma/ingest.hpp"
#include "bdarma/io.hpp"
#include "bdarma/posterior.hpp"
#include "bdarma/simulator.hpp"
#include "bdarma/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#ifndef BDARMA_VERSION
#define BDARMA_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bdarma;

namespace {

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Written when computation starts and rewritten when it ends.
class Manifest {
public:
    Manifest(std::string path, std::string command, const std::vector<std::string>& argv, json config,
             std::uint64_t seed)
        : path_(std::move(path)) {
        doc_["command"] = std::move(command);
        doc_["argv"] = argv;
        doc_["config"] = std::move(config);
        doc_["seed"] = seed;
        doc_["versions"] = {{"bdarma", BDARMA_VERSION},
                            {"compiler", __VERSION__},
                            {"cli11", CLI11_VERSION},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
        doc_["started_at"] = now_utc();
        doc_["status"] = "running";
        doc_["outputs"] = json::array();
        save();
    }

    void output(const std::string& p) { doc_["outputs"].push_back(p); }

    void finish(const std::string& status) {
        doc_["status"] = status;
        doc_["finished_at"] = now_utc();
        save();
    }

private:
    void save() const { write_text_file(path_, doc_.dump(2) + "\n"); }

    std::string path_;
    json doc_;
};

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
    if (flag) return *flag;
    if (const char* env = std::getenv("BDARMA_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ValidationError(std::string("BDARMA_SEED is not an unsigned integer: '") + env + "'");
    }
    return config_seed;
}

SamplerConfig sampler_profile(const std::string& profile) {
    SamplerConfig s;
    if (profile == "desk") {
        s.chains = 2;
        s.warmup = 300;
        s.sampling = 300;
    } else if (profile != "paper") {
        throw ValidationError("unknown profile '" + profile + "' (expected desk or paper)");
    }
    return s;
}

struct SamplerFlags {
    std::optional<int> chains, warmup, sampling, max_treedepth;
    std::optional<double> target_accept;

    void add(CLI::App* app) {
        app->add_option("--chains", chains, "Number of chains");
        app->add_option("--warmup", warmup, "Warmup iterations per chain");
        app->add_option("--sampling", sampling, "Sampling iterations per chain");
        app->add_option("--target-accept", target_accept, "Step-size adaptation target");
        app->add_option("--max-treedepth", max_treedepth, "Maximum tree depth");
    }
    void apply(SamplerConfig& s) const {
        if (chains) s.chains = *chains;
        if (warmup) s.warmup = *warmup;
        if (sampling) s.sampling = *sampling;
        if (target_accept) s.target_accept = *target_accept;
        if (max_treedepth) s.max_treedepth = *max_treedepth;
    }
};

json sampler_json(const SamplerConfig& s) {
    return {{"chains", s.chains},
            {"warmup", s.warmup},
            {"sampling", s.sampling},
            {"target_accept", s.target_accept},
            {"max_treedepth", s.max_treedepth},
            {"init_range", s.init_range},
            {"seed", s.seed},
            {"jobs", s.jobs}};
}

ProgressCallback stderr_logger() {
    return [](const std::string& line) { std::cerr << line << '\n'; };
}

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void prepare_out_dir(const std::string& dir) {
    fs::create_directories(dir);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string dgp = "main";
    int T = 100;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int run_simulate(const SimulateArgs& a, const std::vector<std::string>& argv) {
    auto cfg = builtin_dgp(a.dgp);
    cfg.T = a.T;
    cfg.seed = resolve_seed(a.seed, 1);
    cfg.validate();
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    Manifest m(a.out + ".manifest.json", "simulate", argv, {{"dgp", a.dgp}, {"T", a.T}}, cfg.seed);
    const auto series = simulate(cfg);
    std::ostringstream csv;
    write_series_csv(series, csv);
    write_text_file(a.out, csv.str());
    m.output(a.out);
    m.finish("ok");
    std::cerr << "wrote " << series.size() << " compositions with " << cfg.spec.J << " components to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string data;
    int P = 0, Q = 0;
    std::string prior = "informative";
    std::string prior_set = "sim";
    std::string profile = "desk";
    bool fourier = false;
    SamplerFlags sampler;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    std::string out;
};

Design design_for(bool fourier, int dim) {
    return fourier ? Design::fourier(dim, FourierTerms{}, 0) : Design::intercept(dim);
}

int run_fit(const FitArgs& a, const std::vector<std::string>& argv) {
    SamplerConfig s = sampler_profile(a.profile);
    a.sampler.apply(s);
    s.seed = resolve_seed(a.seed, 1);
    s.jobs = a.jobs;
    s.validate();
    const auto family = prior_family_from_string(a.prior);
    if (a.prior_set != "sim" && a.prior_set != "application") {
        throw ValidationError("--prior-set must be sim or application");
    }
    const auto prior = default_prior(a.prior_set == "sim" ? "sim-correct" : "application", family);
    const auto series = read_series_csv(a.data);
    const int J = static_cast<int>(series.front().size());
    const Design design = design_for(a.fourier, J - 1);
    const auto spec = ModelSpec::for_design(a.P, a.Q, J, design);
    spec.validate();
    if (series.size() <= static_cast<std::size_t>(spec.m()) + 1) {
        throw ValidationError("series too short for the requested lags");
    }
    const std::string out = a.out.empty() ? fs::path(a.data).replace_extension("").string() + "_fit" : a.out;
    prepare_out_dir(out);
    const json model{{"P", a.P},
                     {"Q", a.Q},
                     {"J", J},
                     {"design", a.fourier ? "fourier" : "intercept"},
                     {"prior", to_string(family)},
                     {"prior_set", a.prior_set},
                     {"data", fs::absolute(a.data).string()}};
    Manifest m((fs::path(out) / "manifest.json").string(), "fit", argv,
               {{"model", model}, {"sampler", sampler_json(s)}, {"profile", a.profile}}, s.seed);

    const Posterior posterior(spec, design, series, prior);
    const auto draws = sample(posterior, s, stderr_logger());

    const auto file = [&](const char* name) { return (fs::path(out) / name).string(); };
    std::ostringstream csv;
    write_draws_csv(draws, csv);
    write_text_file(file("draws.csv"), csv.str());
    write_text_file(file("diagnostics.json"), diagnostics_json(draws) + "\n");
    write_text_file(file("model.json"), model.dump(2) + "\n");

    std::ostringstream summary;
    summary << "parameter,mean,sd,q2.5,q97.5,rhat,ess\n" << std::setprecision(8);
    for (std::size_t k = 0; k < draws.dim; ++k) {
        auto col = draws.column(k);
        double mean = 0.0, var = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        for (double v : col) var += (v - mean) * (v - mean);
        const double sd = col.size() > 1 ? std::sqrt(var / static_cast<double>(col.size() - 1)) : 0.0;
        summary << '"' << draws.names[k] << "\"," << mean << ',' << sd << ',' << quantile(col, 0.025) << ','
                << quantile(col, 0.975) << ',' << (k < draws.rhat.size() ? draws.rhat[k] : NAN) << ','
                << (k < draws.ess.size() ? draws.ess[k] : NAN) << '\n';
    }
    write_text_file(file("summary.csv"), summary.str());
    for (const char* f : {"draws.csv", "diagnostics.json", "model.json", "summary.csv"}) m.output(file(f));
    m.finish("ok");
    std::cerr << "fit done: " << draws.total_divergences() << " divergent transitions";
    if (draws.divergence_flagged()) std::cerr << " (over 20% of transitions; results are unreliable)";
    std::cerr << '\n';
    return 0;
}

// ---------------------------------------------------------------- forecast

struct ForecastArgs {
    std::string fit;
    std::string data;
    int horizon = 20;
    bool noise_free = false;
    std::size_t thin = 1;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    std::string out;
};

int run_forecast(const ForecastArgs& a, const std::vector<std::string>& argv) {
    const json model = [&] {
        try {
            return json::parse(read_file((fs::path(a.fit) / "model.json").string()));
        } catch (const json::exception& e) {
            throw ValidationError(std::string("bad model.json: ") + e.what());
        }
    }();
    const std::string data = a.data.empty() ? model.at("data").get<std::string>() : a.data;
    const auto series = read_series_csv(data);
    const int J = model.at("J").get<int>();
    if (static_cast<int>(series.front().size()) != J) throw ValidationError("data does not match the fitted model");
    const bool fourier = model.at("design").get<std::string>() == "fourier";
    const Design design = design_for(fourier, J - 1);
    const auto spec = ModelSpec::for_design(model.at("P").get<int>(), model.at("Q").get<int>(), J, design);
    const auto draws = read_draws_csv((fs::path(a.fit) / "draws.csv").string());
    if (a.horizon < 1) throw ValidationError("--horizon must be at least 1");

    const std::string out = a.out.empty() ? fs::path(a.fit).string() + "_forecast" : a.out;
    prepare_out_dir(out);
    ForecastOptions opt;
    opt.thin = a.thin;
    opt.noise_free = a.noise_free;
    opt.seed = resolve_seed(a.seed, 1);
    opt.jobs = a.jobs;
    Manifest m((fs::path(out) / "manifest.json").string(), "forecast", argv,
               {{"fit", fs::absolute(a.fit).string()},
                {"data", fs::absolute(data).string()},
                {"horizon", a.horizon},
                {"noise_free", a.noise_free},
                {"thin", a.thin}},
               opt.seed);
    const auto f = forecast(spec, design, draws, series, a.horizon, opt);
    std::vector<std::string> names;
    for (int j = 0; j < J; ++j) names.push_back("y_" + std::to_string(j + 1));
    std::ostringstream csv;
    write_forecast_csv(f, names, csv);
    const auto csv_path = (fs::path(out) / "forecast.csv").string();
    write_text_file(csv_path, csv.str());
    m.output(csv_path);
    for (const auto& svg : write_forecast_svgs(out, "forecast_", f, names, series)) {
        m.output((fs::path(out) / svg).string());
    }
    m.finish("ok");
    std::cerr << "forecast from " << f.draws << " draws (" << f.skipped << " skipped), horizon " << a.horizon << '\n';
    return 0;
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    std::string input;
    bool synthetic = false;
    std::size_t days = 630;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int run_ingest(const IngestArgs& a, const std::vector<std::string>& argv) {
    if (a.synthetic == !a.input.empty()) throw ValidationError("give exactly one of --input or --synthetic");
    SyntheticPanelConfig sc;
    sc.days = a.days;
    sc.seed = resolve_seed(a.seed, sc.seed);
    SectorPanel panel = a.synthetic ? SectorPanel{} : read_panel_csv(a.input);
    prepare_out_dir(a.out);
    Manifest m((fs::path(a.out) / "manifest.json").string(), "ingest", argv,
               {{"input", a.synthetic ? json(nullptr) : json(fs::absolute(a.input).string())},
                {"synthetic", a.synthetic},
                {"days", a.days}},
               sc.seed);
    const auto file = [&](const char* name) { return (fs::path(a.out) / name).string(); };
    if (a.synthetic) {
        panel = synthetic_panel(sc);
        std::ostringstream raw;
        write_panel_long_csv(panel, raw);
        write_text_file(file("panel.csv"), raw.str());
        m.output(file("panel.csv"));
    }
    const auto report = validate_panel(panel);
    write_text_file(file("validation.json"), report.to_json() + "\n");
    m.output(file("validation.json"));
    if (!report.ok()) {
        m.finish("invalid");
        std::cerr << "panel failed validation with " << report.issues.size() << " issues; see "
                  << file("validation.json") << '\n';
        for (std::size_t i = 0; i < std::min<std::size_t>(5, report.issues.size()); ++i) {
            const auto& is = report.issues[i];
            std::cerr << "  " << is.date << ' ' << is.sector << ": " << is.message << '\n';
        }
        return 1;
    }
    const auto shares = to_shares(panel);
    std::ostringstream csv;
    csv << "date";
    for (const auto& s : panel.sectors) csv << ",\"" << s << '"';
    csv << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < shares.size(); ++t) {
        csv << format_date(panel.dates[t]);
        for (double v : shares[t].values()) csv << ',' << v;
        csv << '\n';
    }
    write_text_file(file("shares.csv"), csv.str());
    m.output(file("shares.csv"));
    m.finish("ok");
    std::cerr << "ingested " << panel.dates.size() << " trading days x " << panel.sectors.size() << " sectors\n";
    return 0;
}

// ---------------------------------------------------------------- study

struct StudyArgs {
    std::string config;
    std::string profile = "desk";
    bool application = false;
    std::string panel;
    std::optional<int> replicates;
    std::vector<std::string> scenarios;
    std::vector<std::string> priors;
    std::optional<std::string> dgp;
    std::optional<int> P;
    SamplerFlags sampler;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    bool verbose = false;
    std::string out;
};

int run_study_command(const StudyArgs& a, const std::vector<std::string>& argv) {
    // Everything that can fail on bad input happens before the output directory exists.
    const std::string config_text = a.config.empty() ? std::string() : read_file(a.config);
    const auto sampler_log = a.verbose ? stderr_logger() : ProgressCallback{};
    if (a.application) {
        auto cfg = ApplicationConfig::for_profile(a.profile);
        if (!config_text.empty()) cfg = ApplicationConfig::from_json(config_text, cfg);
        a.sampler.apply(cfg.sampler);
        if (a.P) cfg.P = *a.P;
        if (!a.priors.empty()) cfg.priors = a.priors;
        cfg.seed = resolve_seed(a.seed, cfg.seed);
        cfg.jobs = a.jobs;
        cfg.validate();
        const SectorPanel panel = a.panel.empty() ? synthetic_panel() : read_panel_csv(a.panel);
        const auto check = validate_panel(panel);
        if (!check.ok()) throw ValidationError("panel failed validation: " + check.issues.front().message);
        prepare_out_dir(a.out);
        json resolved = json::parse(cfg.to_json());
        resolved["panel"] = a.panel.empty() ? json("synthetic") : json(fs::absolute(a.panel).string());
        Manifest m((fs::path(a.out) / "manifest.json").string(), "study --application", argv, resolved, cfg.seed);
        const auto report = run_application(panel, cfg, stderr_logger(), sampler_log);
        write_application_report(report, a.out);
        m.output(a.out);
        m.finish("ok");
        std::cerr << read_file((fs::path(a.out) / "tables.txt").string());
        return 0;
    }

    auto cfg = StudyConfig::for_profile(a.profile);
    if (!config_text.empty()) cfg = StudyConfig::from_json(config_text, cfg);
    a.sampler.apply(cfg.sampler);
    if (a.replicates) cfg.replicates = *a.replicates;
    if (a.dgp) cfg.dgp = *a.dgp;
    if (!a.scenarios.empty()) {
        cfg.scenarios.clear();
        for (const auto& s : a.scenarios) cfg.scenarios.push_back(scenario_by_name(s));
    }
    if (!a.priors.empty()) cfg.priors = a.priors;
    cfg.seed = resolve_seed(a.seed, cfg.seed);
    cfg.jobs = a.jobs;
    cfg.validate();
    prepare_out_dir(a.out);
    Manifest m((fs::path(a.out) / "manifest.json").string(), "study", argv, json::parse(cfg.to_json()), cfg.seed);
    try {
        const auto report = run_study(cfg, stderr_logger(), sampler_log);
        write_study_report(report, a.out);
    } catch (const StudyAborted& e) {
        write_text_file((fs::path(a.out) / "diagnostic_dump.json").string(), e.dump() + "\n");
        m.output((fs::path(a.out) / "diagnostic_dump.json").string());
        m.finish("aborted");
        throw;
    }
    m.output(a.out);
    m.finish("ok");
    std::cerr << read_file((fs::path(a.out) / "tables.txt").string());
    return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::string table;
    std::string study;
    std::string out;
};

int run_report(const ReportArgs& a, const std::vector<std::string>& argv) {
    if (a.table.empty() == a.study.empty()) throw ValidationError("give exactly one of --table or --study");
    MetricTable t;
    if (!a.table.empty()) {
        t = read_metric_table(read_file(a.table));
    } else {
        json results;
        try {
            results = json::parse(read_file((fs::path(a.study) / "results.json").string()));
        } catch (const json::exception& e) {
            throw ValidationError(std::string("bad results.json: ") + e.what());
        }
        json converted;
        converted["metric"] = "m_rmse";
        converted["cells"] = json::array();
        for (const auto& c : results.at("cells")) {
            if (c.at("used").get<int>() == 0) continue;
            converted["cells"].push_back({{"study", c.at("scenario")},
                                          {"prior", c.at("prior")},
                                          {"value", c.at("forecast").at("m_rmse")}});
        }
        converted["pairs"] = json::array();
        for (const char* s : {"overfit", "underfit"}) converted["pairs"].push_back({s, "correct"});
        t = read_metric_table(converted.dump());
    }
    prepare_out_dir(a.out);
    Manifest m((fs::path(a.out) / "manifest.json").string(), "report", argv,
               {{"table", a.table}, {"study", a.study}}, 0);
    const auto r = ratio_tables(t.cells, t.priors, t.studies, t.pairs);
    const std::string text = "Metric: " + t.metric + "\n\n" + format_ratio_tables(r);
    std::ostringstream csv;
    csv << "table,column,prior,value\n" << std::setprecision(10);
    for (const auto& [kind, cols] : {std::pair{"cross", &r.cross}, std::pair{"within", &r.within}}) {
        for (const auto& col : *cols) {
            for (const auto& p : r.priors) {
                const auto& v = col.by_prior.at(p);
                csv << kind << ',' << col.label << ',' << p << ',';
                if (v) csv << *v;
                csv << '\n';
            }
        }
    }
    write_text_file((fs::path(a.out) / "ratios.txt").string(), text);
    write_text_file((fs::path(a.out) / "ratios.csv").string(), csv.str());
    m.output((fs::path(a.out) / "ratios.txt").string());
    m.output((fs::path(a.out) / "ratios.csv").string());
    m.finish("ok");
    std::cerr << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"Bayesian Dirichlet ARMA models for compositional time series", "bdarma"};
    app.set_version_flag("--version", BDARMA_VERSION);
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate a series from a built-in generating process");
    c_sim->add_option("--dgp", sim.dgp, "main or supplementary")->capture_default_str();
    c_sim->add_option("--T", sim.T, "Series length")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "Random seed");
    c_sim->add_option("--out", sim.out, "Output CSV")->required();

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Fit B-DARMA(P,Q) to a composition CSV");
    c_fit->add_option("--data", fit.data, "Series CSV (index column, then shares)")->required();
    c_fit->add_option("--P", fit.P, "VAR order")->capture_default_str();
    c_fit->add_option("--Q", fit.Q, "VMA order")->capture_default_str();
    c_fit->add_option("--prior", fit.prior, "informative, horseshoe, laplace, spike-slab or hierarchical")
        ->capture_default_str();
    c_fit->add_option("--prior-set", fit.prior_set, "Hyperparameter defaults: sim or application")
        ->capture_default_str();
    c_fit->add_option("--profile", fit.profile, "desk or paper sampler settings")->capture_default_str();
    c_fit->add_flag("--fourier", fit.fourier, "Seasonal Fourier design instead of intercepts");
    fit.sampler.add(c_fit);
    c_fit->add_option("--seed", fit.seed, "Random seed");
    c_fit->add_option("--jobs", fit.jobs, "Chains run in parallel (0 = one thread per chain)");
    c_fit->add_option("--out", fit.out, "Output directory (default <data>_fit)");

    ForecastArgs fc;
    auto* c_fc = app.add_subcommand("forecast", "Posterior predictive forecast from a fit directory");
    c_fc->add_option("--fit", fc.fit, "Directory written by 'fit'")->required();
    c_fc->add_option("--data", fc.data, "History CSV (default: the fitted data)");
    c_fc->add_option("--horizon", fc.horizon, "Steps ahead")->capture_default_str();
    c_fc->add_flag("--noise-free", fc.noise_free, "Propagate mean compositions without Dirichlet noise");
    c_fc->add_option("--thin", fc.thin, "Use every k-th draw")->capture_default_str();
    c_fc->add_option("--seed", fc.seed, "Random seed");
    c_fc->add_option("--jobs", fc.jobs, "Worker threads (0 = logical cores)");
    c_fc->add_option("--out", fc.out, "Output directory (default <fit>_forecast)");

    IngestArgs ing;
    auto* c_ing = app.add_subcommand("ingest", "Validate a sector panel and convert it to shares");
    c_ing->add_option("--input", ing.input, "Long (date,sector,value) or wide CSV");
    c_ing->add_flag("--synthetic", ing.synthetic, "Use the bundled synthetic panel");
    c_ing->add_option("--days", ing.days, "Trading days for the synthetic panel")->capture_default_str();
    c_ing->add_option("--seed", ing.seed, "Seed for the synthetic panel");
    c_ing->add_option("--out", ing.out, "Output directory")->required();

    StudyArgs st;
    const int cores = default_jobs();
    st.jobs = cores;
    fc.jobs = cores;
    auto* c_st = app.add_subcommand("study", "Run the simulation study or the sector application");
    c_st->add_option("--config", st.config, "JSON config file")->check(CLI::ExistingFile);
    c_st->add_option("--profile", st.profile, "desk or paper")->capture_default_str();
    c_st->add_flag("--application", st.application, "Run the sector-share application instead");
    c_st->add_option("--panel", st.panel, "Panel CSV for --application (default: synthetic panel)");
    c_st->add_option("--replicates", st.replicates, "Replicates");
    c_st->add_option("--scenarios", st.scenarios, "Subset of correct, overfit, underfit");
    c_st->add_option("--priors", st.priors, "Subset of priors");
    c_st->add_option("--dgp", st.dgp, "main or supplementary");
    c_st->add_option("--P", st.P, "VAR order for --application");
    st.sampler.add(c_st);
    c_st->add_option("--seed", st.seed, "Master seed");
    c_st->add_option("--jobs", st.jobs, "Concurrent fits (default: logical cores)")->capture_default_str();
    c_st->add_flag("--verbose", st.verbose, "Also print per-chain progress");
    c_st->add_option("--out", st.out, "Output directory")->required();

    ReportArgs rep;
    auto* c_rep = app.add_subcommand("report", "Ratio tables from a metric table or a study directory");
    c_rep->add_option("--table", rep.table, "JSON {metric, cells:[{study, prior, value}], pairs}");
    c_rep->add_option("--study", rep.study, "Directory written by 'study'");
    c_rep->add_option("--out", rep.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim, args);
        if (c_fit->parsed()) return run_fit(fit, args);
        if (c_fc->parsed()) return run_forecast(fc, args);
        if (c_ing->parsed()) return run_ingest(ing, args);
        if (c_st->parsed()) return run_study_command(st, args);
        if (c_rep->parsed()) return run_report(rep, args);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
