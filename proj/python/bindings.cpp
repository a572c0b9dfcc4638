#include "bdarma/errors.hpp"
#include "bdarma/forecaster.hpp"
#include "bdarma/ingest.hpp"
#include "bdarma/io.hpp"
#include "bdarma/metrics.hpp"
#include "bdarma/posterior.hpp"
#include "bdarma/simulator.hpp"
#include "bdarma/study.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bdarma;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Composition> to_series(const Array& a) {
    if (a.ndim() != 2) throw ValidationError("series must be a 2-d array (T x J)");
    std::vector<Composition> out;
    const auto r = a.unchecked<2>();
    for (py::ssize_t t = 0; t < r.shape(0); ++t) {
        std::vector<double> row(static_cast<std::size_t>(r.shape(1)));
        for (py::ssize_t j = 0; j < r.shape(1); ++j) row[static_cast<std::size_t>(j)] = r(t, j);
        out.push_back(Composition::normalized(std::move(row)));
    }
    return out;
}

Array from_series(const std::vector<Composition>& s) {
    const auto J = s.empty() ? 0 : s.front().size();
    Array out({s.size(), J});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t t = 0; t < s.size(); ++t) {
        for (std::size_t j = 0; j < J; ++j) w(static_cast<py::ssize_t>(t), static_cast<py::ssize_t>(j)) = s[t][j];
    }
    return out;
}

Array from_rows(const std::vector<std::vector<double>>& rows) {
    const auto C = rows.empty() ? 0 : rows.front().size();
    Array out({rows.size(), C});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < C; ++j) w(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = rows[i][j];
    }
    return out;
}

Design make_design(bool fourier, int dim) {
    return fourier ? Design::fourier(dim, FourierTerms{}, 0) : Design::intercept(dim);
}

/// A fitted model: spec, data and draws, ready for forecasting.
struct Fit {
    ModelSpec spec;
    Design design = Design::intercept(1);
    std::vector<Composition> series;
    PosteriorDraws draws;

    Array draw_array() const {
        Array out({draws.chains, draws.iterations, draws.dim});
        std::copy(draws.values.begin(), draws.values.end(), out.mutable_data());
        return out;
    }

    py::dict forecast(int horizon, std::uint64_t seed, bool noise_free, std::size_t thin) const {
        ForecastOptions opt;
        opt.seed = seed;
        opt.noise_free = noise_free;
        opt.thin = thin;
        const auto f = bdarma::forecast(spec, design, draws, series, horizon, opt);
        py::dict d;
        d["point"] = from_rows(f.point);
        d["q05"] = from_rows(f.q05);
        d["q50"] = from_rows(f.q50);
        d["q95"] = from_rows(f.q95);
        Array traj({f.draws, f.horizon, f.J});
        std::copy(f.trajectories.begin(), f.trajectories.end(), traj.mutable_data());
        d["trajectories"] = traj;
        d["skipped"] = f.skipped;
        return d;
    }
};

Fit fit(const Array& data, int P, int Q, const std::string& prior, const std::string& prior_set, int chains,
        int warmup, int sampling, std::uint64_t seed, double target_accept, int max_treedepth, int jobs,
        bool fourier) {
    Fit f;
    f.series = to_series(data);
    const int J = static_cast<int>(f.series.front().size());
    f.design = make_design(fourier, J - 1);
    f.spec = ModelSpec::for_design(P, Q, J, f.design);
    if (prior_set != "sim" && prior_set != "application") throw ValidationError("prior_set must be sim or application");
    const auto pc = default_prior(prior_set == "sim" ? "sim-correct" : "application", prior_family_from_string(prior));
    const Posterior post(f.spec, f.design, f.series, pc);
    SamplerConfig cfg;
    cfg.chains = chains;
    cfg.warmup = warmup;
    cfg.sampling = sampling;
    cfg.seed = seed;
    cfg.target_accept = target_accept;
    cfg.max_treedepth = max_treedepth;
    cfg.jobs = jobs;
    py::gil_scoped_release release;
    f.draws = sample(post, cfg);
    return f;
}

py::dict report_dict(const StudyReport& r) {
    py::list cells;
    for (const auto& c : r.cells) {
        py::dict d;
        d["scenario"] = c.scenario;
        d["prior"] = c.prior;
        d["used"] = c.used;
        d["failed"] = c.failed;
        d["m_rmse"] = c.forecast.m_rmse;
        d["sd_rmse"] = c.forecast.sd_rmse;
        d["mae"] = c.forecast.mae;
        py::dict blocks;
        for (const auto& [name, b] : c.recovery.blocks) {
            py::dict bd;
            bd["bias"] = b.mean_bias;
            bd["rmse"] = b.mean_rmse;
            bd["length"] = b.mean_length;
            bd["coverage"] = b.coverage;
            blocks[py::str(name)] = bd;
        }
        d["blocks"] = blocks;
        cells.append(d);
    }
    py::dict out;
    out["cells"] = cells;
    out["data_hashes"] = r.data_hashes;
    return out;
}

}  // namespace

PYBIND11_MODULE(_bdarma, m) {
    m.doc() = "Bayesian Dirichlet ARMA models for compositional time series";

    // translators are tried newest first, so the base class goes first
    py::register_exception<Error>(m, "BdarmaError", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    m.def("builtin_dgp_names", &builtin_dgp_names);
    m.def(
        "simulate",
        [](const std::string& dgp, int T, std::uint64_t seed) {
            auto cfg = builtin_dgp(dgp);
            cfg.T = T;
            cfg.seed = seed;
            return from_series(simulate(cfg));
        },
        py::arg("dgp") = "main", py::arg("T") = 100, py::arg("seed") = 1,
        "Simulate T compositions from a built-in generating process.");
    m.def(
        "true_parameters",
        [](const std::string& dgp) {
            const auto cfg = builtin_dgp(dgp);
            py::dict d;
            d["names"] = ParameterLayout(cfg.spec).names();
            d["values"] = cfg.truth.pack();
            return d;
        },
        py::arg("dgp") = "main");

    m.def("alr", [](const std::vector<double>& y) { return alr(Composition(y)); });
    m.def("alr_inv", [](const std::vector<double>& v) { return alr_inv(v).vector(); });
    m.def("dirichlet_logpdf",
          [](const std::vector<double>& y, const std::vector<double>& alpha) {
              return dirichlet_logpdf(Composition(y), alpha);
          });

    py::class_<Fit>(m, "Fit")
        .def_property_readonly("names", [](const Fit& f) { return f.draws.names; })
        .def_property_readonly("draws", &Fit::draw_array, "chains x iterations x outputs")
        .def_property_readonly("rhat", [](const Fit& f) { return f.draws.rhat; })
        .def_property_readonly("ess", [](const Fit& f) { return f.draws.ess; })
        .def_property_readonly("divergences", [](const Fit& f) { return f.draws.total_divergences(); })
        .def_property_readonly("parameter_count", [](const Fit& f) { return count_parameters(f.spec); })
        .def("forecast", &Fit::forecast, py::arg("horizon"), py::arg("seed") = 1, py::arg("noise_free") = false,
             py::arg("thin") = 1);

    m.def("fit", &fit, py::arg("data"), py::arg("P"), py::arg("Q") = 0, py::arg("prior") = "informative",
          py::arg("prior_set") = "sim", py::arg("chains") = 2, py::arg("warmup") = 300, py::arg("sampling") = 300,
          py::arg("seed") = 1, py::arg("target_accept") = 0.85, py::arg("max_treedepth") = 11, py::arg("jobs") = 1,
          py::arg("fourier") = false, "Fit B-DARMA(P, Q) by adaptive HMC.");

    m.def(
        "run_study",
        [](const std::string& config_json, const std::string& profile, const std::string& out_dir) {
            auto cfg = StudyConfig::for_profile(profile);
            if (!config_json.empty()) cfg = StudyConfig::from_json(config_json, cfg);
            StudyReport r;
            {
                py::gil_scoped_release release;
                r = run_study(cfg);
                if (!out_dir.empty()) write_study_report(r, out_dir);
            }
            return report_dict(r);
        },
        py::arg("config_json") = "", py::arg("profile") = "desk", py::arg("out_dir") = "");

    m.def(
        "synthetic_shares",
        [](std::size_t days, std::uint64_t seed) {
            SyntheticPanelConfig c;
            c.days = days;
            c.seed = seed;
            const auto panel = synthetic_panel(c);
            py::dict d;
            d["sectors"] = panel.sectors;
            std::vector<std::string> dates;
            for (const auto& dt : panel.dates) dates.push_back(format_date(dt));
            d["dates"] = dates;
            d["shares"] = from_series(to_shares(panel));
            return d;
        },
        py::arg("days") = 630, py::arg("seed") = 2021);

    m.def(
        "recovery_metrics",
        [](const std::vector<std::vector<double>>& estimates, const std::vector<std::vector<Interval>>& intervals,
           const std::vector<double>& truth, const std::vector<std::string>& names) {
            const auto r = recovery_metrics(estimates, intervals, truth, names);
            py::dict d;
            d["bias"] = r.bias;
            d["rmse"] = r.rmse;
            d["interval_length"] = r.interval_length;
            d["coverage"] = r.coverage;
            return d;
        });

    m.def(
        "ratio_table",
        [](const std::map<std::pair<std::string, std::string>, double>& cells, const std::vector<std::string>& priors,
           const std::vector<std::string>& studies, const std::vector<std::pair<std::string, std::string>>& pairs) {
            const auto r = ratio_tables(cells, priors, studies, pairs);
            py::dict cross, within;
            for (const auto& c : r.cross) cross[py::str(c.label)] = c.by_prior;
            for (const auto& c : r.within) within[py::str(c.label)] = c.by_prior;
            py::dict d;
            d["cross"] = cross;
            d["within"] = within;
            return d;
        },
        py::arg("cells"), py::arg("priors"), py::arg("studies"), py::arg("pairs"),
        "cells maps (study, prior) to a metric value.");
}
