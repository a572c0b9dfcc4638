#include "bdarma/simulator.hpp"

#include "bdarma/dgp_data.hpp"
#include "bdarma/errors.hpp"

#include <json.hpp>

#include <cmath>

namespace bdarma {

void DgpConfig::validate() const {
    spec.validate();
    truth.check_shape(spec);
    if (design.dim() != spec.dim() || design.r_beta() != spec.r_beta ||
        design.r_gamma() != spec.r_gamma) {
        throw ValidationError("design does not match the model spec");
    }
    if (T <= spec.m()) throw ValidationError("T must exceed max(P, Q)");
    if (initial_alpha.size() != static_cast<std::size_t>(spec.J)) {
        throw ValidationError("initial concentration must have J entries");
    }
    for (double a : initial_alpha) {
        if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("initial concentration must be positive");
    }
}

std::vector<Composition> simulate(const DgpConfig& cfg) {
    Rng rng(cfg.seed);
    return simulate(cfg, rng);
}

std::vector<Composition> simulate(const DgpConfig& cfg, Rng& rng) {
    cfg.validate();
    const auto m = static_cast<std::size_t>(cfg.spec.m());
    const auto T = static_cast<std::size_t>(cfg.T);
    const auto J = static_cast<std::size_t>(cfg.spec.J);

    std::vector<Composition> series;
    series.reserve(T);
    std::vector<AlrVector> alr_hist;
    std::vector<AlrVector> eta_hist;
    for (std::size_t s = 0; s < m; ++s) {
        series.push_back(dirichlet_sample(cfg.initial_alpha, rng));
        alr_hist.push_back(alr(series.back()));
        eta_hist.push_back(alr_hist.back());
    }
    std::vector<double> alpha(J);
    for (std::size_t t = m; t < T; ++t) {
        const long tl = static_cast<long>(t);
        AlrVector eta = linear_predictor(cfg.spec, cfg.truth, cfg.design, alr_hist, eta_hist, tl);
        for (double v : eta) {
            if (!std::isfinite(v) || std::abs(v) > 700.0) {
                throw SimulationDiverged("linear predictor left the representable range", tl);
            }
        }
        double phi;
        try {
            phi = precision_at(cfg.truth, cfg.design, tl);
        } catch (const DomainError& e) {
            throw SimulationDiverged(e.what(), tl);
        }
        const Composition mu = alr_inv(eta);
        for (std::size_t j = 0; j < J; ++j) {
            alpha[j] = phi * mu[j];
            if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j])) {
                throw SimulationDiverged("Dirichlet concentration is not positive and finite", tl);
            }
        }
        series.push_back(dirichlet_sample(alpha, rng));
        alr_hist.push_back(alr(series.back()));
        eta_hist.push_back(std::move(eta));
    }
    return series;
}

namespace {

Matrix matrix_from_json(const nlohmann::json& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = rows.at(0).size();
    Matrix out(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out(i, j) = rows.at(i).at(j).get<double>();
    }
    return out;
}

const nlohmann::json& dgp_table() {
    static const nlohmann::json table = nlohmann::json::parse(detail::kDgpMatricesJson);
    return table;
}

}  // namespace

std::vector<std::string> builtin_dgp_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : dgp_table().items()) out.push_back(name);
    return out;
}

DgpConfig builtin_dgp(const std::string& name) {
    const auto& table = dgp_table();
    if (!table.contains(name)) throw ValidationError("unknown DGP '" + name + "'");
    const auto& e = table.at(name);
    DgpConfig cfg;
    cfg.spec.P = e.at("P").get<int>();
    cfg.spec.Q = e.at("Q").get<int>();
    cfg.spec.J = e.at("J").get<int>();
    cfg.design = Design::intercept(cfg.spec.dim());
    cfg.spec.r_beta = cfg.design.r_beta();
    cfg.spec.r_gamma = cfg.design.r_gamma();
    for (const auto& a : e.at("A")) cfg.truth.A.push_back(matrix_from_json(a));
    for (const auto& b : e.at("B")) cfg.truth.B.push_back(matrix_from_json(b));
    cfg.truth.beta = e.at("beta").get<std::vector<double>>();
    cfg.truth.gamma = {std::log(e.at("precision").get<double>())};
    cfg.initial_alpha = e.at("initial_alpha").get<std::vector<double>>();
    cfg.T = 100;
    cfg.validate();
    return cfg;
}

}  // namespace bdarma
