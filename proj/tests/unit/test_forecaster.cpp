#include "doctest.h"

#include "bdarma/errors.hpp"
#include "bdarma/forecaster.hpp"
#include "bdarma/simulator.hpp"
#include "helpers.hpp"

#include <algorithm>
#include <cmath>

using namespace bdarma;

namespace {

PosteriorDraws draws_from(const ModelSpec& spec, const std::vector<std::vector<double>>& thetas) {
    PosteriorDraws d;
    d.chains = 1;
    d.iterations = thetas.size();
    d.dim = count_parameters(spec);
    d.names = ParameterLayout(spec).names();
    for (const auto& t : thetas) d.values.insert(d.values.end(), t.begin(), t.end());
    d.chain_info.resize(1);
    return d;
}

std::vector<Composition> history(std::size_t T, std::size_t J, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Composition> out;
    for (std::size_t t = 0; t < T; ++t) out.push_back(testing::random_composition(rng, J));
    return out;
}

}  // namespace

TEST_CASE("zero dynamics forecast the intercept composition") {
    const ModelSpec spec{1, 1, 4, 3, 1};
    auto p = ParameterVector::zeros(spec);
    p.beta = {0.3, -0.2, 0.1};
    p.gamma = {std::log(2000.0)};
    const auto theta = p.pack();
    const auto d = draws_from(spec, std::vector<std::vector<double>>(400, theta));
    const auto f = forecast(spec, Design::intercept(3), d, history(10, 4, 3), 3);
    const auto target = alr_inv(p.beta);
    for (std::size_t h = 0; h < 3; ++h) {
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            s += f.point[h][j];
            // mean of Dir(phi mu) is mu; 400 draws at phi 2000 put the SE near 1e-3
            CHECK(std::abs(f.point[h][j] - target[j]) < 5e-3);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("one-step noise-free forecast equals alr_inv of the next linear predictor") {
    const auto dgp = builtin_dgp("main");
    auto cfg = dgp;
    cfg.T = 60;
    const auto y = simulate(cfg);
    const auto theta = dgp.truth.pack();
    ForecastOptions opt;
    opt.noise_free = true;
    const auto f = forecast(dgp.spec, dgp.design, draws_from(dgp.spec, {theta}), y, 1, opt);

    LikelihoodEvaluator eval(dgp.spec, dgp.design, y);
    const auto eta = eval.linear_predictors(theta);
    std::vector<AlrVector> a;
    for (const auto& c : y) a.push_back(alr(c));
    const auto next = alr_inv(linear_predictor(dgp.spec, dgp.truth, dgp.design, a, eta, 60));
    for (std::size_t j = 0; j < 6; ++j) CHECK(f.point[0][j] == doctest::Approx(next[j]).epsilon(1e-14));
}

TEST_CASE("noise-free AR forecast matches a hand rollout") {
    const ModelSpec spec{2, 0, 3, 2, 1};
    ParameterVector p = ParameterVector::zeros(spec);
    p.A[0] = Matrix(2, 2, {0.5, 0.1, -0.2, 0.3});
    p.A[1] = Matrix(2, 2, {0.1, 0.0, 0.05, -0.1});
    p.beta = {0.2, -0.4};
    p.gamma = {5.0};
    const auto y = history(8, 3, 11);
    ForecastOptions opt;
    opt.noise_free = true;
    const auto f = forecast(spec, Design::intercept(2), draws_from(spec, {p.pack()}), y, 6, opt);

    std::vector<std::vector<double>> a;
    for (const auto& c : y) a.push_back(alr(c));
    for (int h = 0; h < 6; ++h) {
        const std::size_t t = a.size();
        std::vector<double> eta(p.beta);
        for (int lag = 1; lag <= 2; ++lag) {
            const auto& prev = a[t - static_cast<std::size_t>(lag)];
            for (std::size_t r = 0; r < 2; ++r) {
                for (std::size_t c = 0; c < 2; ++c) {
                    eta[r] += p.A[static_cast<std::size_t>(lag - 1)](r, c) * (prev[c] - p.beta[c]);
                }
            }
        }
        const double denom = 1.0 + std::exp(eta[0]) + std::exp(eta[1]);
        const std::vector<double> mu{std::exp(eta[0]) / denom, std::exp(eta[1]) / denom, 1.0 / denom};
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(f.point[h][j] - mu[j]) < 1e-12);
        a.push_back(eta);
    }
}

TEST_CASE("draw order does not change the forecast") {
    const auto dgp = builtin_dgp("main");
    auto cfg = dgp;
    cfg.T = 40;
    const auto y = simulate(cfg);
    Rng rng(5);
    std::vector<std::vector<double>> thetas;
    for (int s = 0; s < 30; ++s) {
        auto t = dgp.truth.pack();
        for (auto& v : t) v += 0.01 * rng.normal();
        thetas.push_back(t);
    }
    const auto f1 = forecast(dgp.spec, dgp.design, draws_from(dgp.spec, thetas), y, 5);
    std::reverse(thetas.begin(), thetas.end());
    ForecastOptions opt;
    opt.jobs = 3;
    const auto f2 = forecast(dgp.spec, dgp.design, draws_from(dgp.spec, thetas), y, 5, opt);
    for (std::size_t h = 0; h < 5; ++h) {
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(f1.point[h][j] == doctest::Approx(f2.point[h][j]).epsilon(1e-14));
            CHECK(f1.q05[h][j] == f2.q05[h][j]);
            CHECK(f1.q95[h][j] == f2.q95[h][j]);
        }
    }
}

TEST_CASE("long horizon forecasts stay on the simplex") {
    const ModelSpec spec{1, 0, 11, 10, 1};
    Rng rng(17);
    std::vector<std::vector<double>> thetas;
    for (int s = 0; s < 20; ++s) {
        auto p = ParameterVector::zeros(spec);
        for (std::size_t k = 0; k < 10; ++k) p.A[0](k, k) = 0.5 + 0.1 * rng.normal();
        for (auto& b : p.beta) b = 0.3 * rng.normal();
        p.gamma = {std::log(300.0)};
        thetas.push_back(p.pack());
    }
    const auto f = forecast(spec, Design::intercept(10), draws_from(spec, thetas), history(30, 11, 2), 126);
    CHECK(f.horizon == 126u);
    CHECK(f.J == 11u);
    CHECK(f.draws == 20u);
    CHECK(f.trajectories.size() == 20u * 126u * 11u);
    for (std::size_t s = 0; s < f.draws; ++s) {
        for (std::size_t h = 0; h < f.horizon; ++h) {
            double sum = 0.0;
            for (std::size_t j = 0; j < f.J; ++j) {
                CHECK(f.value(s, h, j) > 0.0);
                sum += f.value(s, h, j);
            }
            CHECK(std::abs(sum - 1.0) < 1e-10);
        }
    }
    for (std::size_t h = 0; h < f.horizon; ++h) {
        for (std::size_t j = 0; j < f.J; ++j) {
            CHECK(f.q05[h][j] <= f.q50[h][j]);
            CHECK(f.q50[h][j] <= f.q95[h][j]);
        }
    }
}

TEST_CASE("non-finite draws are skipped and bad inputs rejected") {
    const ModelSpec spec{1, 0, 3, 2, 1};
    auto p = ParameterVector::zeros(spec);
    p.gamma = {4.0};
    auto bad = p.pack();
    bad[0] = std::nan("");
    const auto f = forecast(spec, Design::intercept(2), draws_from(spec, {p.pack(), bad}), history(5, 3, 1), 2);
    CHECK(f.draws == 1u);
    CHECK(f.skipped == 1u);
    CHECK_THROWS_AS(forecast(spec, Design::intercept(2), draws_from(spec, {p.pack()}), history(5, 3, 1), 0),
                    ValidationError);
    CHECK_THROWS_AS(forecast(spec, Design::intercept(2), draws_from(spec, {p.pack()}), history(5, 4, 1), 2),
                    ValidationError);
}

TEST_CASE("type-7 quantiles") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
    CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(quantile({0, 10}, 0.05) == doctest::Approx(0.5));
    CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);
}
