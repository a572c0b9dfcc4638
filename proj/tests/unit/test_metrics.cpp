#include "doctest.h"

#include "bdarma/errors.hpp"
#include "bdarma/metrics.hpp"
#include "bdarma/random.hpp"

#include <algorithm>
#include <cmath>

using namespace bdarma;

namespace {

struct Inputs {
    std::vector<std::vector<double>> est;
    std::vector<std::vector<Interval>> iv;
    std::vector<double> truth;
    std::vector<std::string> names;
};

Inputs random_inputs(Rng& rng, std::size_t S, std::size_t C) {
    Inputs in;
    for (std::size_t j = 0; j < C; ++j) {
        in.truth.push_back(rng.normal());
        in.names.push_back((j % 2 ? "A1[" : "B1[") + std::to_string(j + 1) + "]");
    }
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> e;
        std::vector<Interval> iv;
        for (std::size_t j = 0; j < C; ++j) {
            const double v = in.truth[j] + 0.3 + rng.normal();
            e.push_back(v);
            const double w = rng.uniform(0.1, 2.0);
            iv.emplace_back(v - w, v + w);
        }
        in.est.push_back(e);
        in.iv.push_back(iv);
    }
    return in;
}

}  // namespace

TEST_CASE("squared RMSE minus squared bias is the estimator variance") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto S = static_cast<std::size_t>(2 + trial % 9);
        const auto in = random_inputs(rng, S, 7);
        const auto r = recovery_metrics(in.est, in.iv, in.truth, in.names);
        for (std::size_t j = 0; j < 7; ++j) {
            double mean = 0.0;
            for (std::size_t s = 0; s < S; ++s) mean += in.est[s][j];
            mean /= static_cast<double>(S);
            double var = 0.0;
            for (std::size_t s = 0; s < S; ++s) var += (in.est[s][j] - mean) * (in.est[s][j] - mean);
            var /= static_cast<double>(S);
            CHECK(std::abs(r.rmse[j] * r.rmse[j] - r.bias[j] * r.bias[j] - var) < 1e-12);
        }
    }
}

TEST_CASE("recovery examples") {
    const std::vector<double> truth{1.0, 0.0};
    const std::vector<std::vector<double>> est{{1.5, 0.0}, {0.5, 0.2}};
    const std::vector<std::vector<Interval>> iv{{{0.0, 2.0}, {0.1, 0.3}}, {{0.9, 1.1}, {-0.2, 0.0}}};
    const auto r = recovery_metrics(est, iv, truth, {"A1[1,1]", "beta[1]"});
    CHECK(r.bias[0] == doctest::Approx(0.0));
    CHECK(r.rmse[0] == doctest::Approx(0.5));
    CHECK(r.interval_length[0] == doctest::Approx(1.1));
    CHECK(r.coverage[0] == doctest::Approx(1.0));
    // closed endpoint counts as covered
    CHECK(r.coverage[1] == doctest::Approx(0.5));
    CHECK(r.blocks.at("A1").count == 1u);
    CHECK(r.blocks.at("beta").mean_rmse == doctest::Approx(std::sqrt(0.02)));
}

TEST_CASE("coverage extremes") {
    const std::vector<double> truth{0.0};
    std::vector<std::vector<double>> est(4, {0.0});
    std::vector<std::vector<Interval>> inside(4, {{-1.0, 1.0}});
    std::vector<std::vector<Interval>> outside(4, {{0.5, 1.0}});
    CHECK(recovery_metrics(est, inside, truth, {"x"}).coverage[0] == 1.0);
    CHECK(recovery_metrics(est, outside, truth, {"x"}).coverage[0] == 0.0);
}

TEST_CASE("metrics ignore replicate order") {
    Rng rng(8);
    auto in = random_inputs(rng, 9, 5);
    const auto a = recovery_metrics(in.est, in.iv, in.truth, in.names);
    std::reverse(in.est.begin(), in.est.end());
    std::reverse(in.iv.begin(), in.iv.end());
    const auto b = recovery_metrics(in.est, in.iv, in.truth, in.names);
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(a.bias[j] == doctest::Approx(b.bias[j]).epsilon(1e-14));
        CHECK(a.rmse[j] == doctest::Approx(b.rmse[j]).epsilon(1e-14));
        CHECK(a.coverage[j] == b.coverage[j]);
    }
}

TEST_CASE("recovery shape errors") {
    CHECK_THROWS_AS(recovery_metrics({}, {}, {1.0}, {"x"}), ValidationError);
    CHECK_THROWS_AS(recovery_metrics({{1.0, 2.0}}, {{{0, 1}}}, {1.0}, {"x"}), ValidationError);
}

TEST_CASE("block names") {
    CHECK(block_of("A1[2,3]") == "A1");
    CHECK(block_of("beta[4]") == "beta");
    CHECK(block_of("tau") == "tau");
}

TEST_CASE("forecast errors") {
    const ForecastArray actual{{{0.5, 0.5}, {0.2, 0.8}}, {{0.1, 0.9}, {0.3, 0.7}}};
    const ForecastArray fc{{{0.6, 0.4}, {0.2, 0.8}}, {{0.1, 0.9}, {0.5, 0.5}}};
    // squared errors 0.01, 0.01, 0, 0 | 0, 0, 0.04, 0.04
    CHECK(forecast_rmse(actual, fc) == doctest::Approx(std::sqrt(0.1 / 8.0)));
    CHECK(forecast_mae(actual, fc) == doctest::Approx(0.6 / 8.0));
    const auto s = forecast_summary(actual, fc);
    CHECK(s.replicates == 2u);
    CHECK(s.m_rmse == doctest::Approx((std::sqrt(0.005) + std::sqrt(0.02)) / 2.0));
    CHECK(s.sd_rmse == doctest::Approx(std::abs(std::sqrt(0.005) - std::sqrt(0.02)) / std::sqrt(2.0)));
    CHECK(forecast_rmse(actual, actual) == 0.0);
    CHECK_THROWS_AS(forecast_rmse(actual, ForecastArray{fc[0]}), ValidationError);
}

TEST_CASE("ratio tables") {
    MetricCells cells{{{"S1", "informative"}, 0.0313}, {{"S2", "informative"}, 0.0324},
                      {{"S1", "horseshoe"}, 0.0310},   {{"S2", "horseshoe"}, 0.0305},
                      {{"S1", "laplace"}, 0.0313}};
    const auto r = ratio_tables(cells, {"informative", "horseshoe", "laplace"}, {"S1", "S2"}, {{"S2", "S1"}});
    REQUIRE(r.cross.size() == 1u);
    CHECK(r.cross[0].label == "S2/S1");
    CHECK(*r.cross[0].by_prior.at("informative") == doctest::Approx(0.0324 / 0.0313).epsilon(1e-14));
    CHECK(*r.cross[0].by_prior.at("horseshoe") == doctest::Approx(0.0305 / 0.0310).epsilon(1e-14));
    CHECK_FALSE(r.cross[0].by_prior.at("laplace").has_value());

    REQUIRE(r.within.size() == 2u);
    CHECK(*r.within[0].by_prior.at("horseshoe") == 1.0);
    CHECK(*r.within[0].by_prior.at("laplace") == doctest::Approx(0.0313 / 0.0310));
    CHECK(*r.within[1].by_prior.at("horseshoe") == 1.0);
    CHECK_FALSE(r.within[1].by_prior.at("laplace").has_value());
    double lowest = 10.0;
    for (const auto& [_, v] : r.within[0].by_prior) lowest = std::min(lowest, v.value_or(10.0));
    CHECK(lowest == 1.0);
}
