#include "doctest.h"
#include "helpers.hpp"

#include "bdarma/errors.hpp"
#include "bdarma/model.hpp"
#include "bdarma/simulator.hpp"

#include <cmath>

using namespace bdarma;

namespace {

ModelSpec intercept_spec(int P, int Q, int J) {
    return ModelSpec::for_design(P, Q, J, Design::intercept(J - 1));
}

ParameterVector random_params(const ModelSpec& spec, Rng& rng, double scale) {
    auto p = ParameterVector::zeros(spec);
    for (auto& A : p.A) {
        for (auto& v : A.data()) v = rng.uniform(-scale, scale);
    }
    for (auto& B : p.B) {
        for (auto& v : B.data()) v = rng.uniform(-scale, scale);
    }
    for (auto& b : p.beta) b = rng.uniform(-0.3, 0.3);
    p.gamma[0] = rng.uniform(2.0, 5.0);
    for (std::size_t i = 1; i < p.gamma.size(); ++i) p.gamma[i] = rng.uniform(-0.2, 0.2);
    return p;
}

std::vector<Composition> random_series(Rng& rng, std::size_t T, std::size_t J) {
    std::vector<Composition> out;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> a(J, 8.0);
        out.push_back(dirichlet_sample(a, rng));
    }
    return out;
}

// Straight-line transcription of the recursion used as a second implementation.
std::vector<std::vector<double>> reference_eta(const ModelSpec& spec, const ParameterVector& p,
                                               const std::vector<Composition>& y) {
    const int d = spec.dim();
    const int m = spec.m();
    std::vector<std::vector<double>> a(y.size()), eta(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) a[t] = alr(y[t]);
    for (int t = 0; t < static_cast<int>(y.size()); ++t) {
        if (t < m) {
            eta[t] = a[t];
            continue;
        }
        std::vector<double> e(d);
        for (int k = 0; k < d; ++k) e[k] = p.beta[k];
        for (int pp = 1; pp <= spec.P; ++pp) {
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) e[r] += p.A[pp - 1](r, c) * (a[t - pp][c] - p.beta[c]);
            }
        }
        for (int q = 1; q <= spec.Q; ++q) {
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) e[r] += p.B[q - 1](r, c) * (a[t - q][c] - eta[t - q][c]);
            }
        }
        eta[t] = e;
    }
    return eta;
}

}  // namespace

TEST_CASE("parameter counts") {
    CHECK(count_parameters({10, 0, 11, 150, 15}) == 1165u);
    CHECK(count_parameters({0, 0, 2, 3, 1}) == 4u);
    CHECK(count_parameters({2, 1, 6, 5, 1}) == 81u);
    const auto app = ModelSpec::for_design(10, 0, 11, Design::fourier(10, FourierTerms{}));
    CHECK(app.r_beta == 150);
    CHECK(app.r_gamma == 15);
    CHECK(count_parameters(app) == 1165u);
    CHECK_THROWS_AS(ModelSpec({-1, 0, 3, 2, 1}).validate(), ValidationError);
    CHECK_THROWS_AS(ModelSpec({1, 0, 3, 2, 0}).validate(), ValidationError);
}

TEST_CASE("pack and unpack round trip") {
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const auto spec = intercept_spec(i % 4, i % 3, 3 + i % 4);
        std::vector<double> flat(count_parameters(spec));
        for (auto& v : flat) v = rng.normal();
        const auto p = ParameterVector::unpack(spec, flat);
        REQUIRE(p.pack() == flat);
    }
}

TEST_CASE("linear predictor examples") {
    const auto spec = intercept_spec(1, 0, 2);
    auto p = ParameterVector::zeros(spec);
    p.A[0](0, 0) = 0.5;
    const Design design = Design::intercept(1);
    const std::vector<AlrVector> hist{{0.4}};
    const auto eta = linear_predictor(spec, p, design, hist, {}, 1);
    CHECK(std::abs(eta[0] - 0.2) < 1e-15);

    SUBCASE("zero dynamics reduce to X beta") {
        const auto s = intercept_spec(2, 1, 4);
        auto q = ParameterVector::zeros(s);
        q.beta = {0.3, -0.2, 0.7};
        const std::vector<AlrVector> h(5, AlrVector{1.0, 2.0, 3.0});
        const auto e = linear_predictor(s, q, Design::intercept(3), h, h, 4);
        CHECK(e == q.beta);
    }
    SUBCASE("missing history") {
        CHECK_THROWS_AS(linear_predictor(spec, p, design, {}, {}, 1), std::out_of_range);
    }
    SUBCASE("main DGP against a straight-line transcription") {
        const auto dgp = builtin_dgp("main");
        Rng rng(12);
        const auto y = random_series(rng, 4, 6);
        const auto ref = reference_eta(dgp.spec, dgp.truth, y);
        std::vector<AlrVector> a, e;
        for (std::size_t t = 0; t < 3; ++t) {
            a.push_back(alr(y[t]));
            e.push_back(ref[t]);
        }
        const auto eta3 = linear_predictor(dgp.spec, dgp.truth, dgp.design, a, e, 3);
        for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(eta3[k] - ref[3][k]) < 1e-14);
    }
}

TEST_CASE("precision link") {
    auto p = ParameterVector::zeros({0, 0, 3, 2, 1});
    p.gamma = {7.0};
    const Design design = Design::intercept(2);
    CHECK(precision_at(p, design, 0) == doctest::Approx(1096.633).epsilon(1e-6));
    CHECK(precision_at(p, design, 5) == precision_at(p, design, 50));
    p.gamma = {701.0};
    CHECK_THROWS_AS(precision_at(p, design, 0), DomainError);

    const Design fourier = Design::fourier(2, FourierTerms{});
    auto q = ParameterVector::zeros(ModelSpec::for_design(0, 0, 3, fourier));
    q.gamma[0] = 1.3;
    CHECK(precision_at(q, fourier, 17) == doctest::Approx(std::exp(1.3)).epsilon(1e-14));
}

TEST_CASE("log-likelihood reduces to iid Dirichlet terms") {
    Rng rng(5);
    const auto spec = intercept_spec(0, 0, 4);
    const auto y = random_series(rng, 20, 4);
    const auto p = ParameterVector::zeros(spec);
    double expected = 0.0;
    const std::vector<double> alpha(4, 0.25);
    for (const auto& c : y) expected += dirichlet_logpdf(c, alpha);
    CHECK(log_likelihood(spec, p, Design::intercept(3), y) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("log-likelihood agrees with the reference recursion") {
    Rng rng(6);
    const auto spec = intercept_spec(2, 2, 5);
    const auto p = random_params(spec, rng, 0.2);
    const auto y = random_series(rng, 25, 5);
    const auto eta = reference_eta(spec, p, y);
    double expected = 0.0;
    const double phi = std::exp(p.gamma[0]);
    for (std::size_t t = 2; t < y.size(); ++t) {
        const auto mu = alr_inv(eta[t]);
        std::vector<double> alpha(5);
        for (std::size_t j = 0; j < 5; ++j) alpha[j] = phi * mu[j];
        expected += dirichlet_logpdf(y[t], alpha);
    }
    const Design design = Design::intercept(4);
    const double structured = log_likelihood(spec, p, design, y);
    const LikelihoodEvaluator eval(spec, design, y);
    const double flat = eval.evaluate(p.pack());
    CHECK(std::abs(structured - expected) < 1e-10 * std::abs(expected));
    CHECK(std::abs(structured - flat) <= 1e-14 * std::abs(flat));
}

TEST_CASE("likelihood gradient matches finite differences") {
    Rng rng(31);
    double worst = 0.0;
    SUBCASE("B-DARMA(2,1), J=4, T=30") {
        const auto spec = intercept_spec(2, 1, 4);
        const auto y = random_series(rng, 30, 4);
        const LikelihoodEvaluator eval(spec, Design::intercept(3), y);
        const auto theta = random_params(spec, rng, 0.3).pack();
        std::vector<double> g(theta.size());
        eval.evaluate(theta, g);
        const auto fd = testing::fd_gradient([&](std::span<const double> x) { return eval.evaluate(x); }, theta);
        worst = testing::max_rel_error(g, fd);
        CHECK(worst < 1e-5);
    }
    SUBCASE("twenty random shapes") {
        for (int i = 0; i < 20; ++i) {
            const int J = i % 2 == 0 ? 3 : 6;
            const int P = static_cast<int>(rng.next_u64() % 5);
            const int Q = static_cast<int>(rng.next_u64() % 3);
            const auto spec = intercept_spec(P, Q, J);
            const auto y = random_series(rng, 20 + static_cast<std::size_t>(P + Q), static_cast<std::size_t>(J));
            const LikelihoodEvaluator eval(spec, Design::intercept(J - 1), y);
            const auto theta = random_params(spec, rng, 0.15).pack();
            std::vector<double> g(theta.size());
            eval.evaluate(theta, g);
            const auto fd = testing::fd_gradient([&](std::span<const double> x) { return eval.evaluate(x); }, theta);
            worst = std::max(worst, testing::max_rel_error(g, fd));
        }
        CHECK(worst < 1e-5);
    }
    SUBCASE("seasonal design") {
        const Design design = Design::fourier(3, FourierTerms{}, 3);
        const auto spec = ModelSpec::for_design(2, 1, 4, design);
        const auto y = random_series(rng, 40, 4);
        const LikelihoodEvaluator eval(spec, design, y);
        auto theta = random_params(spec, rng, 0.2).pack();
        std::vector<double> g(theta.size());
        eval.evaluate(theta, g);
        const auto fd = testing::fd_gradient([&](std::span<const double> x) { return eval.evaluate(x); }, theta);
        CHECK(testing::max_rel_error(g, fd) < 1e-5);
    }
}

TEST_CASE("moving-average terms propagate perturbations") {
    Rng rng(41);
    const std::size_t T = 15, t0 = 5;
    auto y = random_series(rng, T, 3);
    auto perturbed = y;
    perturbed[t0] = Composition({0.2, 0.3, 0.5});

    SUBCASE("Q >= 1 reaches every later step") {
        const auto spec = intercept_spec(1, 1, 3);
        const auto theta = random_params(spec, rng, 0.3).pack();
        const auto a = LikelihoodEvaluator(spec, Design::intercept(2), y).linear_predictors(theta);
        const auto b = LikelihoodEvaluator(spec, Design::intercept(2), perturbed).linear_predictors(theta);
        for (std::size_t t = t0 + 1; t < T; ++t) CHECK(a[t] != b[t]);
    }
    SUBCASE("pure AR(1) touches only the next step") {
        const auto spec = intercept_spec(1, 0, 3);
        const auto theta = random_params(spec, rng, 0.3).pack();
        const auto a = LikelihoodEvaluator(spec, Design::intercept(2), y).linear_predictors(theta);
        const auto b = LikelihoodEvaluator(spec, Design::intercept(2), perturbed).linear_predictors(theta);
        CHECK(a[t0 + 1] != b[t0 + 1]);
        for (std::size_t t = t0 + 2; t < T; ++t) CHECK(a[t] == b[t]);
    }
}

TEST_CASE("likelihood errors name the time index") {
    const auto spec = intercept_spec(1, 0, 3);
    Rng rng(2);
    const auto y = random_series(rng, 10, 3);
    const LikelihoodEvaluator eval(spec, Design::intercept(2), y);
    auto theta = ParameterVector::zeros(spec).pack();
    theta.back() = 800.0;
    try {
        eval.evaluate(theta);
        FAIL("expected a likelihood error");
    } catch (const LikelihoodError& e) {
        CHECK(e.time_index() == 1);
    }
}

TEST_CASE("true parameters beat perturbed ones") {
    auto dgp = builtin_dgp("main");
    Rng rng(77);
    int wins = 0, wins_zero = 0;
    for (int trial = 0; trial < 100; ++trial) {
        dgp.seed = 1000 + static_cast<std::uint64_t>(trial);
        const auto y = simulate(dgp);
        const LikelihoodEvaluator eval(dgp.spec, dgp.design, y);
        const auto truth = dgp.truth.pack();
        auto noisy = truth;
        for (auto& v : noisy) v += 0.5 * rng.normal();
        const double at_truth = eval.evaluate(truth);
        double at_noise;
        try {
            at_noise = eval.evaluate(noisy);
        } catch (const LikelihoodError&) {
            at_noise = -INFINITY;
        }
        wins += at_truth > at_noise;
        const std::vector<double> zero(truth.size(), 0.0);
        wins_zero += at_truth > eval.evaluate(zero);
    }
    CHECK(wins >= 95);
    CHECK(wins_zero >= 95);
}
