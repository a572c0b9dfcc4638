#include "doctest.h"
#include "helpers.hpp"

#include "bdarma/errors.hpp"
#include "bdarma/simplex.hpp"
#include "bdarma/special.hpp"

#include <cmath>
#include <limits>

using namespace bdarma;

TEST_CASE("special functions") {
    CHECK(std::abs(special::log_gamma(1.0)) < 1e-14);
    CHECK(special::log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-14));
    for (double x : {1e-8, 0.01, 0.3, 1.7, 4.5, 11.0, 123.4, 1e6}) {
        CHECK(std::abs(special::log_gamma(x) - std::lgamma(x)) <= 1e-12 * std::max(1.0, std::abs(std::lgamma(x))));
    }
    CHECK_THROWS_AS(special::log_gamma(0.0), DomainError);
    // psi(1) = -Euler gamma, psi(1/2) = -gamma - 2 ln 2
    const double euler = 0.57721566490153286061;
    CHECK(std::abs(special::digamma(1.0) + euler) < 1e-13);
    CHECK(std::abs(special::digamma(0.5) + euler + 2.0 * std::log(2.0)) < 1e-13);
    for (double x : {0.05, 0.7, 3.2, 40.0}) {
        const double h = 1e-5;
        const double fd = (std::lgamma(x + h) - std::lgamma(x - h)) / (2 * h);
        CHECK(std::abs(special::digamma(x) - fd) < 1e-7 * std::max(1.0, std::abs(fd)));
        // recurrence psi(x + 1) = psi(x) + 1/x
        CHECK(std::abs(special::digamma(x + 1) - special::digamma(x) - 1 / x) < 1e-12 * std::max(1.0, 1 / x));
    }
    for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999}) {
        CHECK(std::abs(special::normal_cdf(special::normal_quantile(p)) - p) < 1e-14 + 1e-12 * p);
    }
}

TEST_CASE("composition validation") {
    CHECK_NOTHROW(Composition({0.2, 0.8}));
    CHECK_THROWS_AS(Composition({1.0}), ValidationError);
    CHECK_THROWS_AS(Composition({0.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(Composition({0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(Composition({std::nan(""), 0.5}), ValidationError);
    const auto c = Composition::normalized({0.0, 2.0, 2.0});
    CHECK(c[0] > 0.0);
    CHECK(std::abs(c[0] + c[1] + c[2] - 1.0) < 1e-15);
}

TEST_CASE("alr examples") {
    const auto u = alr(Composition({1.0 / 3, 1.0 / 3, 1.0 / 3}));
    CHECK(std::abs(u[0]) < 1e-15);
    CHECK(std::abs(u[1]) < 1e-15);
    const auto v = alr(Composition({0.5, 0.25, 0.25}));
    CHECK(v[0] == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(v[1] == 0.0);

    const std::vector<double> zero{0.0, 0.0};
    const auto c = alr_inv(zero);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(c[j] - 1.0 / 3) < 1e-15);
    const std::vector<double> ln2{std::log(2.0), 0.0};
    const auto d = alr_inv(ln2);
    CHECK(std::abs(d[0] - 0.5) < 1e-15);
    CHECK(std::abs(d[1] - 0.25) < 1e-15);
    CHECK(std::abs(d[2] - 0.25) < 1e-15);

    const std::vector<double> big{700.0, 0.0};
    const auto e = alr_inv(big);
    CHECK(std::isfinite(e[0]));
    CHECK(e[0] < 1.0);
    CHECK(e[1] > 0.0);
    CHECK(e[2] > 0.0);
}

TEST_CASE("alr round trips") {
    Rng rng(17);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto c = testing::random_composition(rng, 2 + static_cast<std::size_t>(i % 9));
        const auto back = alr_inv(alr(c));
        for (std::size_t j = 0; j < c.size(); ++j) worst = std::max(worst, std::abs(back[j] - c[j]));
    }
    CHECK(worst < 1e-12);

    worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.uniform(-30.0, 30.0);
        const auto back = alr(alr_inv(v));
        for (std::size_t j = 0; j < v.size(); ++j) worst = std::max(worst, std::abs(back[j] - v[j]));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("dirichlet log-density examples") {
    const std::vector<double> ones{1.0, 1.0};
    CHECK(std::abs(dirichlet_logpdf(Composition({0.3, 0.7}), ones)) < 1e-14);
    const std::vector<double> twos{2.0, 2.0};
    CHECK(dirichlet_logpdf(Composition({0.5, 0.5}), twos) == doctest::Approx(std::log(1.5)).epsilon(1e-12));
    const std::vector<double> bad{1.0, 0.0};
    CHECK_THROWS_AS(dirichlet_logpdf(Composition({0.5, 0.5}), bad), DomainError);
    const DirichletParams p{Composition({0.5, 0.5}), 4.0};
    CHECK(dirichlet_logpdf(Composition({0.5, 0.5}), p) == doctest::Approx(std::log(1.5)).epsilon(1e-12));
}

TEST_CASE("dirichlet gradient matches finite differences") {
    Rng rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t J = trial < 10 ? 5 : 2 + static_cast<std::size_t>(trial % 6);
        const auto y = testing::random_composition(rng, J);
        std::vector<double> alpha(J);
        for (auto& a : alpha) a = rng.uniform(0.3, 20.0);
        std::vector<double> g(J);
        dirichlet_logpdf(y, alpha, g);
        const auto fd = testing::fd_gradient(
            [&](std::span<const double> a) { return dirichlet_logpdf(y, a); }, alpha, 1e-4);
        for (std::size_t j = 0; j < J; ++j) {
            worst = std::max(worst, std::abs(g[j] - fd[j]) / std::max(1e-3, std::abs(fd[j])));
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("dirichlet density integrates to one on the 2-simplex") {
    const std::vector<double> alpha{2.0, 2.0, 2.0};
    const int n = 400;
    const double h = 1.0 / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; i + j < n - 1; ++j) {
            // centroids of the two triangles in each grid cell
            const double x1 = (i + 1.0 / 3) * h, y1 = (j + 1.0 / 3) * h;
            total += 0.5 * h * h * std::exp(dirichlet_logpdf(Composition::normalized({x1, y1, 1 - x1 - y1}), alpha));
            const double x2 = (i + 2.0 / 3) * h, y2 = (j + 2.0 / 3) * h;
            total += 0.5 * h * h * std::exp(dirichlet_logpdf(Composition::normalized({x2, y2, 1 - x2 - y2}), alpha));
        }
        const int j = n - 1 - i;
        const double x1 = (i + 1.0 / 3) * h, y1 = (j + 1.0 / 3) * h;
        total += 0.5 * h * h * std::exp(dirichlet_logpdf(Composition::normalized({x1, y1, 1 - x1 - y1}), alpha));
    }
    CHECK(std::abs(total - 1.0) < 1e-3);
}

TEST_CASE("dirichlet sampling moments") {
    Rng rng(2024);
    const int N = 100000;
    SUBCASE("flat alpha means") {
        const std::vector<double> alpha(6, 1.0);
        std::vector<double> sum(6, 0.0);
        for (int i = 0; i < N; ++i) {
            const auto y = dirichlet_sample(alpha, rng);
            double s = 0.0;
            for (std::size_t j = 0; j < 6; ++j) {
                CHECK_MESSAGE(y[j] > 0.0, "non-positive share");
                sum[j] += y[j];
                s += y[j];
            }
            REQUIRE(std::abs(s - 1.0) < 1e-10);
        }
        const double var = 1.0 * 5.0 / (36.0 * 7.0);
        for (double s : sum) CHECK(std::abs(s / N - 1.0 / 6) < 3.0 * std::sqrt(var / N));
    }
    SUBCASE("variances") {
        const std::vector<double> alpha{2.0, 3.0, 4.0, 1.0};
        const double A = 10.0;
        std::vector<std::vector<double>> cols(4, std::vector<double>(N));
        for (int i = 0; i < N; ++i) {
            const auto y = dirichlet_sample(alpha, rng);
            for (std::size_t j = 0; j < 4; ++j) cols[j][i] = y[j];
        }
        for (std::size_t j = 0; j < 4; ++j) {
            const double m = alpha[j] / A;
            const double var = alpha[j] * (A - alpha[j]) / (A * A * (A + 1));
            double s2 = 0.0, m4 = 0.0;
            for (double v : cols[j]) {
                s2 += (v - m) * (v - m);
                m4 += std::pow(v - m, 4);
            }
            s2 /= N;
            m4 /= N;
            const double se = std::sqrt((m4 - s2 * s2) / N);
            CHECK(std::abs(s2 - var) < 3.0 * se);
        }
    }
    SUBCASE("determinism") {
        const std::vector<double> alpha{0.5, 2.0, 7.0};
        Rng a(99), b(99);
        for (int i = 0; i < 50; ++i) CHECK(dirichlet_sample(alpha, a).vector() == dirichlet_sample(alpha, b).vector());
    }
    SUBCASE("tiny shapes stay on the simplex") {
        const std::vector<double> alpha{0.001, 0.002, 0.01};
        for (int i = 0; i < 1000; ++i) {
            const auto y = dirichlet_sample(alpha, rng);
            CHECK(std::abs(y[0] + y[1] + y[2] - 1.0) < 1e-10);
            CHECK(std::min({y[0], y[1], y[2]}) > 0.0);
        }
    }
}
