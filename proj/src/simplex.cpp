#include "bdarma/simplex.hpp"

#include "bdarma/errors.hpp"
#include "bdarma/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bdarma {

namespace {

constexpr double kAlrInvFloor = 1e-300;

}  // namespace

Composition::Composition(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
        throw ValidationError("composition needs at least two components");
    }
    double sum = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw ValidationError("composition entry is not finite");
        }
        if (!(v > 0.0)) {
            throw ValidationError("composition entry is not strictly positive");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw ValidationError("composition does not sum to one");
    }
}

Composition Composition::normalized(std::vector<double> values) {
    if (values.size() < 2) {
        throw ValidationError("composition needs at least two components");
    }
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("cannot normalize a negative or non-finite entry");
        }
        sum += v;
    }
    if (!(sum > 0.0)) {
        throw ValidationError("cannot normalize a zero vector");
    }
    bool clamped = false;
    for (double& v : values) {
        v /= sum;
        if (v < kCompositionFloor) {
            v = kCompositionFloor;
            clamped = true;
        }
    }
    if (clamped) {
        const double total = std::accumulate(values.begin(), values.end(), 0.0);
        for (double& v : values) v /= total;
    }
    return Composition(std::move(values));
}

std::vector<double> DirichletParams::concentration() const {
    if (!(precision > 0.0) || !std::isfinite(precision)) {
        throw DomainError("Dirichlet precision must be positive and finite");
    }
    std::vector<double> alpha(mean.vector());
    for (double& a : alpha) a *= precision;
    return alpha;
}

namespace detail {

void alr_into(std::span<const double> y, std::span<double> out) {
    const double log_ref = std::log(y.back());
    for (std::size_t j = 0; j + 1 < y.size(); ++j) {
        out[j] = std::log(y[j]) - log_ref;
    }
}

void alr_inv_into(std::span<const double> eta, std::span<double> mu) {
    const std::size_t d = eta.size();
    double top = 0.0;  // reference logit
    for (double e : eta) top = std::max(top, e);
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        mu[j] = std::exp(eta[j] - top);
        sum += mu[j];
    }
    mu[d] = std::exp(-top);
    sum += mu[d];
    bool clamped = false;
    for (std::size_t j = 0; j <= d; ++j) {
        mu[j] /= sum;
        if (mu[j] < kAlrInvFloor) {
            mu[j] = kAlrInvFloor;
            clamped = true;
        }
    }
    if (clamped) {
        double total = 0.0;
        for (std::size_t j = 0; j <= d; ++j) total += mu[j];
        for (std::size_t j = 0; j <= d; ++j) mu[j] /= total;
    }
    // Open simplex: a dominant entry can round to exactly 1.
    for (std::size_t j = 0; j <= d; ++j) {
        if (mu[j] >= 1.0) mu[j] = std::nextafter(1.0, 0.0);
    }
}

}  // namespace detail

AlrVector alr(const Composition& c) {
    AlrVector out(c.size() - 1);
    detail::alr_into(c.values(), out);
    for (double v : out) {
        if (!std::isfinite(v)) {
            throw ValidationError("invalid composition: non-finite log-ratio");
        }
    }
    return out;
}

Composition alr_inv(std::span<const double> v) {
    if (v.empty()) {
        throw ValidationError("ALR vector must have at least one entry");
    }
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw ValidationError("ALR vector entry is not finite");
        }
    }
    std::vector<double> mu(v.size() + 1);
    detail::alr_inv_into(v, mu);
    return Composition(std::move(mu), Composition::Unchecked{});
}

double dirichlet_logpdf(const Composition& y, std::span<const double> alpha,
                        std::span<double> grad_alpha) {
    if (alpha.size() != y.size()) {
        throw ValidationError("Dirichlet concentration and composition differ in length");
    }
    double total = 0.0;
    double lp = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (!(alpha[j] > 0.0) || !std::isfinite(alpha[j])) {
            throw DomainError("Dirichlet concentration must be positive and finite");
        }
        total += alpha[j];
        lp += (alpha[j] - 1.0) * std::log(y[j]) - special::log_gamma(alpha[j]);
    }
    lp += special::log_gamma(total);
    if (!grad_alpha.empty()) {
        const double psi_total = special::digamma(total);
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            grad_alpha[j] = psi_total - special::digamma(alpha[j]) + std::log(y[j]);
        }
    }
    return lp;
}

double dirichlet_logpdf(const Composition& y, const DirichletParams& p,
                        std::span<double> grad_alpha) {
    const auto alpha = p.concentration();
    return dirichlet_logpdf(y, alpha, grad_alpha);
}

Composition dirichlet_sample(std::span<const double> alpha, Rng& rng) {
    if (alpha.size() < 2) {
        throw ValidationError("Dirichlet needs at least two components");
    }
    std::vector<double> logs(alpha.size());
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        logs[j] = rng.log_gamma_variate(alpha[j]);
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    std::vector<double> out(alpha.size());
    for (std::size_t j = 0; j < alpha.size(); ++j) out[j] = std::exp(logs[j] - top);
    return Composition::normalized(std::move(out));
}

Composition dirichlet_sample(const DirichletParams& p, Rng& rng) {
    const auto alpha = p.concentration();
    return dirichlet_sample(alpha, rng);
}

}  // namespace bdarma
