#pragma once

#include "bdarma/random.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace bdarma {

/// Smallest proportion kept after clamping sampled or ingested values.
inline constexpr double kCompositionFloor = 1e-12;
/// Tolerance on |sum - 1| accepted by Composition.
inline constexpr double kSimplexTolerance = 1e-10;

/// A point on the open J-simplex: J >= 2 strictly positive entries summing to one.
class Composition {
public:
    /// Validates and stores `values` as given. Throws ValidationError on a
    /// non-finite, non-positive, or non-normalized input.
    explicit Composition(std::vector<double> values);

    /// Clamps entries below kCompositionFloor, then renormalizes. Accepts any
    /// finite non-negative vector with a positive sum.
    static Composition normalized(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const { return values_[j]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

private:
    struct Unchecked {};
    Composition(std::vector<double> values, Unchecked) : values_(std::move(values)) {}
    friend Composition alr_inv(std::span<const double> v);

    std::vector<double> values_;
};

/// J-1 additive log-ratios against the last component.
using AlrVector = std::vector<double>;

struct DirichletParams {
    Composition mean;
    double precision;

    /// alpha_j = precision * mean_j
    std::vector<double> concentration() const;
};

/// (ln(c_1/c_J), ..., ln(c_{J-1}/c_J))
AlrVector alr(const Composition& c);

/// Inverse ALR with max-subtraction; never returns exact zeros.
Composition alr_inv(std::span<const double> v);

/// Log-density of Dirichlet(alpha) at y. If `grad_alpha` is non-empty it
/// receives d/d alpha_j = psi(sum alpha) - psi(alpha_j) + ln y_j.
double dirichlet_logpdf(const Composition& y, std::span<const double> alpha,
                        std::span<double> grad_alpha = {});

double dirichlet_logpdf(const Composition& y, const DirichletParams& p,
                        std::span<double> grad_alpha = {});

/// Per-component Gamma draws, normalized. Values are clamped at kCompositionFloor.
Composition dirichlet_sample(std::span<const double> alpha, Rng& rng);

Composition dirichlet_sample(const DirichletParams& p, Rng& rng);

namespace detail {

/// alr of a raw probability vector (no validation).
void alr_into(std::span<const double> y, std::span<double> out);

/// Inverse ALR into `mu` (size J) without constructing a Composition.
void alr_inv_into(std::span<const double> eta, std::span<double> mu);

}  // namespace detail

}  // namespace bdarma
