#pragma once

#include "bdarma/matrix.hpp"

#include <span>
#include <string>
#include <vector>

namespace bdarma {

/// Sine/cosine seasonal terms; one (sin, cos) pair per harmonic.
struct FourierTerms {
    int weekly_pairs = 2;
    double weekly_period = 5.0;
    int annual_pairs = 5;
    double annual_period = 252.0;
    /// When set, the precision link gets the same seasonal columns as the mean.
    bool seasonal_precision = true;

    int seasonal_columns() const { return 2 * (weekly_pairs + annual_pairs); }
};

/// Deterministic covariate providers X_t and z_t.
///
/// The mean design is block-structured: X_t = I_{J-1} (x) f_t', where f_t is a
/// per-day feature row starting with an intercept. Each ALR component therefore
/// owns its own block of f_t.size() coefficients in beta, laid out component-major.
/// With f_t = (1) this is X_t = I_{J-1}, a per-component intercept.
class Design {
public:
    enum class Kind { Intercept, Fourier };

    /// X_t = I_dim, z_t = (1).
    static Design intercept(int dim);

    /// Intercept + seasonal columns per ALR component; z_t = intercept (+ seasonal).
    /// `day_offset` is the trading-day index of series position t = 0.
    static Design fourier(int dim, FourierTerms terms, long day_offset = 0);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    int mean_feature_count() const;
    int r_beta() const { return dim_ * mean_feature_count(); }
    int r_gamma() const;
    const FourierTerms& fourier_terms() const noexcept { return terms_; }
    long day_offset() const noexcept { return day_offset_; }

    void mean_features(long t, std::span<double> out) const;
    void precision_features(long t, std::span<double> out) const;

    std::vector<double> mean_features(long t) const;
    std::vector<double> precision_features(long t) const;

    /// Dense (J-1) x r_beta view of X_t.
    Matrix x_matrix(long t) const;

    /// Same design with t = 0 moved to `shift` positions later (used for test windows).
    Design shifted(long shift) const;

    std::string name() const;

private:
    Design(Kind kind, int dim, FourierTerms terms, long day_offset)
        : kind_(kind), dim_(dim), terms_(terms), day_offset_(day_offset) {}

    void seasonal_columns(long t, std::span<double> out) const;

    Kind kind_;
    int dim_;
    FourierTerms terms_;
    long day_offset_;
};

}  // namespace bdarma
