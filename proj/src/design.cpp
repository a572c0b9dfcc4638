#include "bdarma/design.hpp"

#include "bdarma/errors.hpp"

#include <cmath>
#include <numbers>

namespace bdarma {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (data_.size() != rows * cols) {
        throw ValidationError("matrix data does not match its shape");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Design Design::intercept(int dim) {
    if (dim < 1) throw ValidationError("design dimension must be at least one");
    return Design(Kind::Intercept, dim, FourierTerms{0, 5.0, 0, 252.0, false}, 0);
}

Design Design::fourier(int dim, FourierTerms terms, long day_offset) {
    if (dim < 1) throw ValidationError("design dimension must be at least one");
    if (terms.weekly_pairs < 0 || terms.annual_pairs < 0) {
        throw ValidationError("Fourier pair counts must be non-negative");
    }
    if (!(terms.weekly_period > 0.0) || !(terms.annual_period > 0.0)) {
        throw ValidationError("Fourier periods must be positive");
    }
    return Design(Kind::Fourier, dim, terms, day_offset);
}

int Design::mean_feature_count() const {
    return 1 + (kind_ == Kind::Fourier ? terms_.seasonal_columns() : 0);
}

int Design::r_gamma() const {
    if (kind_ == Kind::Fourier && terms_.seasonal_precision) {
        return 1 + terms_.seasonal_columns();
    }
    return 1;
}

void Design::seasonal_columns(long t, std::span<double> out) const {
    const double day = static_cast<double>(t + day_offset_);
    std::size_t col = 0;
    auto emit = [&](int pairs, double period) {
        for (int n = 1; n <= pairs; ++n) {
            const double angle = 2.0 * std::numbers::pi * n * day / period;
            out[col++] = std::sin(angle);
            out[col++] = std::cos(angle);
        }
    };
    emit(terms_.weekly_pairs, terms_.weekly_period);
    emit(terms_.annual_pairs, terms_.annual_period);
}

void Design::mean_features(long t, std::span<double> out) const {
    out[0] = 1.0;
    if (kind_ == Kind::Fourier) seasonal_columns(t, out.subspan(1));
}

void Design::precision_features(long t, std::span<double> out) const {
    out[0] = 1.0;
    if (kind_ == Kind::Fourier && terms_.seasonal_precision) seasonal_columns(t, out.subspan(1));
}

std::vector<double> Design::mean_features(long t) const {
    std::vector<double> out(static_cast<std::size_t>(mean_feature_count()));
    mean_features(t, out);
    return out;
}

std::vector<double> Design::precision_features(long t) const {
    std::vector<double> out(static_cast<std::size_t>(r_gamma()));
    precision_features(t, out);
    return out;
}

Matrix Design::x_matrix(long t) const {
    const auto f = mean_features(t);
    const std::size_t nf = f.size();
    Matrix x(static_cast<std::size_t>(dim_), static_cast<std::size_t>(r_beta()));
    for (std::size_t k = 0; k < static_cast<std::size_t>(dim_); ++k) {
        for (std::size_t c = 0; c < nf; ++c) x(k, k * nf + c) = f[c];
    }
    return x;
}

Design Design::shifted(long shift) const {
    Design out = *this;
    out.day_offset_ += shift;
    return out;
}

std::string Design::name() const {
    return kind_ == Kind::Intercept ? "intercept" : "fourier";
}

}  // namespace bdarma
