#pragma once

#include "bdarma/random.hpp"
#include "bdarma/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace testing {

inline bdarma::Composition random_composition(bdarma::Rng& rng, std::size_t J) {
    std::vector<double> a(J, 1.0);
    return bdarma::dirichlet_sample(a, rng);
}

/// Fourth-order central differences of f at x with step h.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x, double h = 1e-4) {
    std::vector<double> g(x.size());
    auto at = [&](std::size_t i, double v) {
        const double keep = x[i];
        x[i] = v;
        const double out = f(x);
        x[i] = keep;
        return out;
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = x[i];
        g[i] = (-at(i, c + 2 * h) + 8 * at(i, c + h) - 8 * at(i, c - h) + at(i, c - 2 * h)) / (12.0 * h);
    }
    return g;
}

/// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
inline double max_rel_error(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

}  // namespace testing
