#include "bdarma/errors.hpp"
#include "bdarma/sampler.hpp"
#include "bdarma/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bdarma {

namespace {

using Chains = std::vector<std::vector<double>>;

void check_chains(std::span<const std::vector<double>> chains) {
    if (chains.size() < 2) throw ValidationError("R-hat needs at least two chains");
    const std::size_t n = chains.front().size();
    if (n < 4) throw ValidationError("R-hat needs at least four draws per chain");
    for (const auto& c : chains) {
        if (c.size() != n) throw ValidationError("chains differ in length");
    }
}

bool is_constant(const Chains& chains) {
    const double first = chains.front().front();
    for (const auto& c : chains) {
        for (double v : c) {
            if (v != first) return false;
        }
    }
    return true;
}

Chains split_halves(std::span<const std::vector<double>> chains) {
    const std::size_t half = chains.front().size() / 2;
    const std::size_t n = chains.front().size();
    Chains out;
    for (const auto& c : chains) {
        out.emplace_back(c.begin(), c.begin() + static_cast<long>(half));
        out.emplace_back(c.begin() + static_cast<long>(n - half), c.end());
    }
    return out;
}

/// z = Phi^{-1}((r - 3/8) / (S + 1/4)) with average ranks for ties, pooled over chains.
Chains rank_normalize(const Chains& chains) {
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t c = 0; c < chains.size(); ++c) {
        for (std::size_t i = 0; i < chains[c].size(); ++i) {
            pooled.emplace_back(chains[c][i], c * chains[c].size() + i);
        }
    }
    std::sort(pooled.begin(), pooled.end());
    const double S = static_cast<double>(pooled.size());
    std::vector<double> z(pooled.size());
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j + 1 < pooled.size() && pooled[j + 1].first == pooled[i].first) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        const double v = special::normal_quantile((rank - 0.375) / (S + 0.25));
        for (std::size_t k = i; k <= j; ++k) z[pooled[k].second] = v;
        i = j + 1;
    }
    Chains out(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const std::size_t n = chains[c].size();
        out[c].assign(z.begin() + static_cast<long>(c * n), z.begin() + static_cast<long>((c + 1) * n));
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double rhat_basic(const Chains& chains) {
    const double n = static_cast<double>(chains.front().size());
    std::vector<double> means;
    std::vector<double> vars;
    for (const auto& c : chains) {
        means.push_back(mean_of(c));
        vars.push_back(sample_var(c));
    }
    const double B = n * sample_var(means);
    const double W = mean_of(vars);
    if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double var_plus = (n - 1.0) / n * W + B / n;
    return std::sqrt(var_plus / W);
}

double ess_basic(const Chains& chains) {
    const std::size_t M = chains.size();
    const std::size_t n = chains.front().size();
    std::vector<double> means(M);
    for (std::size_t c = 0; c < M; ++c) means[c] = mean_of(chains[c]);

    auto acov_mean = [&](std::size_t lag) {
        double total = 0.0;
        for (std::size_t c = 0; c < M; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) {
                s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
            }
            total += s / static_cast<double>(n);
        }
        return total / static_cast<double>(M);
    };

    const double nd = static_cast<double>(n);
    const double mean_var = acov_mean(0) * nd / (nd - 1.0);
    double var_plus = mean_var * (nd - 1.0) / nd;
    if (M > 1) var_plus += sample_var(means);
    if (var_plus <= 0.0) return static_cast<double>(M * n);

    std::vector<double> rho(n + 1, 0.0);
    double rho_even = 1.0;
    double rho_odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
    rho[0] = rho_even;
    rho[1] = rho_odd;
    std::size_t s = 1;
    while (s + 4 < n && rho_even + rho_odd > 0.0) {
        rho_even = 1.0 - (mean_var - acov_mean(s + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - acov_mean(s + 2)) / var_plus;
        if (rho_even + rho_odd >= 0.0) {
            rho[s + 1] = rho_even;
            rho[s + 2] = rho_odd;
        }
        s += 2;
    }
    const std::size_t max_s = s;
    if (rho_even > 0.0) rho[max_s + 1] = rho_even;

    for (std::size_t k = 1; k + 3 <= max_s; k += 2) {
        if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
            rho[k + 1] = 0.5 * (rho[k - 1] + rho[k]);
            rho[k + 2] = rho[k + 1];
        }
    }
    const double total = static_cast<double>(M * n);
    double tau = -1.0 + 2.0 * std::accumulate(rho.begin(), rho.begin() + static_cast<long>(max_s + 1), 0.0) +
                 rho[max_s + 1];
    tau = std::max(tau, 1.0 / std::log10(total));
    return total / tau;
}

}  // namespace

double split_rhat(std::span<const std::vector<double>> chains) {
    check_chains(chains);
    const Chains split = split_halves(chains);
    if (is_constant(split)) return 1.0;
    const double bulk = rhat_basic(rank_normalize(split));

    std::vector<double> pooled;
    for (const auto& c : split) pooled.insert(pooled.end(), c.begin(), c.end());
    std::nth_element(pooled.begin(), pooled.begin() + static_cast<long>(pooled.size() / 2), pooled.end());
    double median = pooled[pooled.size() / 2];
    if (pooled.size() % 2 == 0) {
        const double lower = *std::max_element(pooled.begin(), pooled.begin() + static_cast<long>(pooled.size() / 2));
        median = 0.5 * (median + lower);
    }
    Chains folded = split;
    for (auto& c : folded) {
        for (auto& v : c) v = std::abs(v - median);
    }
    const double tail = rhat_basic(rank_normalize(folded));
    return std::max({1.0, bulk, tail});
}

double ess_bulk(std::span<const std::vector<double>> chains) {
    check_chains(chains);
    const Chains split = split_halves(chains);
    if (is_constant(split)) return static_cast<double>(split.size() * split.front().size());
    return ess_basic(rank_normalize(split));
}

Convergence diagnostics(const PosteriorDraws& draws) {
    if (draws.chains < 2) throw ValidationError("R-hat unavailable for a single chain");
    Convergence out;
    out.rhat.reserve(draws.dim);
    out.ess.reserve(draws.dim);
    for (std::size_t k = 0; k < draws.dim; ++k) {
        const auto chains = draws.chains_of(k);
        out.rhat.push_back(split_rhat(chains));
        out.ess.push_back(ess_bulk(chains));
    }
    return out;
}

}  // namespace bdarma
