#pragma once

#include "bdarma/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bdarma {

/// Differentiable log-density over unconstrained reals.
///
/// Implementations may keep scratch state; the sampler clones one instance per
/// chain. A non-finite return value marks the point as outside the support.
class LogDensity {
public:
    virtual ~LogDensity() = default;

    virtual std::size_t dim() const = 0;
    /// Fills `grad` (size dim()) and returns log p(u) up to a constant.
    virtual double log_density(std::span<const double> u, std::span<double> grad) const = 0;
    virtual std::unique_ptr<LogDensity> clone() const = 0;

    /// Values recorded per draw; identity by default.
    virtual std::vector<double> constrain(std::span<const double> u) const {
        return {u.begin(), u.end()};
    }
    virtual std::vector<std::string> output_names() const;
};

struct SamplerConfig {
    int chains = 4;
    int warmup = 500;
    int sampling = 750;
    double target_accept = 0.85;
    int max_treedepth = 11;
    double init_range = 0.25;
    std::uint64_t seed = 1;
    /// Energy error above which a trajectory is flagged divergent.
    double max_energy_error = 1000.0;
    /// Worker threads for chains; 0 means one per chain.
    int jobs = 1;

    void validate() const;
};

struct ChainInfo {
    int divergences = 0;
    double step_size = 0.0;
    std::vector<double> inv_metric;
    double mean_accept = 0.0;
    double mean_treedepth = 0.0;
    int max_treedepth_hits = 0;
    std::uint64_t gradient_evaluations = 0;
};

/// Draws are stored chain-major: value(c, i, k).
struct PosteriorDraws {
    std::vector<std::string> names;
    std::size_t chains = 0;
    std::size_t iterations = 0;
    std::size_t dim = 0;
    std::vector<double> values;
    std::vector<ChainInfo> chain_info;
    std::vector<double> rhat;
    std::vector<double> ess;

    double value(std::size_t c, std::size_t i, std::size_t k) const {
        return values[(c * iterations + i) * dim + k];
    }
    std::span<const double> draw(std::size_t c, std::size_t i) const {
        return std::span<const double>(values).subspan((c * iterations + i) * dim, dim);
    }
    /// Parameter k across all chains, chain after chain.
    std::vector<double> column(std::size_t k) const;
    /// Parameter k split per chain.
    std::vector<std::vector<double>> chains_of(std::size_t k) const;

    int total_divergences() const;
    double divergence_rate() const;
    /// True when more than 20% of transitions diverged.
    bool divergence_flagged() const { return divergence_rate() > 0.2; }
};

using ProgressCallback = std::function<void(const std::string&)>;

/// Multi-chain adaptive HMC with multinomial tree doubling.
PosteriorDraws sample(const LogDensity& target, const SamplerConfig& cfg,
                      const ProgressCallback& progress = {});

/// Phase-space state of a single trajectory point.
struct PhasePoint {
    std::vector<double> q;
    std::vector<double> p;
    std::vector<double> grad;  // gradient of log p at q
    double log_p = 0.0;
};

/// One leapfrog step with a diagonal inverse metric.
void leapfrog(const LogDensity& target, PhasePoint& z, std::span<const double> inv_metric,
              double step_size);

/// H = -log p(q) + p' M^{-1} p / 2
double hamiltonian(const PhasePoint& z, std::span<const double> inv_metric);

/// Split R-hat on rank-normalized draws, maximum of bulk and folded versions,
/// floored at 1. Requires >= 2 chains with >= 4 draws each.
double split_rhat(std::span<const std::vector<double>> chains);

/// Bulk effective sample size on rank-normalized split chains.
double ess_bulk(std::span<const std::vector<double>> chains);

struct Convergence {
    std::vector<double> rhat;
    std::vector<double> ess;
};

/// Per-parameter R-hat and ESS. Throws ValidationError for fewer than two chains.
Convergence diagnostics(const PosteriorDraws& draws);

}  // namespace bdarma
