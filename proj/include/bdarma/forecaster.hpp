#pragma once

#include "bdarma/design.hpp"
#include "bdarma/model.hpp"
#include "bdarma/sampler.hpp"
#include "bdarma/simplex.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bdarma {

struct ForecastOptions {
    /// Keep every thin-th draw.
    std::size_t thin = 1;
    /// Replace Dirichlet noise by the mean composition (phi -> infinity).
    bool noise_free = false;
    std::uint64_t seed = 1;
    /// Worker threads over draws; 0 means hardware concurrency.
    int jobs = 1;
};

/// Joint predictive sample over H future steps.
struct ForecastResult {
    std::size_t horizon = 0;
    std::size_t J = 0;
    std::size_t draws = 0;  ///< trajectories kept
    std::size_t skipped = 0;  ///< draws with non-finite theta or a diverging rollout
    std::vector<double> trajectories;  ///< draws x H x J
    std::vector<std::vector<double>> point;  ///< H x J renormalized mean
    std::vector<std::vector<double>> q05;
    std::vector<std::vector<double>> q50;
    std::vector<std::vector<double>> q95;

    double value(std::size_t s, std::size_t h, std::size_t j) const {
        return trajectories[(s * horizon + h) * J + j];
    }
};

/// Rolls the recursion forward from `history` for each retained draw, sampling
/// y_{T+h} and feeding it back as the next lag. The first count_parameters(spec)
/// columns of `draws` are taken as theta; the design keeps indexing past the
/// end of the history.
ForecastResult forecast(const ModelSpec& spec, const Design& design, const PosteriorDraws& draws,
                        std::span<const Composition> history, int H,
                        const ForecastOptions& options = {});

/// Point forecast only (H x J).
std::vector<std::vector<double>> mean_forecast_only(const ModelSpec& spec, const Design& design,
                                                    const PosteriorDraws& draws,
                                                    std::span<const Composition> history, int H,
                                                    const ForecastOptions& options = {});

/// Linear-interpolated sample quantile (type 7); `values` is copied and sorted.
double quantile(std::vector<double> values, double p);

}  // namespace bdarma
