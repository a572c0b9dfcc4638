#pragma once

#include "bdarma/model.hpp"
#include "bdarma/priors.hpp"
#include "bdarma/sampler.hpp"

#include <optional>

namespace bdarma {

/// Joint log posterior of a B-DARMA model over unconstrained coordinates.
///
/// Coordinates are the flat theta followed by the prior's latents (log scales,
/// logit weights). Under the horseshoe the coefficient slots hold standardized
/// z_j and theta_j = tau lambda_j z_j; gamma stays on its own scale.
/// Draws are reported as theta followed by natural-scale latents.
class Posterior final : public LogDensity {
public:
    Posterior(ModelSpec spec, Design design, std::vector<Composition> series, PriorConfig prior);

    /// Prior alone; no data term.
    static Posterior prior_only(ModelSpec spec, PriorConfig prior);

    std::size_t dim() const override { return theta_size_ + latent_size_; }
    double log_density(std::span<const double> u, std::span<double> grad) const override;
    std::unique_ptr<LogDensity> clone() const override;
    std::vector<double> constrain(std::span<const double> u) const override;
    std::vector<std::string> output_names() const override;

    const ModelSpec& spec() const noexcept { return spec_; }
    const PriorConfig& prior() const noexcept { return prior_; }
    std::size_t theta_size() const noexcept { return theta_size_; }
    bool non_centered() const noexcept { return non_centered_; }

    /// Flat theta implied by unconstrained coordinates.
    std::vector<double> theta_of(std::span<const double> u) const;

private:
    Posterior(ModelSpec spec, PriorConfig prior, std::optional<LikelihoodEvaluator> lik);

    double horseshoe_density(std::span<const double> u, std::span<double> grad) const;

    ModelSpec spec_;
    PriorConfig prior_;
    std::optional<LikelihoodEvaluator> lik_;
    std::size_t theta_size_;
    std::size_t latent_size_;
    bool non_centered_;
    std::vector<bool> is_gamma_;
    mutable std::vector<double> theta_;
    mutable std::vector<double> g_theta_;
};

}  // namespace bdarma
