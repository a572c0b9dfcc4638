#pragma once

#include "bdarma/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bdarma {

enum class PriorFamily { Normal, Horseshoe, Laplace, SpikeSlab, Hierarchical };

std::string to_string(PriorFamily family);
PriorFamily prior_family_from_string(const std::string& name);

/// Normal priors on the precision coefficients; applied under every family.
/// gamma[0] is the intercept, the rest are seasonal terms.
struct GammaPrior {
    double intercept_mean = 7.0;
    double intercept_sd = 1.5;
    double seasonal_sd = 0.1;
};

/// theta_j ~ N(mean, sd^2) with separate sds for VARMA entries and beta.
struct NormalPrior {
    double mean = 0.0;
    double varma_sd = 1.0;
    double beta_sd = 0.1;
};

/// theta_j | tau, lambda_j ~ N(0, tau^2 lambda_j^2); tau, lambda_j ~ half-Cauchy.
struct HorseshoePrior {
    double global_scale = 1.0;
    double local_scale = 1.0;
    /// Pins tau instead of sampling it (used for shrinkage checks).
    std::optional<double> fixed_global;
};

/// p(theta_j) = exp(-|theta_j| / b) / (2b).
struct LaplacePrior {
    double varma_scale = 1.0;
    double beta_scale = 0.1;
};

/// Continuous relaxation w_j N(0, slab^2) + (1 - w_j) N(0, spike^2), w_j ~ Beta(a, b).
struct SpikeSlabPrior {
    double slab_sd = 1.0;
    double spike_sd = 0.01;
    double mix_a = 1.0;
    double mix_b = 1.0;
};

/// Group scales sigma_g ~ half-Cauchy(0, s_g) over the blocks beta, diag(A_p),
/// offdiag(A_p) and B_q. Diagonal A entries are centered on `diag_mean`.
struct HierarchicalPrior {
    double varma_group_scale = 1.0;
    double beta_group_scale = 0.1;
    double diag_mean = 0.0;
};

struct PriorConfig {
    std::variant<NormalPrior, HorseshoePrior, LaplacePrior, SpikeSlabPrior, HierarchicalPrior>
        family = NormalPrior{};
    GammaPrior gamma;

    PriorFamily kind() const;
    std::string name() const { return to_string(kind()); }
    /// Throws ValidationError for non-positive scales.
    void validate() const;
};

/// Which block a flat theta entry belongs to.
struct CoefficientBlock {
    enum class Kind { ADiag, AOff, B, Beta, Gamma };
    Kind kind;
    int lag = 0;  ///< 1-based lag for A/B entries, 0 otherwise
};

/// One block per theta entry; every coefficient lands in exactly one block.
std::vector<CoefficientBlock> block_map(const ModelSpec& spec);

/// Hierarchical groups present for `spec`, in latent order.
std::vector<CoefficientBlock::Kind> hierarchical_groups(const ModelSpec& spec);

/// Natural-scale auxiliary parameters.
struct LatentScales {
    double global = 1.0;                 ///< horseshoe tau
    std::vector<double> locals;          ///< horseshoe lambda_j
    std::vector<double> group_scales;    ///< hierarchical sigma_g
    std::vector<double> mixing;          ///< spike-slab w_j
};

/// Number of unconstrained latent coordinates the family adds.
std::size_t latent_count(const ModelSpec& spec, const PriorConfig& cfg);

/// Names for the natural-scale latents ("tau", "lambda[3]", "sigma_beta", "w[2]", ...).
std::vector<std::string> latent_names(const ModelSpec& spec, const PriorConfig& cfg);

/// Maps unconstrained latents (log for scales, logit for weights) to natural scale.
LatentScales constrain_latents(const ModelSpec& spec, const PriorConfig& cfg,
                               std::span<const double> latent_u);

/// Flattened natural-scale latents in `latent_names` order.
std::vector<double> flatten(const LatentScales& latents, const PriorConfig& cfg);

/// Joint log prior density of (theta, latents) in the centered form: coefficient
/// densities given latents, latent priors, log/logit Jacobians, and the gamma
/// prior. Gradients are accumulated (+=) into the non-empty buffers; the latent
/// gradient is with respect to the unconstrained coordinates.
double log_prior(const ModelSpec& spec, const PriorConfig& cfg, std::span<const double> theta,
                 std::span<const double> latent_u, std::span<double> grad_theta = {},
                 std::span<double> grad_latent = {});

/// The gamma part of log_prior alone; theta is the full flat vector.
double log_gamma_prior(const ModelSpec& spec, const GammaPrior& prior, std::span<const double> theta,
                       std::span<double> grad_theta = {});

/// The five configured families with their default hyperparameters.
/// `study` is one of sim-correct, sim-overfit, sim-underfit, application.
std::vector<PriorConfig> default_study_priors(const std::string& study);

/// Single family from the defaults for `study`.
PriorConfig default_prior(const std::string& study, PriorFamily family);

namespace detail {

double log_half_cauchy_log_scale(double log_x, double scale, double* d_log_x);

}  // namespace detail

}  // namespace bdarma
