#include "bdarma/priors.hpp"

#include "bdarma/errors.hpp"

#include <cmath>
#include <numbers>

namespace bdarma {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double normal_logpdf(double x, double mean, double sd, double* d_x) {
    const double z = (x - mean) / sd;
    if (d_x) *d_x += -z / sd;
    return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_beta(CoefficientBlock::Kind k) { return k == CoefficientBlock::Kind::Beta; }
bool is_gamma(CoefficientBlock::Kind k) { return k == CoefficientBlock::Kind::Gamma; }

std::size_t coefficient_count(const ModelSpec& spec) {
    return count_parameters(spec) - static_cast<std::size_t>(spec.r_gamma);
}

double log_sigmoid(double v) { return v >= 0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v)); }

double gamma_prior(const ModelSpec& spec, const GammaPrior& gp, std::span<const double> theta,
                   std::span<double> grad) {
    const ParameterLayout layout(spec);
    double lp = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(spec.r_gamma); ++i) {
        const std::size_t idx = layout.gamma_offset() + i;
        double d = 0.0;
        lp += i == 0 ? normal_logpdf(theta[idx], gp.intercept_mean, gp.intercept_sd, &d)
                     : normal_logpdf(theta[idx], 0.0, gp.seasonal_sd, &d);
        if (!grad.empty()) grad[idx] += d;
    }
    return lp;
}

std::string group_name(CoefficientBlock::Kind k) {
    switch (k) {
        case CoefficientBlock::Kind::Beta: return "sigma_beta";
        case CoefficientBlock::Kind::ADiag: return "sigma_A_diag";
        case CoefficientBlock::Kind::AOff: return "sigma_A_off";
        case CoefficientBlock::Kind::B: return "sigma_B";
        case CoefficientBlock::Kind::Gamma: break;
    }
    throw ValidationError("gamma has no hierarchical group");
}

}  // namespace

namespace detail {

// log of half-Cauchy(0, s) density at x = e^v plus the log Jacobian v.
double log_half_cauchy_log_scale(double log_x, double scale, double* d_log_x) {
    const double r = std::exp(log_x) / scale;
    const double r2 = r * r;
    if (d_log_x) *d_log_x += 1.0 - 2.0 * r2 / (1.0 + r2);
    return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(r2) + log_x;
}

}  // namespace detail

double log_gamma_prior(const ModelSpec& spec, const GammaPrior& prior, std::span<const double> theta,
                       std::span<double> grad_theta) {
    return gamma_prior(spec, prior, theta, grad_theta);
}

std::string to_string(PriorFamily family) {
    switch (family) {
        case PriorFamily::Normal: return "informative";
        case PriorFamily::Horseshoe: return "horseshoe";
        case PriorFamily::Laplace: return "laplace";
        case PriorFamily::SpikeSlab: return "spike-slab";
        case PriorFamily::Hierarchical: return "hierarchical";
    }
    return "unknown";
}

PriorFamily prior_family_from_string(const std::string& name) {
    if (name == "informative" || name == "normal") return PriorFamily::Normal;
    if (name == "horseshoe") return PriorFamily::Horseshoe;
    if (name == "laplace") return PriorFamily::Laplace;
    if (name == "spike-slab" || name == "spike_slab" || name == "spikeslab") return PriorFamily::SpikeSlab;
    if (name == "hierarchical") return PriorFamily::Hierarchical;
    throw ValidationError("unknown prior family '" + name + "'");
}

PriorFamily PriorConfig::kind() const {
    return static_cast<PriorFamily>(family.index());
}

void PriorConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(std::string("prior hyperparameter ") + what + " must be positive");
        }
    };
    positive(gamma.intercept_sd, "gamma.intercept_sd");
    positive(gamma.seasonal_sd, "gamma.seasonal_sd");
    std::visit(Overloaded{
                   [&](const NormalPrior& p) {
                       positive(p.varma_sd, "varma_sd");
                       positive(p.beta_sd, "beta_sd");
                   },
                   [&](const HorseshoePrior& p) {
                       positive(p.global_scale, "global_scale");
                       positive(p.local_scale, "local_scale");
                       if (p.fixed_global) positive(*p.fixed_global, "fixed_global");
                   },
                   [&](const LaplacePrior& p) {
                       positive(p.varma_scale, "varma_scale");
                       positive(p.beta_scale, "beta_scale");
                   },
                   [&](const SpikeSlabPrior& p) {
                       positive(p.slab_sd, "slab_sd");
                       positive(p.spike_sd, "spike_sd");
                       positive(p.mix_a, "mix_a");
                       positive(p.mix_b, "mix_b");
                   },
                   [&](const HierarchicalPrior& p) {
                       positive(p.varma_group_scale, "varma_group_scale");
                       positive(p.beta_group_scale, "beta_group_scale");
                   },
               },
               family);
}

std::vector<CoefficientBlock> block_map(const ModelSpec& spec) {
    using Kind = CoefficientBlock::Kind;
    const int d = spec.dim();
    std::vector<CoefficientBlock> out;
    out.reserve(count_parameters(spec));
    for (int p = 1; p <= spec.P; ++p) {
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) out.push_back({r == c ? Kind::ADiag : Kind::AOff, p});
        }
    }
    for (int q = 1; q <= spec.Q; ++q) {
        for (int i = 0; i < d * d; ++i) out.push_back({Kind::B, q});
    }
    for (int i = 0; i < spec.r_beta; ++i) out.push_back({Kind::Beta, 0});
    for (int i = 0; i < spec.r_gamma; ++i) out.push_back({Kind::Gamma, 0});
    if (out.size() != count_parameters(spec)) {
        throw ValidationError("prior blocks do not cover theta exactly once");
    }
    return out;
}

std::vector<CoefficientBlock::Kind> hierarchical_groups(const ModelSpec& spec) {
    using Kind = CoefficientBlock::Kind;
    std::vector<Kind> groups;
    if (spec.r_beta > 0) groups.push_back(Kind::Beta);
    if (spec.P > 0) groups.push_back(Kind::ADiag);
    if (spec.P > 0 && spec.dim() > 1) groups.push_back(Kind::AOff);
    if (spec.Q > 0) groups.push_back(Kind::B);
    return groups;
}

std::size_t latent_count(const ModelSpec& spec, const PriorConfig& cfg) {
    const std::size_t k = coefficient_count(spec);
    switch (cfg.kind()) {
        case PriorFamily::Horseshoe: {
            const auto& hs = std::get<HorseshoePrior>(cfg.family);
            return k + (hs.fixed_global ? 0 : 1);
        }
        case PriorFamily::SpikeSlab: return k;
        case PriorFamily::Hierarchical: return hierarchical_groups(spec).size();
        default: return 0;
    }
}

std::vector<std::string> latent_names(const ModelSpec& spec, const PriorConfig& cfg) {
    std::vector<std::string> out;
    const std::size_t k = coefficient_count(spec);
    switch (cfg.kind()) {
        case PriorFamily::Horseshoe:
            if (!std::get<HorseshoePrior>(cfg.family).fixed_global) out.emplace_back("tau");
            for (std::size_t i = 0; i < k; ++i) out.push_back("lambda[" + std::to_string(i + 1) + "]");
            break;
        case PriorFamily::SpikeSlab:
            for (std::size_t i = 0; i < k; ++i) out.push_back("w[" + std::to_string(i + 1) + "]");
            break;
        case PriorFamily::Hierarchical:
            for (auto g : hierarchical_groups(spec)) out.push_back(group_name(g));
            break;
        default: break;
    }
    return out;
}

LatentScales constrain_latents(const ModelSpec& spec, const PriorConfig& cfg,
                               std::span<const double> latent_u) {
    if (latent_u.size() != latent_count(spec, cfg)) {
        throw ValidationError("latent vector does not match the prior configuration");
    }
    LatentScales out;
    switch (cfg.kind()) {
        case PriorFamily::Horseshoe: {
            const auto& hs = std::get<HorseshoePrior>(cfg.family);
            std::size_t pos = 0;
            out.global = hs.fixed_global ? *hs.fixed_global : std::exp(latent_u[pos++]);
            for (; pos < latent_u.size(); ++pos) out.locals.push_back(std::exp(latent_u[pos]));
            break;
        }
        case PriorFamily::SpikeSlab:
            for (double v : latent_u) out.mixing.push_back(std::exp(log_sigmoid(v)));
            break;
        case PriorFamily::Hierarchical:
            for (double v : latent_u) out.group_scales.push_back(std::exp(v));
            break;
        default: break;
    }
    return out;
}

std::vector<double> flatten(const LatentScales& latents, const PriorConfig& cfg) {
    std::vector<double> out;
    switch (cfg.kind()) {
        case PriorFamily::Horseshoe:
            if (!std::get<HorseshoePrior>(cfg.family).fixed_global) out.push_back(latents.global);
            out.insert(out.end(), latents.locals.begin(), latents.locals.end());
            break;
        case PriorFamily::SpikeSlab:
            out = latents.mixing;
            break;
        case PriorFamily::Hierarchical:
            out = latents.group_scales;
            break;
        default: break;
    }
    return out;
}

double log_prior(const ModelSpec& spec, const PriorConfig& cfg, std::span<const double> theta,
                 std::span<const double> latent_u, std::span<double> grad_theta,
                 std::span<double> grad_latent) {
    if (theta.size() != count_parameters(spec)) {
        throw ValidationError("theta does not match the model shape");
    }
    if (latent_u.size() != latent_count(spec, cfg)) {
        throw ValidationError("latent vector does not match the prior configuration");
    }
    if (!grad_theta.empty() && grad_theta.size() != theta.size()) {
        throw ValidationError("theta gradient buffer has the wrong size");
    }
    if (!grad_latent.empty() && grad_latent.size() != latent_u.size()) {
        throw ValidationError("latent gradient buffer has the wrong size");
    }
    const auto blocks = block_map(spec);
    const bool gt = !grad_theta.empty();
    const bool gl = !grad_latent.empty();
    double lp = gamma_prior(spec, cfg.gamma, theta, grad_theta);

    std::visit(
        Overloaded{
            [&](const NormalPrior& p) {
                for (std::size_t i = 0; i < blocks.size(); ++i) {
                    if (is_gamma(blocks[i].kind)) continue;
                    const double sd = is_beta(blocks[i].kind) ? p.beta_sd : p.varma_sd;
                    double d = 0.0;
                    lp += normal_logpdf(theta[i], p.mean, sd, &d);
                    if (gt) grad_theta[i] += d;
                }
            },
            [&](const LaplacePrior& p) {
                for (std::size_t i = 0; i < blocks.size(); ++i) {
                    if (is_gamma(blocks[i].kind)) continue;
                    const double b = is_beta(blocks[i].kind) ? p.beta_scale : p.varma_scale;
                    lp += -std::abs(theta[i]) / b - std::log(2.0 * b);
                    if (gt && theta[i] != 0.0) grad_theta[i] += (theta[i] > 0.0 ? -1.0 : 1.0) / b;
                }
            },
            [&](const HorseshoePrior& p) {
                std::size_t pos = 0;
                double tau;
                double d_log_tau = 0.0;
                if (p.fixed_global) {
                    tau = *p.fixed_global;
                } else {
                    lp += detail::log_half_cauchy_log_scale(latent_u[0], p.global_scale, &d_log_tau);
                    tau = std::exp(latent_u[0]);
                    pos = 1;
                }
                std::size_t k = 0;
                for (std::size_t i = 0; i < blocks.size(); ++i) {
                    if (is_gamma(blocks[i].kind)) continue;
                    const double log_lambda = latent_u[pos + k];
                    double d_log_lambda = 0.0;
                    lp += detail::log_half_cauchy_log_scale(log_lambda, p.local_scale, &d_log_lambda);
                    const double sd = tau * std::exp(log_lambda);
                    const double z = theta[i] / sd;
                    lp += -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
                    if (gt) grad_theta[i] += -z / sd;
                    // d/d log sd of the normal term is z^2 - 1
                    d_log_lambda += z * z - 1.0;
                    d_log_tau += z * z - 1.0;
                    if (gl) grad_latent[pos + k] += d_log_lambda;
                    ++k;
                }
                if (gl && !p.fixed_global) grad_latent[0] += d_log_tau;
            },
            [&](const SpikeSlabPrior& p) {
                const double log_beta_fn = std::lgamma(p.mix_a) + std::lgamma(p.mix_b) -
                                           std::lgamma(p.mix_a + p.mix_b);
                std::size_t k = 0;
                for (std::size_t i = 0; i < blocks.size(); ++i) {
                    if (is_gamma(blocks[i].kind)) continue;
                    const double v = latent_u[k];
                    const double log_w = log_sigmoid(v);
                    const double log_1mw = log_sigmoid(-v);
                    const double w = std::exp(log_w);
                    const double l_slab = normal_logpdf(theta[i], 0.0, p.slab_sd, nullptr);
                    const double l_spike = normal_logpdf(theta[i], 0.0, p.spike_sd, nullptr);
                    const double a = log_w + l_slab;
                    const double b = log_1mw + l_spike;
                    const double top = std::max(a, b);
                    const double log_mix = top + std::log(std::exp(a - top) + std::exp(b - top));
                    // Beta(a, b) on w plus the logit Jacobian w (1 - w)
                    lp += log_mix + (p.mix_a - 1.0) * log_w + (p.mix_b - 1.0) * log_1mw -
                          log_beta_fn + log_w + log_1mw;
                    const double resp = std::exp(a - log_mix);  // slab responsibility
                    if (gt) {
                        grad_theta[i] += -theta[i] * (resp / (p.slab_sd * p.slab_sd) +
                                                      (1.0 - resp) / (p.spike_sd * p.spike_sd));
                    }
                    if (gl) {
                        // d log_mix / dv = resp (1 - w) - (1 - resp) w = resp - w
                        grad_latent[k] += (resp - w) + (p.mix_a - 1.0) * (1.0 - w) -
                                          (p.mix_b - 1.0) * w + (1.0 - 2.0 * w);
                    }
                    ++k;
                }
            },
            [&](const HierarchicalPrior& p) {
                const auto groups = hierarchical_groups(spec);
                std::vector<double> sigma(groups.size());
                for (std::size_t g = 0; g < groups.size(); ++g) {
                    const double scale = is_beta(groups[g]) ? p.beta_group_scale : p.varma_group_scale;
                    double d = 0.0;
                    lp += detail::log_half_cauchy_log_scale(latent_u[g], scale, &d);
                    if (gl) grad_latent[g] += d;
                    sigma[g] = std::exp(latent_u[g]);
                }
                auto group_of = [&](CoefficientBlock::Kind k) {
                    for (std::size_t g = 0; g < groups.size(); ++g) {
                        if (groups[g] == k) return g;
                    }
                    throw ValidationError("coefficient block has no hierarchical group");
                };
                for (std::size_t i = 0; i < blocks.size(); ++i) {
                    if (is_gamma(blocks[i].kind)) continue;
                    const std::size_t g = group_of(blocks[i].kind);
                    const double mean = blocks[i].kind == CoefficientBlock::Kind::ADiag ? p.diag_mean : 0.0;
                    const double z = (theta[i] - mean) / sigma[g];
                    lp += -0.5 * z * z - latent_u[g] - kHalfLog2Pi;
                    if (gt) grad_theta[i] += -z / sigma[g];
                    if (gl) grad_latent[g] += z * z - 1.0;
                }
            },
        },
        cfg.family);
    return lp;
}

std::vector<PriorConfig> default_study_priors(const std::string& study) {
    const bool application = study == "application";
    if (!application && study != "sim-correct" && study != "sim-overfit" && study != "sim-underfit") {
        throw ValidationError("unknown study id '" + study + "'");
    }
    std::vector<PriorConfig> out;
    out.push_back({NormalPrior{0.0, 1.0, 0.1}, {}});
    out.push_back({HorseshoePrior{1.0, 1.0, std::nullopt}, {}});
    out.push_back({LaplacePrior{1.0, application ? 1.0 : 0.1}, {}});
    out.push_back({SpikeSlabPrior{1.0, 0.01, 1.0, 1.0}, {}});
    out.push_back({HierarchicalPrior{1.0, application ? 1.0 : 0.1, application ? 0.5 : 0.0}, {}});
    return out;
}

PriorConfig default_prior(const std::string& study, PriorFamily family) {
    return default_study_priors(study)[static_cast<std::size_t>(family)];
}

}  // namespace bdarma
