#include "bdarma/posterior.hpp"

#include "bdarma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bdarma {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Posterior::Posterior(ModelSpec spec, PriorConfig prior, std::optional<LikelihoodEvaluator> lik)
    : spec_(spec), prior_(std::move(prior)), lik_(std::move(lik)) {
    spec_.validate();
    prior_.validate();
    theta_size_ = count_parameters(spec_);
    latent_size_ = latent_count(spec_, prior_);
    non_centered_ = prior_.kind() == PriorFamily::Horseshoe;
    is_gamma_.assign(theta_size_, false);
    const auto blocks = block_map(spec_);
    for (std::size_t i = 0; i < theta_size_; ++i) {
        is_gamma_[i] = blocks[i].kind == CoefficientBlock::Kind::Gamma;
    }
    theta_.assign(theta_size_, 0.0);
    g_theta_.assign(theta_size_, 0.0);
}

Posterior::Posterior(ModelSpec spec, Design design, std::vector<Composition> series,
                     PriorConfig prior)
    : Posterior(spec, std::move(prior),
                LikelihoodEvaluator(spec, std::move(design), std::move(series))) {}

Posterior Posterior::prior_only(ModelSpec spec, PriorConfig prior) {
    return Posterior(spec, std::move(prior), std::nullopt);
}

std::unique_ptr<LogDensity> Posterior::clone() const { return std::make_unique<Posterior>(*this); }

std::vector<double> Posterior::theta_of(std::span<const double> u) const {
    if (u.size() != dim()) throw ValidationError("coordinate vector has the wrong size");
    std::vector<double> theta(u.begin(), u.begin() + static_cast<long>(theta_size_));
    if (!non_centered_) return theta;
    const auto latents = constrain_latents(spec_, prior_, u.subspan(theta_size_));
    std::size_t k = 0;
    for (std::size_t i = 0; i < theta_size_; ++i) {
        if (is_gamma_[i]) continue;
        theta[i] = latents.global * latents.locals[k++] * u[i];
    }
    return theta;
}

std::vector<double> Posterior::constrain(std::span<const double> u) const {
    auto out = theta_of(u);
    const auto latents = constrain_latents(spec_, prior_, u.subspan(theta_size_));
    const auto flat = flatten(latents, prior_);
    out.insert(out.end(), flat.begin(), flat.end());
    return out;
}

std::vector<std::string> Posterior::output_names() const {
    auto names = ParameterLayout(spec_).names();
    const auto extra = latent_names(spec_, prior_);
    names.insert(names.end(), extra.begin(), extra.end());
    return names;
}

double Posterior::log_density(std::span<const double> u, std::span<double> grad) const {
    if (u.size() != dim()) throw ValidationError("coordinate vector has the wrong size");
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    for (double v : u) {
        if (!std::isfinite(v)) return kNegInf;
    }
    try {
        if (non_centered_) return horseshoe_density(u, grad);
        const auto theta = u.first(theta_size_);
        const auto latent = u.subspan(theta_size_);
        double lp = 0.0;
        if (lik_) {
            lp += lik_->evaluate(theta, want_grad ? grad.first(theta_size_) : std::span<double>{});
        }
        if (want_grad) {
            lp += log_prior(spec_, prior_, theta, latent, grad.first(theta_size_),
                            grad.subspan(theta_size_));
        } else {
            lp += log_prior(spec_, prior_, theta, latent);
        }
        return std::isfinite(lp) ? lp : kNegInf;
    } catch (const LikelihoodError&) {
        return kNegInf;
    } catch (const DomainError&) {
        return kNegInf;
    }
}

// theta_j = tau lambda_j z_j with z_j ~ N(0, 1), tau and lambda_j half-Cauchy on the log scale.
double Posterior::horseshoe_density(std::span<const double> u, std::span<double> grad) const {
    const auto& hs = std::get<HorseshoePrior>(prior_.family);
    const bool want_grad = !grad.empty();
    const std::size_t pos0 = hs.fixed_global ? 0 : 1;
    const auto latent = u.subspan(theta_size_);

    double lp = 0.0;
    double tau;
    double d_log_tau = 0.0;
    if (hs.fixed_global) {
        tau = *hs.fixed_global;
    } else {
        lp += detail::log_half_cauchy_log_scale(latent[0], hs.global_scale, &d_log_tau);
        tau = std::exp(latent[0]);
    }

    std::size_t k = 0;
    for (std::size_t i = 0; i < theta_size_; ++i) {
        if (is_gamma_[i]) {
            theta_[i] = u[i];
            continue;
        }
        const double lambda = std::exp(latent[pos0 + k]);
        theta_[i] = tau * lambda * u[i];
        lp += -0.5 * u[i] * u[i] - kHalfLog2Pi;
        double d_log_lambda = 0.0;
        lp += detail::log_half_cauchy_log_scale(latent[pos0 + k], hs.local_scale, &d_log_lambda);
        if (want_grad) grad[theta_size_ + pos0 + k] += d_log_lambda;
        ++k;
    }

    std::fill(g_theta_.begin(), g_theta_.end(), 0.0);
    if (lik_) lp += lik_->evaluate(theta_, want_grad ? std::span<double>(g_theta_) : std::span<double>{});
    lp += log_gamma_prior(spec_, prior_.gamma, theta_, want_grad ? std::span<double>(g_theta_) : std::span<double>{});

    if (want_grad) {
        k = 0;
        for (std::size_t i = 0; i < theta_size_; ++i) {
            if (is_gamma_[i]) {
                grad[i] = g_theta_[i];
                continue;
            }
            const double lambda = std::exp(latent[pos0 + k]);
            const double chain = g_theta_[i] * theta_[i];
            grad[i] = g_theta_[i] * tau * lambda - u[i];
            grad[theta_size_ + pos0 + k] += chain;
            d_log_tau += chain;
            ++k;
        }
        if (!hs.fixed_global) grad[theta_size_] += d_log_tau;
    }
    return std::isfinite(lp) ? lp : kNegInf;
}

}  // namespace bdarma
