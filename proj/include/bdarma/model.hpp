#pragma once

#include "bdarma/design.hpp"
#include "bdarma/matrix.hpp"
#include "bdarma/simplex.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bdarma {

/// Orders and dimensions of a B-DARMA(P, Q) model.
struct ModelSpec {
    int P = 0;
    int Q = 0;
    int J = 2;
    int r_beta = 0;
    int r_gamma = 1;

    int m() const noexcept { return P > Q ? P : Q; }
    /// J - 1, the ALR dimension.
    int dim() const noexcept { return J - 1; }

    void validate() const;

    /// Spec whose r_beta / r_gamma match `design`.
    static ModelSpec for_design(int P, int Q, int J, const Design& design);

    bool operator==(const ModelSpec&) const = default;
};

/// C = (P + Q)(J - 1)^2 + r_beta + r_gamma
std::size_t count_parameters(const ModelSpec& spec);

/// Structured theta = (A_1..A_P, B_1..B_Q, beta, gamma).
///
/// The flat layout is A_1, ..., A_P, B_1, ..., B_Q (each row-major), then beta,
/// then gamma.
struct ParameterVector {
    std::vector<Matrix> A;
    std::vector<Matrix> B;
    std::vector<double> beta;
    std::vector<double> gamma;

    static ParameterVector zeros(const ModelSpec& spec);
    static ParameterVector unpack(const ModelSpec& spec, std::span<const double> flat);
    std::vector<double> pack() const;

    /// Throws ValidationError when the shapes disagree with `spec`.
    void check_shape(const ModelSpec& spec) const;
};

/// Offsets of each block inside the flat theta.
struct ParameterLayout {
    explicit ParameterLayout(const ModelSpec& spec);

    std::size_t a_offset(int p) const;  ///< p is 1-based
    std::size_t b_offset(int q) const;  ///< q is 1-based
    std::size_t beta_offset() const noexcept { return beta_; }
    std::size_t gamma_offset() const noexcept { return gamma_; }
    std::size_t size() const noexcept { return size_; }
    /// Human-readable names, e.g. "A1[2,3]", "beta[1]", "gamma[1]" (1-based indices).
    std::vector<std::string> names() const;

private:
    int d_;
    int P_;
    int Q_;
    std::size_t beta_;
    std::size_t gamma_;
    std::size_t size_;
};

/// Read-only view of a flat theta split into blocks.
struct ThetaView {
    ThetaView(const ModelSpec& spec, std::span<const double> flat);

    /// Row-major (J-1)x(J-1) block for A_p / B_q (1-based).
    std::span<const double> A(int p) const;
    std::span<const double> B(int q) const;
    std::span<const double> beta;
    std::span<const double> gamma;

private:
    std::span<const double> flat_;
    std::size_t d2_;
    std::size_t b_start_;
};

/// X_t beta for the block design: w[k] = f_t . beta_k.
void design_mean(const Design& design, std::span<const double> beta, long t,
                 std::span<double> w);

/// Linear predictor eta_t from the VARMA recursion.
///
/// `alr_history[s]` and `eta_history[s]` hold alr(y_s) and eta_s for s < t
/// (absolute, 0-based positions). Requires t >= m.
AlrVector linear_predictor(const ModelSpec& spec, const ParameterVector& params,
                           const Design& design, std::span<const AlrVector> alr_history,
                           std::span<const AlrVector> eta_history, long t);

/// phi_t = exp(z_t . gamma). Throws DomainError when |z_t . gamma| > 700.
double precision_at(const ParameterVector& params, const Design& design, long t);

/// Conditional log-likelihood sum_{t>m} log Dir(y_t; phi_t alr_inv(eta_t)).
double log_likelihood(const ModelSpec& spec, const ParameterVector& params,
                      const Design& design, std::span<const Composition> series);

/// Evaluation context over one fixed series. Precomputes alr(y_t), ln y_t and
/// design rows; holds scratch buffers, so use one instance per thread.
class LikelihoodEvaluator {
public:
    LikelihoodEvaluator(ModelSpec spec, Design design, std::vector<Composition> series);

    const ModelSpec& spec() const noexcept { return spec_; }
    const Design& design() const noexcept { return design_; }
    std::size_t length() const noexcept { return T_; }
    const std::vector<Composition>& series() const noexcept { return series_; }

    /// Log-likelihood at flat theta; fills `grad` (size C) when non-empty.
    /// Throws LikelihoodError naming t on a non-finite intermediate.
    double evaluate(std::span<const double> theta, std::span<double> grad = {}) const;

    /// eta_t for every t (t < m gets alr(y_t)).
    std::vector<AlrVector> linear_predictors(std::span<const double> theta) const;

private:
    void forward(const ThetaView& th) const;

    ModelSpec spec_;
    Design design_;
    std::vector<Composition> series_;
    std::size_t T_;
    std::size_t d_;
    std::size_t nf_;
    std::size_t ng_;
    std::vector<double> alr_;        // T x d
    std::vector<double> log_y_;      // T x J
    std::vector<double> features_;   // T x nf
    std::vector<double> zfeatures_;  // T x ng

    mutable std::vector<double> w_;      // T x d, X_t beta
    mutable std::vector<double> eta_;    // T x d
    mutable std::vector<double> adj_;    // T x d, adjoint of eta
    mutable std::vector<double> adj_w_;  // T x d, adjoint of w
    mutable std::vector<double> mu_;
    mutable std::vector<double> g_alpha_;
};

}  // namespace bdarma
