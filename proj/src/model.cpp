#include "bdarma/model.hpp"

#include "bdarma/errors.hpp"
#include "bdarma/special.hpp"

#include <cmath>
#include <string>

namespace bdarma {

namespace {

constexpr double kExponentGuard = 700.0;

}  // namespace

void ModelSpec::validate() const {
    if (P < 0 || Q < 0) throw ValidationError("model orders must be non-negative");
    if (J < 2) throw ValidationError("composition dimension J must be at least 2");
    if (r_beta < 0) throw ValidationError("r_beta must be non-negative");
    if (r_gamma < 1) throw ValidationError("r_gamma must be at least 1 (intercept)");
}

ModelSpec ModelSpec::for_design(int P, int Q, int J, const Design& design) {
    ModelSpec spec{P, Q, J, design.r_beta(), design.r_gamma()};
    if (design.dim() != J - 1) {
        throw ValidationError("design dimension does not match J - 1");
    }
    spec.validate();
    return spec;
}

std::size_t count_parameters(const ModelSpec& spec) {
    spec.validate();
    const auto d = static_cast<std::size_t>(spec.dim());
    return static_cast<std::size_t>(spec.P + spec.Q) * d * d +
           static_cast<std::size_t>(spec.r_beta) + static_cast<std::size_t>(spec.r_gamma);
}

// ---------------------------------------------------------------------------

ParameterLayout::ParameterLayout(const ModelSpec& spec)
    : d_(spec.dim()), P_(spec.P), Q_(spec.Q) {
    const auto d2 = static_cast<std::size_t>(d_ * d_);
    beta_ = static_cast<std::size_t>(P_ + Q_) * d2;
    gamma_ = beta_ + static_cast<std::size_t>(spec.r_beta);
    size_ = gamma_ + static_cast<std::size_t>(spec.r_gamma);
}

std::size_t ParameterLayout::a_offset(int p) const {
    return static_cast<std::size_t>((p - 1) * d_ * d_);
}

std::size_t ParameterLayout::b_offset(int q) const {
    return static_cast<std::size_t>((P_ + q - 1) * d_ * d_);
}

std::vector<std::string> ParameterLayout::names() const {
    std::vector<std::string> out;
    out.reserve(size_);
    auto matrix_names = [&](const std::string& stem, int count) {
        for (int k = 1; k <= count; ++k) {
            for (int r = 1; r <= d_; ++r) {
                for (int c = 1; c <= d_; ++c) {
                    out.push_back(stem + std::to_string(k) + "[" + std::to_string(r) + "," +
                                  std::to_string(c) + "]");
                }
            }
        }
    };
    matrix_names("A", P_);
    matrix_names("B", Q_);
    for (std::size_t i = beta_; i < gamma_; ++i) {
        out.push_back("beta[" + std::to_string(i - beta_ + 1) + "]");
    }
    for (std::size_t i = gamma_; i < size_; ++i) {
        out.push_back("gamma[" + std::to_string(i - gamma_ + 1) + "]");
    }
    return out;
}

// ---------------------------------------------------------------------------

ParameterVector ParameterVector::zeros(const ModelSpec& spec) {
    spec.validate();
    const auto d = static_cast<std::size_t>(spec.dim());
    ParameterVector pv;
    pv.A.assign(static_cast<std::size_t>(spec.P), Matrix(d, d));
    pv.B.assign(static_cast<std::size_t>(spec.Q), Matrix(d, d));
    pv.beta.assign(static_cast<std::size_t>(spec.r_beta), 0.0);
    pv.gamma.assign(static_cast<std::size_t>(spec.r_gamma), 0.0);
    return pv;
}

ParameterVector ParameterVector::unpack(const ModelSpec& spec, std::span<const double> flat) {
    if (flat.size() != count_parameters(spec)) {
        throw ValidationError("flat parameter vector has length " + std::to_string(flat.size()) +
                              ", expected " + std::to_string(count_parameters(spec)));
    }
    auto pv = zeros(spec);
    std::size_t pos = 0;
    for (auto* blocks : {&pv.A, &pv.B}) {
        for (auto& m : *blocks) {
            for (double& v : m.data()) v = flat[pos++];
        }
    }
    for (double& v : pv.beta) v = flat[pos++];
    for (double& v : pv.gamma) v = flat[pos++];
    return pv;
}

std::vector<double> ParameterVector::pack() const {
    std::vector<double> flat;
    for (const auto* blocks : {&A, &B}) {
        for (const auto& m : *blocks) flat.insert(flat.end(), m.data().begin(), m.data().end());
    }
    flat.insert(flat.end(), beta.begin(), beta.end());
    flat.insert(flat.end(), gamma.begin(), gamma.end());
    return flat;
}

void ParameterVector::check_shape(const ModelSpec& spec) const {
    const auto d = static_cast<std::size_t>(spec.dim());
    auto square = [d](const Matrix& m) { return m.rows() == d && m.cols() == d; };
    if (A.size() != static_cast<std::size_t>(spec.P) || B.size() != static_cast<std::size_t>(spec.Q)) {
        throw ValidationError("parameter vector has the wrong number of VAR/VMA matrices");
    }
    for (const auto& m : A) {
        if (!square(m)) throw ValidationError("A_p must be (J-1)x(J-1)");
    }
    for (const auto& m : B) {
        if (!square(m)) throw ValidationError("B_q must be (J-1)x(J-1)");
    }
    if (beta.size() != static_cast<std::size_t>(spec.r_beta)) {
        throw ValidationError("beta length does not match r_beta");
    }
    if (gamma.size() != static_cast<std::size_t>(spec.r_gamma)) {
        throw ValidationError("gamma length does not match r_gamma");
    }
}

// ---------------------------------------------------------------------------

ThetaView::ThetaView(const ModelSpec& spec, std::span<const double> flat)
    : flat_(flat), d2_(static_cast<std::size_t>(spec.dim() * spec.dim())) {
    const ParameterLayout layout(spec);
    if (flat.size() != layout.size()) {
        throw ValidationError("flat parameter vector does not match the model shape");
    }
    b_start_ = static_cast<std::size_t>(spec.P) * d2_;
    beta = flat.subspan(layout.beta_offset(), layout.gamma_offset() - layout.beta_offset());
    gamma = flat.subspan(layout.gamma_offset());
}

std::span<const double> ThetaView::A(int p) const {
    return flat_.subspan(static_cast<std::size_t>(p - 1) * d2_, d2_);
}

std::span<const double> ThetaView::B(int q) const {
    return flat_.subspan(b_start_ + static_cast<std::size_t>(q - 1) * d2_, d2_);
}

void design_mean(const Design& design, std::span<const double> beta, long t,
                 std::span<double> w) {
    const auto nf = static_cast<std::size_t>(design.mean_feature_count());
    double feat[64];
    std::vector<double> heap;
    std::span<double> f;
    if (nf <= 64) {
        f = std::span<double>(feat, nf);
    } else {
        heap.resize(nf);
        f = heap;
    }
    design.mean_features(t, f);
    for (std::size_t k = 0; k < w.size(); ++k) {
        double s = 0.0;
        for (std::size_t c = 0; c < nf; ++c) s += f[c] * beta[k * nf + c];
        w[k] = s;
    }
}

AlrVector linear_predictor(const ModelSpec& spec, const ParameterVector& params,
                           const Design& design, std::span<const AlrVector> alr_history,
                           std::span<const AlrVector> eta_history, long t) {
    params.check_shape(spec);
    if (t < spec.m()) {
        throw ValidationError("linear predictor requires t >= m");
    }
    const auto d = static_cast<std::size_t>(spec.dim());
    const auto need = static_cast<std::size_t>(t);
    if (alr_history.size() < need || (spec.Q > 0 && eta_history.size() < need)) {
        throw std::out_of_range("history does not reach t-1");
    }
    AlrVector eta(d, 0.0);
    design_mean(design, params.beta, t, eta);
    std::vector<double> w_lag(d);
    std::vector<double> resid(d);
    for (int p = 1; p <= spec.P; ++p) {
        const auto s = static_cast<std::size_t>(t - p);
        design_mean(design, params.beta, t - p, w_lag);
        for (std::size_t k = 0; k < d; ++k) resid[k] = alr_history[s][k] - w_lag[k];
        const Matrix& A = params.A[static_cast<std::size_t>(p - 1)];
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) eta[r] += A(r, c) * resid[c];
        }
    }
    for (int q = 1; q <= spec.Q; ++q) {
        const auto s = static_cast<std::size_t>(t - q);
        const Matrix& B = params.B[static_cast<std::size_t>(q - 1)];
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                eta[r] += B(r, c) * (alr_history[s][c] - eta_history[s][c]);
            }
        }
    }
    return eta;
}

double precision_at(const ParameterVector& params, const Design& design, long t) {
    if (params.gamma.size() != static_cast<std::size_t>(design.r_gamma())) {
        throw ValidationError("gamma length does not match the precision design");
    }
    const auto z = design.precision_features(t);
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += z[i] * params.gamma[i];
    if (!std::isfinite(s) || std::abs(s) > kExponentGuard) {
        throw DomainError("precision exponent z_t.gamma outside [-700, 700] at t=" +
                          std::to_string(t));
    }
    return std::exp(s);
}

double log_likelihood(const ModelSpec& spec, const ParameterVector& params,
                      const Design& design, std::span<const Composition> series) {
    params.check_shape(spec);
    LikelihoodEvaluator eval(spec, design, std::vector<Composition>(series.begin(), series.end()));
    const auto flat = params.pack();
    return eval.evaluate(flat);
}

// ---------------------------------------------------------------------------

LikelihoodEvaluator::LikelihoodEvaluator(ModelSpec spec, Design design,
                                         std::vector<Composition> series)
    : spec_(spec), design_(std::move(design)), series_(std::move(series)) {
    spec_.validate();
    if (design_.dim() != spec_.dim() || design_.r_beta() != spec_.r_beta ||
        design_.r_gamma() != spec_.r_gamma) {
        throw ValidationError("design does not match the model spec (J-1, r_beta, r_gamma)");
    }
    T_ = series_.size();
    if (T_ <= static_cast<std::size_t>(spec_.m())) {
        throw ValidationError("series length must exceed max(P, Q)");
    }
    d_ = static_cast<std::size_t>(spec_.dim());
    const auto J = static_cast<std::size_t>(spec_.J);
    nf_ = static_cast<std::size_t>(design_.mean_feature_count());
    ng_ = static_cast<std::size_t>(design_.r_gamma());
    alr_.resize(T_ * d_);
    log_y_.resize(T_ * J);
    features_.resize(T_ * nf_);
    zfeatures_.resize(T_ * ng_);
    for (std::size_t t = 0; t < T_; ++t) {
        if (series_[t].size() != J) {
            throw ValidationError("series entry " + std::to_string(t) + " has the wrong dimension");
        }
        const auto a = alr(series_[t]);
        std::copy(a.begin(), a.end(), alr_.begin() + static_cast<long>(t * d_));
        for (std::size_t j = 0; j < J; ++j) log_y_[t * J + j] = std::log(series_[t][j]);
        design_.mean_features(static_cast<long>(t), std::span(features_).subspan(t * nf_, nf_));
        design_.precision_features(static_cast<long>(t), std::span(zfeatures_).subspan(t * ng_, ng_));
    }
    w_.resize(T_ * d_);
    eta_.resize(T_ * d_);
    adj_.resize(T_ * d_);
    adj_w_.resize(T_ * d_);
    mu_.resize(J);
    g_alpha_.resize(J);
}

void LikelihoodEvaluator::forward(const ThetaView& th) const {
    const auto m = static_cast<std::size_t>(spec_.m());
    for (std::size_t t = 0; t < T_; ++t) {
        const double* f = &features_[t * nf_];
        double* w = &w_[t * d_];
        for (std::size_t k = 0; k < d_; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < nf_; ++c) s += f[c] * th.beta[k * nf_ + c];
            w[k] = s;
        }
    }
    for (std::size_t t = 0; t < m; ++t) {
        std::copy_n(&alr_[t * d_], d_, &eta_[t * d_]);
    }
    for (std::size_t t = m; t < T_; ++t) {
        double* eta = &eta_[t * d_];
        std::copy_n(&w_[t * d_], d_, eta);
        for (int p = 1; p <= spec_.P; ++p) {
            const auto A = th.A(p);
            const double* a = &alr_[(t - static_cast<std::size_t>(p)) * d_];
            const double* w = &w_[(t - static_cast<std::size_t>(p)) * d_];
            for (std::size_t r = 0; r < d_; ++r) {
                const double* row = &A[r * d_];
                double s = 0.0;
                for (std::size_t c = 0; c < d_; ++c) s += row[c] * (a[c] - w[c]);
                eta[r] += s;
            }
        }
        for (int q = 1; q <= spec_.Q; ++q) {
            const auto B = th.B(q);
            const std::size_t s_idx = (t - static_cast<std::size_t>(q)) * d_;
            const double* a = &alr_[s_idx];
            const double* e = &eta_[s_idx];
            for (std::size_t r = 0; r < d_; ++r) {
                const double* row = &B[r * d_];
                double s = 0.0;
                for (std::size_t c = 0; c < d_; ++c) s += row[c] * (a[c] - e[c]);
                eta[r] += s;
            }
        }
    }
}

std::vector<AlrVector> LikelihoodEvaluator::linear_predictors(std::span<const double> theta) const {
    const ThetaView th(spec_, theta);
    forward(th);
    std::vector<AlrVector> out(T_);
    for (std::size_t t = 0; t < T_; ++t) {
        out[t].assign(eta_.begin() + static_cast<long>(t * d_),
                      eta_.begin() + static_cast<long>((t + 1) * d_));
    }
    return out;
}

double LikelihoodEvaluator::evaluate(std::span<const double> theta, std::span<double> grad) const {
    const ThetaView th(spec_, theta);
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != theta.size()) {
        throw ValidationError("gradient buffer does not match theta");
    }
    forward(th);

    const auto m = static_cast<std::size_t>(spec_.m());
    const std::size_t J = d_ + 1;
    if (want_grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        std::fill(adj_.begin(), adj_.end(), 0.0);
        std::fill(adj_w_.begin(), adj_w_.end(), 0.0);
    }
    const ParameterLayout layout(spec_);
    double* g_gamma = want_grad ? &grad[layout.gamma_offset()] : nullptr;

    double total = 0.0;
    for (std::size_t t = m; t < T_; ++t) {
        const double* eta = &eta_[t * d_];
        for (std::size_t k = 0; k < d_; ++k) {
            if (!std::isfinite(eta[k])) {
                throw LikelihoodError("non-finite linear predictor", static_cast<long>(t));
            }
        }
        const double* z = &zfeatures_[t * ng_];
        double lin = 0.0;
        for (std::size_t i = 0; i < ng_; ++i) lin += z[i] * th.gamma[i];
        if (!(std::abs(lin) <= kExponentGuard)) {
            throw LikelihoodError("precision exponent out of range", static_cast<long>(t));
        }
        const double phi = std::exp(lin);
        detail::alr_inv_into(std::span<const double>(eta, d_), mu_);
        const double* log_y = &log_y_[t * J];
        double lp = special::log_gamma(phi);
        for (std::size_t j = 0; j < J; ++j) {
            const double alpha = phi * mu_[j];
            if (!(alpha > 0.0)) {
                throw LikelihoodError("Dirichlet concentration underflowed", static_cast<long>(t));
            }
            lp += (alpha - 1.0) * log_y[j] - special::log_gamma(alpha);
        }
        if (!std::isfinite(lp)) {
            throw LikelihoodError("non-finite log-likelihood term", static_cast<long>(t));
        }
        total += lp;
        if (!want_grad) continue;

        const double psi_phi = special::digamma(phi);
        double g_phi = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            g_alpha_[j] = psi_phi - special::digamma(phi * mu_[j]) + log_y[j];
            g_phi += mu_[j] * g_alpha_[j];
        }
        // d/d eta_k = mu_k (phi g_alpha_k - sum_j mu_j phi g_alpha_j)
        double* adj = &adj_[t * d_];
        for (std::size_t k = 0; k < d_; ++k) {
            adj[k] += mu_[k] * phi * (g_alpha_[k] - g_phi);
        }
        const double g_lin = g_phi * phi;
        for (std::size_t i = 0; i < ng_; ++i) g_gamma[i] += g_lin * z[i];
    }
    if (!want_grad) return total;

    // Reverse sweep: adj_[t] is complete once every later step has pushed its
    // MA feedback into it.
    for (std::size_t t = T_; t-- > m;) {
        const double* G = &adj_[t * d_];
        double* gw_t = &adj_w_[t * d_];
        for (std::size_t k = 0; k < d_; ++k) gw_t[k] += G[k];
        for (int p = 1; p <= spec_.P; ++p) {
            const auto A = th.A(p);
            const std::size_t s_idx = (t - static_cast<std::size_t>(p)) * d_;
            const double* a = &alr_[s_idx];
            const double* w = &w_[s_idx];
            double* gA = &grad[layout.a_offset(p)];
            double* gw = &adj_w_[s_idx];
            for (std::size_t r = 0; r < d_; ++r) {
                const double g = G[r];
                if (g == 0.0) continue;
                const double* row = &A[r * d_];
                for (std::size_t c = 0; c < d_; ++c) {
                    gA[r * d_ + c] += g * (a[c] - w[c]);
                    gw[c] -= g * row[c];
                }
            }
        }
        for (int q = 1; q <= spec_.Q; ++q) {
            const auto B = th.B(q);
            const std::size_t s = t - static_cast<std::size_t>(q);
            const double* a = &alr_[s * d_];
            const double* e = &eta_[s * d_];
            double* gB = &grad[layout.b_offset(q)];
            const bool feeds_back = s >= m;  // eta_s for s < m is alr(y_s), a constant
            double* adj_s = &adj_[s * d_];
            for (std::size_t r = 0; r < d_; ++r) {
                const double g = G[r];
                if (g == 0.0) continue;
                const double* row = &B[r * d_];
                for (std::size_t c = 0; c < d_; ++c) {
                    gB[r * d_ + c] += g * (a[c] - e[c]);
                    if (feeds_back) adj_s[c] -= g * row[c];
                }
            }
        }
    }
    double* g_beta = &grad[layout.beta_offset()];
    for (std::size_t t = 0; t < T_; ++t) {
        const double* f = &features_[t * nf_];
        const double* gw = &adj_w_[t * d_];
        for (std::size_t k = 0; k < d_; ++k) {
            if (gw[k] == 0.0) continue;
            for (std::size_t c = 0; c < nf_; ++c) g_beta[k * nf_ + c] += gw[k] * f[c];
        }
    }
    return total;
}

}  // namespace bdarma
