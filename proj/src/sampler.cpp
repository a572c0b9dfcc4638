#include "bdarma/sampler.hpp"

#include "bdarma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace bdarma {

std::vector<std::string> LogDensity::output_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < dim(); ++i) out.push_back("x[" + std::to_string(i + 1) + "]");
    return out;
}

void SamplerConfig::validate() const {
    if (chains < 1) throw ValidationError("sampler needs at least one chain");
    if (warmup < 0 || sampling < 1) throw ValidationError("sampler iteration counts are invalid");
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
        throw ValidationError("target-accept must lie in (0, 1)");
    }
    if (max_treedepth < 1) throw ValidationError("max-treedepth must be positive");
    if (!(init_range >= 0.0)) throw ValidationError("init-range must be non-negative");
}

std::vector<double> PosteriorDraws::column(std::size_t k) const {
    std::vector<double> out;
    out.reserve(chains * iterations);
    for (std::size_t c = 0; c < chains; ++c) {
        for (std::size_t i = 0; i < iterations; ++i) out.push_back(value(c, i, k));
    }
    return out;
}

std::vector<std::vector<double>> PosteriorDraws::chains_of(std::size_t k) const {
    std::vector<std::vector<double>> out(chains);
    for (std::size_t c = 0; c < chains; ++c) {
        out[c].reserve(iterations);
        for (std::size_t i = 0; i < iterations; ++i) out[c].push_back(value(c, i, k));
    }
    return out;
}

int PosteriorDraws::total_divergences() const {
    int n = 0;
    for (const auto& ci : chain_info) n += ci.divergences;
    return n;
}

double PosteriorDraws::divergence_rate() const {
    const auto n = chains * iterations;
    return n == 0 ? 0.0 : static_cast<double>(total_divergences()) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

double hamiltonian(const PhasePoint& z, std::span<const double> inv_metric) {
    double kinetic = 0.0;
    for (std::size_t i = 0; i < z.p.size(); ++i) kinetic += z.p[i] * z.p[i] * inv_metric[i];
    return -z.log_p + 0.5 * kinetic;
}

void leapfrog(const LogDensity& target, PhasePoint& z, std::span<const double> inv_metric,
              double step_size) {
    const std::size_t n = z.q.size();
    for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * step_size * z.grad[i];
    for (std::size_t i = 0; i < n; ++i) z.q[i] += step_size * inv_metric[i] * z.p[i];
    z.log_p = target.log_density(z.q, z.grad);
    if (!std::isfinite(z.log_p)) {
        z.log_p = -std::numeric_limits<double>::infinity();
        return;
    }
    for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * step_size * z.grad[i];
}

namespace {

double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double top = std::max(a, b);
    return top + std::log(std::exp(a - top) + std::exp(b - top));
}

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Dual-averaging step-size adaptation.
class StepSizeAdapter {
public:
    explicit StepSizeAdapter(double delta) : delta_(delta) {}

    void set_mu(double mu) { mu_ = mu; }
    void restart() {
        counter_ = 0;
        s_bar_ = 0.0;
        x_bar_ = 0.0;
    }
    double learn(double adapt_stat) {
        ++counter_;
        adapt_stat = std::min(1.0, adapt_stat);
        const double eta = 1.0 / (counter_ + t0_);
        s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - adapt_stat);
        const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
        const double x_eta = std::pow(counter_, -kappa_);
        x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
        return std::exp(x);
    }
    double final_step() const { return std::exp(x_bar_); }

private:
    double delta_;
    double mu_ = std::log(10.0);
    double gamma_ = 0.05;
    double kappa_ = 0.75;
    double t0_ = 10.0;
    double counter_ = 0;
    double s_bar_ = 0.0;
    double x_bar_ = 0.0;
};

/// Windowed diagonal metric estimation with doubling windows
/// (75 iteration initial buffer, 25 iteration base window, 50 iteration terminal buffer).
class MetricAdapter {
public:
    MetricAdapter(int num_warmup, std::size_t dim) : num_warmup_(num_warmup), dim_(dim) {
        if (num_warmup < 20) {
            active_ = false;
            return;
        }
        if (init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
            init_buffer_ = static_cast<int>(0.15 * num_warmup);
            term_buffer_ = static_cast<int>(0.1 * num_warmup);
            base_window_ = num_warmup - (init_buffer_ + term_buffer_);
        }
        window_size_ = base_window_;
        next_window_ = init_buffer_ + window_size_ - 1;
        reset_estimator();
    }

    /// Feeds one warmup position; returns true when a new metric is ready in `inv_metric`.
    bool learn(Vec& inv_metric, const Vec& q) {
        if (!active_) return false;
        if (in_window()) add(q);
        if (end_of_window()) {
            compute_next_window();
            const double n = static_cast<double>(count_);
            for (std::size_t i = 0; i < dim_; ++i) {
                const double var = count_ > 1 ? m2_[i] / (n - 1.0) : 1.0;
                inv_metric[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
            }
            reset_estimator();
            ++counter_;
            return true;
        }
        ++counter_;
        return false;
    }

private:
    bool in_window() const {
        return counter_ >= init_buffer_ && counter_ < num_warmup_ - term_buffer_ &&
               counter_ != num_warmup_;
    }
    bool end_of_window() const { return counter_ == next_window_ && counter_ != num_warmup_; }
    void compute_next_window() {
        if (next_window_ == num_warmup_ - term_buffer_ - 1) return;
        window_size_ *= 2;
        next_window_ = counter_ + window_size_;
        if (next_window_ != num_warmup_ - term_buffer_ - 1) {
            const int boundary = next_window_ + 2 * window_size_;
            if (boundary >= num_warmup_ - term_buffer_) next_window_ = num_warmup_ - term_buffer_ - 1;
        }
    }
    void reset_estimator() {
        count_ = 0;
        mean_.assign(dim_, 0.0);
        m2_.assign(dim_, 0.0);
    }
    void add(const Vec& q) {
        ++count_;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double delta = q[i] - mean_[i];
            mean_[i] += delta / static_cast<double>(count_);
            m2_[i] += delta * (q[i] - mean_[i]);
        }
    }

    int num_warmup_;
    std::size_t dim_;
    bool active_ = true;
    int init_buffer_ = 75;
    int term_buffer_ = 50;
    int base_window_ = 25;
    int window_size_ = 0;
    int next_window_ = 0;
    int counter_ = 0;
    std::size_t count_ = 0;
    Vec mean_;
    Vec m2_;
};

struct TransitionStats {
    double accept_stat = 0.0;
    int depth = 0;
    int n_leapfrog = 0;
    bool divergent = false;
};

class NutsChain {
public:
    NutsChain(const LogDensity& target, const SamplerConfig& cfg, Rng rng)
        : target_(target), cfg_(cfg), rng_(std::move(rng)), dim_(target.dim()),
          inv_metric_(dim_, 1.0) {}

    void initialize() {
        z_.q.assign(dim_, 0.0);
        z_.p.assign(dim_, 0.0);
        z_.grad.assign(dim_, 0.0);
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (auto& v : z_.q) v = rng_.uniform(-cfg_.init_range, cfg_.init_range);
            z_.log_p = target_.log_density(z_.q, z_.grad);
            bool ok = std::isfinite(z_.log_p);
            for (double g : z_.grad) ok = ok && std::isfinite(g);
            if (ok) return;
        }
        throw InitializationFailure("no finite initial point after 100 attempts");
    }

    void init_step_size() {
        const PhasePoint start = z_;
        sample_momentum(z_);
        double h0 = hamiltonian(z_, inv_metric_);
        leapfrog(target_, z_, inv_metric_, step_);
        double h = hamiltonian(z_, inv_metric_);
        if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
        double delta_h = h0 - h;
        const int direction = delta_h > std::log(0.8) ? 1 : -1;
        for (;;) {
            z_ = start;
            sample_momentum(z_);
            h0 = hamiltonian(z_, inv_metric_);
            leapfrog(target_, z_, inv_metric_, step_);
            h = hamiltonian(z_, inv_metric_);
            if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
            delta_h = h0 - h;
            if (direction == 1 && !(delta_h > std::log(0.8))) break;
            if (direction == -1 && !(delta_h < std::log(0.8))) break;
            step_ = direction == 1 ? 2.0 * step_ : 0.5 * step_;
            if (step_ > 1e7 || step_ == 0.0) {
                throw InitializationFailure("step size search diverged; posterior may be improper");
            }
        }
        z_ = start;
    }

    void run(std::size_t chain_index, std::vector<double>& out, ChainInfo& info,
             const ProgressCallback& progress) {
        initialize();
        init_step_size();
        StepSizeAdapter step_adapter(cfg_.target_accept);
        step_adapter.set_mu(std::log(10.0 * step_));
        MetricAdapter metric_adapter(cfg_.warmup, dim_);

        const int total = cfg_.warmup + cfg_.sampling;
        double accept_sum = 0.0;
        double depth_sum = 0.0;
        for (int it = 0; it < total; ++it) {
            const bool warm = it < cfg_.warmup;
            const TransitionStats st = transition();
            info.gradient_evaluations += static_cast<std::uint64_t>(st.n_leapfrog);
            if (warm) {
                step_ = step_adapter.learn(st.accept_stat);
                if (metric_adapter.learn(inv_metric_, z_.q)) {
                    init_step_size();
                    step_adapter.set_mu(std::log(10.0 * step_));
                    step_adapter.restart();
                }
                if (it + 1 == cfg_.warmup) step_ = step_adapter.final_step();
            } else {
                if (st.divergent) ++info.divergences;
                if (st.depth >= cfg_.max_treedepth) ++info.max_treedepth_hits;
                accept_sum += st.accept_stat;
                depth_sum += st.depth;
                const auto row = target_.constrain(z_.q);
                out.insert(out.end(), row.begin(), row.end());
            }
            if (progress && (it + 1) % 100 == 0) {
                std::ostringstream line;
                line << "chain " << chain_index + 1 << " iteration " << it + 1 << "/" << total
                     << (warm ? " (warmup)" : " (sampling)") << " step=" << step_;
                progress(line.str());
            }
        }
        info.step_size = step_;
        info.inv_metric = inv_metric_;
        info.mean_accept = accept_sum / cfg_.sampling;
        info.mean_treedepth = depth_sum / cfg_.sampling;
    }

private:
    void sample_momentum(PhasePoint& z) {
        for (std::size_t i = 0; i < dim_; ++i) z.p[i] = rng_.normal() / std::sqrt(inv_metric_[i]);
    }

    Vec p_sharp(const PhasePoint& z) const {
        Vec out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) out[i] = inv_metric_[i] * z.p[i];
        return out;
    }

    static bool no_u_turn(const Vec& p_sharp_minus, const Vec& p_sharp_plus, const Vec& rho) {
        return dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0;
    }

    TransitionStats transition() {
        sample_momentum(z_);
        PhasePoint z_fwd = z_;
        PhasePoint z_bck = z_;
        PhasePoint z_sample = z_;
        PhasePoint z_propose = z_;

        Vec p_fwd_fwd = z_.p;
        Vec p_sharp_fwd_fwd = p_sharp(z_);
        Vec p_fwd_bck = z_.p;
        Vec p_sharp_fwd_bck = p_sharp_fwd_fwd;
        Vec p_bck_fwd = z_.p;
        Vec p_sharp_bck_fwd = p_sharp_fwd_fwd;
        Vec p_bck_bck = z_.p;
        Vec p_sharp_bck_bck = p_sharp_fwd_fwd;
        Vec rho = z_.p;

        double log_sum_weight = 0.0;
        const double h0 = hamiltonian(z_, inv_metric_);
        int n_leapfrog = 0;
        double sum_metro_prob = 0.0;
        int depth = 0;
        divergent_ = false;

        while (depth < cfg_.max_treedepth) {
            Vec rho_fwd(dim_, 0.0);
            Vec rho_bck(dim_, 0.0);
            bool valid_subtree;
            double log_sum_weight_subtree = -std::numeric_limits<double>::infinity();

            if (rng_.uniform() > 0.5) {
                rho_bck = rho;
                p_bck_fwd = p_fwd_bck;
                p_sharp_bck_fwd = p_sharp_fwd_bck;
                current_ = z_fwd;
                valid_subtree = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd,
                                           rho_fwd, p_fwd_bck, p_fwd_fwd, h0, 1.0, n_leapfrog,
                                           log_sum_weight_subtree, sum_metro_prob);
                z_fwd = current_;
            } else {
                rho_fwd = rho;
                p_fwd_bck = p_bck_fwd;
                p_sharp_fwd_bck = p_sharp_bck_fwd;
                current_ = z_bck;
                valid_subtree = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck,
                                           rho_bck, p_bck_fwd, p_bck_bck, h0, -1.0, n_leapfrog,
                                           log_sum_weight_subtree, sum_metro_prob);
                z_bck = current_;
            }
            if (!valid_subtree) break;
            ++depth;

            if (log_sum_weight_subtree > log_sum_weight) {
                z_sample = z_propose;
            } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
                z_sample = z_propose;
            }
            log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

            for (std::size_t i = 0; i < dim_; ++i) rho[i] = rho_bck[i] + rho_fwd[i];
            bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
            Vec rho_extended(dim_);
            for (std::size_t i = 0; i < dim_; ++i) rho_extended[i] = rho_bck[i] + p_fwd_bck[i];
            persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_extended);
            for (std::size_t i = 0; i < dim_; ++i) rho_extended[i] = rho_fwd[i] + p_bck_fwd[i];
            persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_extended);
            if (!persist) break;
        }

        z_ = z_sample;
        TransitionStats st;
        st.depth = depth;
        st.n_leapfrog = n_leapfrog;
        st.divergent = divergent_;
        st.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
        return st;
    }

    bool build_tree(int depth, PhasePoint& z_propose, Vec& p_sharp_beg, Vec& p_sharp_end,
                    Vec& rho, Vec& p_beg, Vec& p_end, double h0, double sign, int& n_leapfrog,
                    double& log_sum_weight, double& sum_metro_prob) {
        if (depth == 0) {
            leapfrog(target_, current_, inv_metric_, sign * step_);
            ++n_leapfrog;
            double h = hamiltonian(current_, inv_metric_);
            if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
            if (h - h0 > cfg_.max_energy_error) divergent_ = true;
            log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
            sum_metro_prob += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
            z_propose = current_;
            p_sharp_beg = p_sharp(current_);
            p_sharp_end = p_sharp_beg;
            for (std::size_t i = 0; i < dim_; ++i) rho[i] += current_.p[i];
            p_beg = current_.p;
            p_end = p_beg;
            return !divergent_;
        }

        double log_sum_weight_init = -std::numeric_limits<double>::infinity();
        Vec p_init_end(dim_);
        Vec p_sharp_init_end(dim_);
        Vec rho_init(dim_, 0.0);
        const bool valid_init =
            build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                       p_init_end, h0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob);
        if (!valid_init) return false;

        PhasePoint z_propose_final = current_;
        double log_sum_weight_final = -std::numeric_limits<double>::infinity();
        Vec p_final_beg(dim_);
        Vec p_sharp_final_beg(dim_);
        Vec rho_final(dim_, 0.0);
        const bool valid_final =
            build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                       p_final_beg, p_end, h0, sign, n_leapfrog, log_sum_weight_final, sum_metro_prob);
        if (!valid_final) return false;

        const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
        log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
        if (log_sum_weight_final > log_sum_weight_subtree) {
            z_propose = z_propose_final;
        } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
            z_propose = z_propose_final;
        }

        Vec rho_subtree(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            rho_subtree[i] = rho_init[i] + rho_final[i];
            rho[i] += rho_subtree[i];
        }
        bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
        Vec rho_extended(dim_);
        for (std::size_t i = 0; i < dim_; ++i) rho_extended[i] = rho_init[i] + p_final_beg[i];
        persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, rho_extended);
        for (std::size_t i = 0; i < dim_; ++i) rho_extended[i] = rho_final[i] + p_init_end[i];
        persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, rho_extended);
        return persist;
    }

    const LogDensity& target_;
    const SamplerConfig& cfg_;
    Rng rng_;
    std::size_t dim_;
    Vec inv_metric_;
    double step_ = 1.0;
    PhasePoint z_;
    PhasePoint current_;
    bool divergent_ = false;
};

}  // namespace

PosteriorDraws sample(const LogDensity& target, const SamplerConfig& cfg,
                      const ProgressCallback& progress) {
    cfg.validate();
    const auto chains = static_cast<std::size_t>(cfg.chains);
    PosteriorDraws draws;
    draws.names = target.output_names();
    draws.chains = chains;
    draws.iterations = static_cast<std::size_t>(cfg.sampling);
    {
        const std::vector<double> probe(target.dim(), 0.0);
        draws.dim = target.constrain(probe).size();
    }
    if (draws.names.size() != draws.dim) {
        throw ValidationError("target output names do not match its constrained dimension");
    }
    draws.chain_info.resize(chains);
    std::vector<std::vector<double>> per_chain(chains);
    std::vector<std::exception_ptr> errors(chains);

    auto run_chain = [&](std::size_t c) {
        try {
            auto local = target.clone();
            NutsChain chain(*local, cfg, Rng(cfg.seed + c));
            per_chain[c].reserve(draws.iterations * draws.dim);
            chain.run(c, per_chain[c], draws.chain_info[c], progress);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    const std::size_t workers =
        cfg.jobs <= 0 ? chains : std::min<std::size_t>(chains, static_cast<std::size_t>(cfg.jobs));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chains; ++c) run_chain(c);
    } else {
        for (std::size_t start = 0; start < chains; start += workers) {
            std::vector<std::thread> pool;
            for (std::size_t c = start; c < std::min(chains, start + workers); ++c) {
                pool.emplace_back(run_chain, c);
            }
            for (auto& th : pool) th.join();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    draws.values.reserve(chains * draws.iterations * draws.dim);
    for (const auto& chunk : per_chain) draws.values.insert(draws.values.end(), chunk.begin(), chunk.end());

    if (chains >= 2) {
        const auto conv = diagnostics(draws);
        draws.rhat = conv.rhat;
        draws.ess = conv.ess;
    } else {
        draws.rhat.assign(draws.dim, std::numeric_limits<double>::quiet_NaN());
        draws.ess.assign(draws.dim, std::numeric_limits<double>::quiet_NaN());
    }
    return draws;
}

}  // namespace bdarma
