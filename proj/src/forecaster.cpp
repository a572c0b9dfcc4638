#include "bdarma/forecaster.hpp"

#include "bdarma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <thread>

namespace bdarma {

namespace {

// Trajectory noise is keyed on the draw's values (plus a repeat counter for
// identical draws) so that reordering draws reorders trajectories without
// changing them.
std::uint64_t hash_draw(std::span<const double> theta) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (double v : theta) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix_seed(h, bits);
    }
    return h;
}

/// Returns false when the rollout leaves the representable range.
bool roll_out(const ModelSpec& spec, const Design& design, const LikelihoodEvaluator& eval,
              std::span<const double> theta, std::size_t T, int H, bool noise_free, Rng& rng,
              std::span<double> out) {
    const auto params = ParameterVector::unpack(spec, theta);
    const auto J = static_cast<std::size_t>(spec.J);
    std::vector<AlrVector> eta_hist;
    try {
        eta_hist = eval.linear_predictors(theta);
    } catch (const Error&) {
        return false;
    }
    std::vector<AlrVector> alr_hist;
    alr_hist.reserve(T + static_cast<std::size_t>(H));
    for (const auto& y : eval.series()) alr_hist.push_back(alr(y));
    std::vector<double> alpha(J);
    for (int h = 0; h < H; ++h) {
        const auto t = static_cast<long>(T) + h;
        AlrVector eta = linear_predictor(spec, params, design, alr_hist, eta_hist, t);
        for (double v : eta) {
            if (!std::isfinite(v) || std::abs(v) > 700.0) return false;
        }
        const Composition mu = alr_inv(eta);
        Composition y = mu;
        if (!noise_free) {
            double phi;
            try {
                phi = precision_at(params, design, t);
            } catch (const DomainError&) {
                return false;
            }
            for (std::size_t j = 0; j < J; ++j) alpha[j] = phi * mu[j];
            y = dirichlet_sample(alpha, rng);
        }
        for (std::size_t j = 0; j < J; ++j) out[static_cast<std::size_t>(h) * J + j] = y[j];
        alr_hist.push_back(alr(y));
        eta_hist.push_back(std::move(eta));
    }
    return true;
}

}  // namespace

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ForecastResult forecast(const ModelSpec& spec, const Design& design, const PosteriorDraws& draws,
                        std::span<const Composition> history, int H,
                        const ForecastOptions& options) {
    if (H < 1) throw ValidationError("forecast horizon must be at least 1");
    if (history.size() <= static_cast<std::size_t>(spec.m())) {
        throw ValidationError("history must be longer than max(P, Q)");
    }
    const std::size_t C = count_parameters(spec);
    if (draws.dim < C) throw ValidationError("draws do not contain the model parameters");
    if (options.thin < 1) throw ValidationError("thin must be at least 1");

    const LikelihoodEvaluator eval(spec, design, {history.begin(), history.end()});
    const std::size_t T = history.size();
    const auto J = static_cast<std::size_t>(spec.J);
    const auto Hs = static_cast<std::size_t>(H);

    std::vector<std::span<const double>> selected;
    std::size_t skipped = 0;
    std::size_t index = 0;
    for (std::size_t c = 0; c < draws.chains; ++c) {
        for (std::size_t i = 0; i < draws.iterations; ++i, ++index) {
            if (index % options.thin != 0) continue;
            const auto theta = draws.draw(c, i).first(C);
            if (std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); })) {
                selected.push_back(theta);
            } else {
                ++skipped;
            }
        }
    }

    std::vector<std::uint64_t> keys(selected.size());
    {
        std::map<std::uint64_t, std::uint64_t> seen;
        for (std::size_t s = 0; s < selected.size(); ++s) {
            const auto h = hash_draw(selected[s]);
            keys[s] = mix_seed(mix_seed(options.seed, h), seen[h]++);
        }
    }

    std::vector<double> buffer(selected.size() * Hs * J);
    std::vector<char> ok(selected.size(), 0);
    auto work = [&](std::size_t begin, std::size_t end) {
        const LikelihoodEvaluator local = eval;
        for (std::size_t s = begin; s < end; ++s) {
            Rng rng(keys[s]);
            ok[s] = roll_out(spec, design, local, selected[s], T, H, options.noise_free, rng,
                             std::span<double>(buffer).subspan(s * Hs * J, Hs * J));
        }
    };
    std::size_t workers = options.jobs <= 0 ? std::max(1u, std::thread::hardware_concurrency())
                                            : static_cast<std::size_t>(options.jobs);
    workers = std::max<std::size_t>(1, std::min(workers, selected.size()));
    if (workers == 1) {
        work(0, selected.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (selected.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(selected.size(), b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }

    ForecastResult out;
    out.horizon = Hs;
    out.J = J;
    for (std::size_t s = 0; s < selected.size(); ++s) {
        if (!ok[s]) {
            ++skipped;
            continue;
        }
        out.trajectories.insert(out.trajectories.end(), buffer.begin() + static_cast<long>(s * Hs * J),
                                buffer.begin() + static_cast<long>((s + 1) * Hs * J));
        ++out.draws;
    }
    out.skipped = skipped;
    if (out.draws == 0) throw Error("no posterior draw produced a finite forecast");

    out.point.assign(Hs, std::vector<double>(J, 0.0));
    out.q05 = out.q50 = out.q95 = out.point;
    std::vector<double> column(out.draws);
    for (std::size_t h = 0; h < Hs; ++h) {
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t s = 0; s < out.draws; ++s) column[s] = out.value(s, h, j);
            double sum = 0.0;
            for (double v : column) sum += v;
            out.point[h][j] = sum / static_cast<double>(out.draws);
            std::sort(column.begin(), column.end());
            out.q05[h][j] = quantile(column, 0.05);
            out.q50[h][j] = quantile(column, 0.50);
            out.q95[h][j] = quantile(column, 0.95);
        }
        double total = 0.0;
        for (double v : out.point[h]) total += v;
        for (double& v : out.point[h]) v /= total;
    }
    return out;
}

std::vector<std::vector<double>> mean_forecast_only(const ModelSpec& spec, const Design& design,
                                                    const PosteriorDraws& draws,
                                                    std::span<const Composition> history, int H,
                                                    const ForecastOptions& options) {
    return forecast(spec, design, draws, history, H, options).point;
}

}  // namespace bdarma
