#pragma once

#include "bdarma/design.hpp"
#include "bdarma/model.hpp"
#include "bdarma/random.hpp"
#include "bdarma/simplex.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bdarma {

/// Data-generating process for a B-DARMA series.
struct DgpConfig {
    ModelSpec spec;
    ParameterVector truth;
    Design design = Design::intercept(1);
    int T = 100;
    std::uint64_t seed = 1;
    /// Dirichlet concentration for y_1..y_m.
    std::vector<double> initial_alpha;

    void validate() const;
};

/// y_1..y_m from Dirichlet(initial_alpha), then y_t ~ Dir(phi_t alr_inv(eta_t)).
/// Throws SimulationDiverged naming t on a non-finite recursion.
std::vector<Composition> simulate(const DgpConfig& cfg);
std::vector<Composition> simulate(const DgpConfig& cfg, Rng& rng);

/// "main" or "supplementary": DARMA(2,1), J = 6, phi = 500, X_t = I_5.
DgpConfig builtin_dgp(const std::string& name);

/// Names accepted by builtin_dgp.
std::vector<std::string> builtin_dgp_names();

}  // namespace bdarma
