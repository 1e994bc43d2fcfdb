#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcoop/numerics.hpp"
#include "qcoop/simulator.hpp"

namespace qcoop {

enum class WitnessKind { undetectable, unstabilizable, schur_growth };
std::string_view to_string(WitnessKind kind);

struct WitnessOptions {
    std::uint64_t horizon = 40;
    // Declared bound L_G on ||G||; infinite means "use ||G|| of the concrete gain".
    double gain_bound = std::numeric_limits<double>::infinity();
    // Decay bound varrho in [gamma, 1); unset means (1 + gamma) / 2.
    std::optional<double> varrho;
    // Size a with |lambda_1 - gamma| in place of 1 - varrho.
    bool gamma_gap_constant = false;
};

struct WitnessReport {
    WitnessKind kind = WitnessKind::undetectable;
    std::vector<Vector> initial_states;
    std::vector<Vector> initial_estimates;
    std::vector<Vector> initial_control_estimates;
    double state_ball = 0.0;     // max_i ||x_i(0)||_inf
    double estimate_ball = 0.0;  // max_j ||xhat_j0||_inf
    double control_ball = 0.0;   // max_j ||uhat_j0||_inf

    std::string quantity;          // what `observed` measures
    std::vector<double> observed;  // per tick t = 0..final
    std::vector<double> envelope;  // predicted lower bound (or exact value) per tick
    bool confirmed = false;        // observed >= envelope / 2 at every tick, plus kind checks

    // undetectable
    Vector unobservable_start;
    std::uint64_t nonzero_symbols = 0;
    bool estimates_identically_zero = false;
    bool controls_identically_zero = false;
    // unstabilizable
    Matrix unstable_block;
    double recursion_residual = 0.0;  // max_t ||zeta(t) - A_u^t zeta(0)|| / ||A_u^t zeta(0)||
    Complex laplacian_eigenvalue;
    // schur_growth
    double a_const = 0.0;
    Complex lambda1;
    double block_radius = 0.0;

    std::uint64_t saturation_events = 0;
    std::vector<std::string> notes;
};

// Each witness replaces the initial conditions of `base` (consensus law
// required) and simulates the closed loop for options.horizon ticks.
// PreconditionError when the assumption it defeats actually holds.
WitnessReport undetectable_witness(const SimConfig& base, const WitnessOptions& options = {});
WitnessReport unstabilizable_witness(const SimConfig& base, const WitnessOptions& options = {});
WitnessReport schur_growth_witness(const SimConfig& base, const WitnessOptions& options = {});

// Block matrix [[I (x) (A - G C), 0], [(phi_bar (x) I)(L (x) B K), Jbar(K)]]
// acting on (E, phi_bar-projected delta).
Matrix error_block_matrix(const LtiPlant& plant, const Network& net, const Matrix& k, const Matrix& g);

}  // namespace qcoop
