#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcoop/codec.hpp"
#include "qcoop/graph.hpp"
#include "qcoop/numerics.hpp"
#include "qcoop/plant.hpp"
#include "qcoop/protocol.hpp"

namespace qcoop {

// Ticks end once the encoder scale gamma^(t-1) drops below this.
inline constexpr double kScaleUnderflow = 1e-280;

struct SimConfig {
    LtiPlant plant;
    Network net;
    ControlLaw law = ConsensusLaw{};
    CommParams comm;
    std::vector<Vector> initial_states;             // x_i(0), N entries of size n
    std::vector<Vector> initial_estimates;          // xhat_j0
    std::vector<Vector> initial_control_estimates;  // uhat_j0
    std::uint64_t horizon = 100;
    CodecMode mode = CodecMode::quantized;
    std::uint64_t stride = 1;         // keep every stride-th step (t = 0 and the last are always kept)
    bool capture_frames = false;      // keep every SymbolFrame (quantized mode)
    bool stop_on_saturation = false;  // end the run at the first saturated symbol
    // Tracking law only: the leader's own state and its channel's initial estimate.
    Vector leader_state;
    Vector leader_estimate;
};

// Throws ConfigError on any dimension or parameter inconsistency.
void validate(const SimConfig& cfg);

// One stored time step. Stacked vectors are agent-major: entry i*n + k is
// component k of agent i. quant_error / control_quant_error hold the errors of
// the symbols emitted at tick t (zero at t = 0).
struct TraceStep {
    std::uint64_t t = 0;
    Vector x, x_hat, u, u_hat;
    Vector e;      // x - x_hat
    Vector h;      // u - u_hat
    Vector delta;  // x - (1 pi^T (x) I) x
    Vector x_bar;  // (1 pi^T (x) I) x
    Vector quant_error;
    Vector control_quant_error;
    std::size_t saturations = 0;
};

struct SaturationEvent {
    std::uint64_t t = 0;
    std::size_t agent = 0;  // N denotes the tracking leader
    bool control = false;
    std::size_t component = 0;
    double magnitude = 0.0;  // |scaled innovation|
};

enum class SimStatus { completed, scaling_underflow, stopped_on_saturation };
std::string_view to_string(SimStatus status);

struct SimTrace {
    std::size_t agents = 0;
    Eigen::Index n = 0, m = 0, p = 0;
    Vector pi;
    SimStatus status = SimStatus::completed;
    std::uint64_t final_t = 0;

    std::vector<TraceStep> steps;  // subject to stride

    // Every step, regardless of stride.
    std::vector<double> delta_norm;
    std::vector<std::vector<double>> e_norm;  // [t][j] = ||E_j(t)||
    std::vector<double> reference_deviation;  // max_i ||x_i(t) - A^t sum_i pi_i x_i(0)||
    std::vector<std::size_t> saturations_per_step;

    std::vector<SaturationEvent> saturations;
    double max_quant_error = 0.0;          // observed W
    double max_control_quant_error = 0.0;  // observed W_u
    double state_step = 0.0;    // alpha, or 0 in precise mode
    double control_step = 0.0;  // alpha_u, or 0 in precise mode
    int bits_per_channel_step = 0;
    std::size_t channels = 0;
    std::uint64_t total_bits = 0;
    std::uint64_t decoder_mismatches = 0;  // decoder state != encoder state, bitwise

    std::vector<SymbolFrame> frames;
    std::vector<Vector> leader_states;  // tracking law only, one per tick
};

// Encoders, decoders and plants advanced tick by tick.
SimTrace simulate_primitive(const SimConfig& cfg);

// The closed loop written in the error coordinates (E, delta, H) and advanced
// directly by their coupled recursion. Consensus law, quantized mode only.
SimTrace simulate_coupled(const SimConfig& cfg);

struct TraceComparison {
    bool agree = true;
    double worst_ratio = 0.0;  // max ||a - b|| / tolerance; agree iff <= 1
    std::uint64_t worst_t = 0;
    std::string worst_quantity;
    std::size_t steps_compared = 0;
    // Earliest step beyond tolerance; meaningful only when !agree.
    std::uint64_t first_divergence_t = 0;
    // Some symbol of `a` at or before first_divergence_t had its quantizer
    // input within 1e-9 of a bin edge, where the two rounding routes may
    // legitimately pick different bins. Diagnostic only: agree stays false.
    bool boundary_tie = false;
    // First step at which the two routes emitted a different symbol (their
    // quantizer errors differ by more than half a step); unset if none.
    std::optional<std::uint64_t> symbol_flip_t;
    // Largest quantizer-input discrepancy between the routes before that
    // flip, in steps. Values far above 1e-9 mean rounding in x-scale
    // arithmetic has been amplified by 1 / gamma^t, not a logic error.
    double pre_flip_drift = 0.0;
};

// Per step and per quantity (E, delta, H): ||a - b|| <= rel_tol * max(||a||, ||b||)
// + abs_floor * max(1, max_{s <= t} ||x(s)||). The floor covers cancellation in
// delta = x - x_bar and roundoff carried forward along unstable consensus modes.
TraceComparison compare_traces(const SimTrace& a, const SimTrace& b, double rel_tol = 1e-8,
                               double abs_floor = 1e-10);

struct MetricsOptions {
    std::uint64_t fit_begin = 50;
    std::uint64_t fit_end = 200;
};

struct Metrics {
    std::uint64_t steps = 0;
    double decay_rate = 0.0;  // exp(slope) of log ||delta(t)|| on the fit window
    std::size_t fit_points = 0;
    double final_delta_norm = 0.0;
    double final_max_e_norm = 0.0;
    double max_reference_deviation_final = 0.0;
    std::uint64_t saturation_events = 0;  // symbols exist only for t >= 1
    double observed_w = 0.0;
    double observed_w_u = 0.0;
    int bits_per_channel_step = 0;
    std::uint64_t total_bits = 0;
    std::uint64_t decoder_mismatches = 0;
    SimStatus status = SimStatus::completed;
};

Metrics compute_metrics(const SimTrace& trace, const MetricsOptions& options = {});

}  // namespace qcoop
