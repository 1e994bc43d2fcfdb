#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcoop/analysis.hpp"
#include "qcoop/simulator.hpp"
#include "qcoop/witness.hpp"

namespace qcoop::app {

inline constexpr int kSchemaVersion = 1;

// How one family of initial vectors is produced.
struct InitialSpec {
    enum class Kind { zero, uniform, given } kind = Kind::zero;
    double lo = 0.0, hi = 0.0;  // uniform box [lo, hi) per component
    std::vector<Vector> values;  // given
};

struct SizingSpec {
    std::optional<double> c_x, c_xhat, c_uhat;  // unset: taken from the initial specs
    std::optional<double> epsilon, epsilon_bar1;
    bool empirical = false;  // refine auto levels by empirical_level_search
    LevelSearchOptions search;
    GainSearchOptions gains;
};

struct SimulationSpec {
    std::uint64_t horizon = 200;
    std::uint64_t seed = 1;
    CodecMode mode = CodecMode::quantized;
    std::uint64_t stride = 1;
    bool capture_frames = true;
    InitialSpec initial_states{InitialSpec::Kind::uniform, 0.0, 1.0, {}};
    InitialSpec initial_estimates;
    InitialSpec initial_control_estimates;
};

// A parsed experiment. Fields flagged *_auto are placeholders until resolve().
struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::string name;
    LtiPlant plant;
    std::size_t agents = 0;
    std::vector<Edge> edges;  // zero-based internally, 1-based on disk
    Network net;
    ControlLaw law;
    bool k_auto = false;  // consensus K
    Vector leader_state, leader_estimate;
    CommParams comm;
    bool g_auto = false, gamma_auto = false, levels_y_auto = false, levels_u_auto = false;
    SizingSpec sizing;
    SimulationSpec simulation;
    WitnessOptions witness;

    bool has_auto() const { return k_auto || g_auto || gamma_auto || levels_y_auto || levels_u_auto; }
};

// Throws ConfigError "<origin>:<line>:<col>: <json pointer>: <problem>".
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

// Fully explicit JSON for a config (autos must be resolved); parses back to an equal config.
std::string config_to_json(const ExperimentConfig& cfg);

struct Resolution {
    std::vector<std::string> resolved;  // pointers of fields that were "auto"
    std::optional<GainSearchResult> k_search, g_search;
    std::optional<SizingResult> sizing;
    std::optional<LevelSearchResult> level_search;
};

SizingInputs sizing_inputs(const ExperimentConfig& cfg);

// Replaces every "auto" field. always_size runs the sizing even without
// auto fields (consensus law only). Throws InfeasibleError when an auto
// field cannot be produced.
Resolution resolve(ExperimentConfig& cfg, bool always_size = false);

// Simulation config with initial conditions drawn from `seed`.
SimConfig make_sim_config(const ExperimentConfig& cfg, std::uint64_t seed);
InitialSampler make_sampler(const ExperimentConfig& cfg);

}  // namespace qcoop::app
