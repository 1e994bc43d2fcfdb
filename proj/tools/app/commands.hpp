#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace qcoop::app {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailed = 1,  // run completed but a check failed
    kExitConfig = 2,
    kExitInfeasible = 3,
    kExitOracleMismatch = 4,
};

struct CommandOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> horizon;
    bool oracle = false;
    std::string out_dir = "out";
    std::string format = "csv";  // trace format: csv or json
    std::string witness_kind;    // undetectable | unstabilizable | schur-growth
    std::uint64_t runs = 1;      // reproduce-paper: consecutive seeds
    std::optional<std::int64_t> levels;  // reproduce-paper: override L = L_u
};

int cmd_analyze(const CommandOptions& opts, std::ostream& out);
int cmd_synthesize(const CommandOptions& opts, std::ostream& out);
int cmd_simulate(const CommandOptions& opts, std::ostream& out);
int cmd_witness(const CommandOptions& opts, std::ostream& out);
int cmd_reproduce_paper(const CommandOptions& opts, std::ostream& out);

// Runs a command, mapping library errors to exit codes with a message on err.
int run_guarded(const std::function<int()>& command, std::ostream& err);

// The bundled four-agent experiment (second-order plant, K = (0.2, 0),
// G = (0.5, 0)^T, gamma = 0.95, alpha = alpha_u = 1, L = L_u = 20).
const std::string& reference_config_json();

// Pass thresholds of one reference run.
inline constexpr double kReferenceConvergence = 1e-6;  // max_j ||E_j||, ||delta|| at the horizon
inline constexpr double kReferenceDecayRate = 0.96;    // fitted on t in [50, 200]
inline constexpr double kReferenceLimitDeviation = 1e-4;  // at t = 200
inline constexpr std::uint64_t kReferenceLimitTick = 200;
inline constexpr std::uint64_t kOracleHorizon = 100;

struct ReferenceCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct ReferenceRun {
    std::uint64_t seed = 0;
    SimTrace trace;
    Metrics metrics;
    std::optional<TraceComparison> oracle;
    std::vector<ReferenceCheck> checks;
    bool pass = false;
};

ReferenceRun run_reference(const ExperimentConfig& cfg, std::uint64_t seed, bool with_oracle);

}  // namespace qcoop::app
