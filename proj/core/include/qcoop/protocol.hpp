#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qcoop/graph.hpp"
#include "qcoop/numerics.hpp"
#include "qcoop/plant.hpp"

namespace qcoop {

// u_i = K sum_j a_ij (xhat_ji - xhat_i)
struct ConsensusLaw {
    Matrix k;
};

// u_i = K sum_j a_ij (xhat_ji - xhat_i - b_ij); offsets keyed by (from j, to i).
struct FormationLaw {
    Matrix k;
    std::map<std::pair<std::size_t, std::size_t>, Vector> offsets;
};

// u_i = K1 sum_j a_ij (xhat_ji - xhat_i) + K2 b_i0 (xhat_0i - xhat_i), where
// agent 0 is an uncontrolled leader outside the network.
struct TrackingLaw {
    Matrix k1;
    Matrix k2;
    std::vector<double> leader_weights;  // b_i0 >= 0 per follower
};

// u_i = K1 x_i + K2 sum_j a_ij (xhat_ji - xhat_i); uses the agent's own true state.
struct MixedLaw {
    Matrix k_local;
    Matrix k_coop;
};

using ControlLaw = std::variant<ConsensusLaw, FormationLaw, TrackingLaw, MixedLaw>;

std::string_view law_name(const ControlLaw& law);
// Consensus and mixed laws come with sizing guarantees; formation and
// tracking are simulated only.
bool has_sizing_guarantee(const ControlLaw& law);

// Throws ConfigError on gain dimension mismatches, a gain norm at or above
// gain_bound, offsets on non-edges, or negative leader weights.
void validate(const ControlLaw& law, const LtiPlant& plant, const Network& net,
              double gain_bound = std::numeric_limits<double>::infinity());

// Optional inputs some variants need.
struct LawExtras {
    const Vector* own_state = nullptr;        // mixed
    const Vector* leader_estimate = nullptr;  // tracking, when b_i0 > 0
};

// neighbor_estimates must cover exactly N_i; throws ConfigError otherwise.
Vector control_input(const ControlLaw& law, const Network& net, std::size_t agent,
                     const Vector& own_estimate, const std::map<std::size_t, Vector>& neighbor_estimates,
                     const LawExtras& extras = {});

// Baseline law on true states: K sum_j a_ij (x_j - x_i).
Vector precise_control_input(const Matrix& k, const Network& net, std::size_t agent,
                             const std::vector<Vector>& states);

}  // namespace qcoop
