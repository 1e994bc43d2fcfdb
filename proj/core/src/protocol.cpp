#include "qcoop/protocol.hpp"

#include <cmath>
#include <string>

#include "qcoop/error.hpp"

namespace qcoop {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_gain(const Matrix& k, const LtiPlant& plant, double bound, const std::string& what) {
    if (k.rows() != plant.m() || k.cols() != plant.n()) {
        throw ConfigError(what + " must be " + std::to_string(plant.m()) + "x" +
                          std::to_string(plant.n()) + ", got " + std::to_string(k.rows()) + "x" +
                          std::to_string(k.cols()));
    }
    numerics::require_finite(k, what);
    if (numerics::two_norm(k) >= bound) {
        throw ConfigError(what + ": norm exceeds the declared gain bound");
    }
}

// sum_j a_ij (xhat_ji - xhat_i - offset_ij)
Vector relative_sum(const Network& net, std::size_t agent, const Vector& own,
                    const std::map<std::size_t, Vector>& neighbors, const FormationLaw* formation) {
    const auto expected = net.neighbors(agent);
    if (neighbors.size() != expected.size()) {
        throw ConfigError("control_input: agent " + std::to_string(agent) + " expects " +
                          std::to_string(expected.size()) + " neighbor estimates, got " +
                          std::to_string(neighbors.size()));
    }
    Vector sum = Vector::Zero(own.size());
    for (std::size_t j : expected) {
        auto it = neighbors.find(j);
        if (it == neighbors.end()) {
            throw ConfigError("control_input: missing estimate of agent " + std::to_string(j) +
                              " at agent " + std::to_string(agent));
        }
        if (it->second.size() != own.size()) {
            throw ConfigError("control_input: estimate dimension mismatch");
        }
        const double a_ij =
            net.adjacency()(static_cast<Eigen::Index>(agent), static_cast<Eigen::Index>(j));
        Vector diff = it->second - own;
        if (formation != nullptr) {
            auto off = formation->offsets.find({j, agent});
            if (off != formation->offsets.end()) diff -= off->second;
        }
        sum += a_ij * diff;
    }
    return sum;
}

}  // namespace

std::string_view law_name(const ControlLaw& law) {
    return std::visit(Overloaded{
                          [](const ConsensusLaw&) { return std::string_view("consensus"); },
                          [](const FormationLaw&) { return std::string_view("formation"); },
                          [](const TrackingLaw&) { return std::string_view("tracking"); },
                          [](const MixedLaw&) { return std::string_view("mixed"); },
                      },
                      law);
}

bool has_sizing_guarantee(const ControlLaw& law) {
    return std::holds_alternative<ConsensusLaw>(law) || std::holds_alternative<MixedLaw>(law);
}

void validate(const ControlLaw& law, const LtiPlant& plant, const Network& net, double gain_bound) {
    std::visit(Overloaded{
                   [&](const ConsensusLaw& l) { check_gain(l.k, plant, gain_bound, "law.K"); },
                   [&](const FormationLaw& l) {
                       check_gain(l.k, plant, gain_bound, "law.K");
                       for (const auto& [key, offset] : l.offsets) {
                           const auto [j, i] = key;
                           if (i >= net.size() || j >= net.size() ||
                               net.adjacency()(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j)) <= 0.0) {
                               throw ConfigError("law.offsets: " + std::to_string(j + 1) + "->" +
                                                 std::to_string(i + 1) + " is not an edge");
                           }
                           if (offset.size() != plant.n() || !offset.allFinite()) {
                               throw ConfigError("law.offsets: offset must be a finite n-vector");
                           }
                       }
                   },
                   [&](const TrackingLaw& l) {
                       check_gain(l.k1, plant, gain_bound, "law.K1");
                       check_gain(l.k2, plant, gain_bound, "law.K2");
                       if (l.leader_weights.size() != net.size()) {
                           throw ConfigError("law.leader_weights: one weight per agent required");
                       }
                       for (double b : l.leader_weights) {
                           if (!(b >= 0.0) || !std::isfinite(b)) {
                               throw ConfigError("law.leader_weights: weights must be >= 0");
                           }
                       }
                   },
                   [&](const MixedLaw& l) {
                       check_gain(l.k_local, plant, gain_bound, "law.K1");
                       check_gain(l.k_coop, plant, gain_bound, "law.K2");
                   },
               },
               law);
}

Vector control_input(const ControlLaw& law, const Network& net, std::size_t agent,
                     const Vector& own_estimate, const std::map<std::size_t, Vector>& neighbor_estimates,
                     const LawExtras& extras) {
    if (agent >= net.size()) throw ConfigError("control_input: agent id out of range");
    return std::visit(
        Overloaded{
            [&](const ConsensusLaw& l) -> Vector {
                return l.k * relative_sum(net, agent, own_estimate, neighbor_estimates, nullptr);
            },
            [&](const FormationLaw& l) -> Vector {
                return l.k * relative_sum(net, agent, own_estimate, neighbor_estimates, &l);
            },
            [&](const TrackingLaw& l) -> Vector {
                Vector u = l.k1 * relative_sum(net, agent, own_estimate, neighbor_estimates, nullptr);
                const double b = l.leader_weights.at(agent);
                if (b > 0.0) {
                    if (extras.leader_estimate == nullptr) {
                        throw ConfigError("control_input: tracking law needs the leader estimate");
                    }
                    u += l.k2 * (b * (*extras.leader_estimate - own_estimate));
                }
                return u;
            },
            [&](const MixedLaw& l) -> Vector {
                if (extras.own_state == nullptr) {
                    throw ConfigError("control_input: mixed law needs the agent's own state");
                }
                return l.k_local * *extras.own_state +
                       l.k_coop * relative_sum(net, agent, own_estimate, neighbor_estimates, nullptr);
            },
        },
        law);
}

Vector precise_control_input(const Matrix& k, const Network& net, std::size_t agent,
                             const std::vector<Vector>& states) {
    if (states.size() != net.size() || agent >= net.size()) {
        throw ConfigError("precise_control_input: one state per agent required");
    }
    std::map<std::size_t, Vector> neighbors;
    for (std::size_t j : net.neighbors(agent)) neighbors.emplace(j, states[j]);
    return k * relative_sum(net, agent, states[agent], neighbors, nullptr);
}

}  // namespace qcoop
