#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qcoop/graph.hpp"
#include "qcoop/numerics.hpp"
#include "qcoop/plant.hpp"
#include "qcoop/simulator.hpp"

namespace qcoop {

// Rank tolerance of the PBH tests, relative to max(1, sigma_max). Looser
// than kRankTolerance because the tested eigenvalues are themselves computed.
inline constexpr double kPbhRankTolerance = 1e-8;

struct ModeCertificate {
    Complex eigenvalue;
    CVector null_vector;  // v with (A - lambda I) v = 0 and C v = 0 (or its dual)
};

struct PbhResult {
    bool holds = true;
    std::vector<ModeCertificate> failing;
};

// rank [A - lambda I; C] = n for every eigenvalue with |lambda| >= 1 - 1e-9.
PbhResult check_detectability(const LtiPlant& plant);
// rank [A - lambda I, B] = n for every eigenvalue with |lambda| >= 1 - 1e-9.
PbhResult check_stabilizability(const LtiPlant& plant);

struct A1Result {
    bool holds = false;
    double worst_radius = 0.0;
    std::vector<double> radii;  // rho(A - lambda_i B K), i = 2..N
};

// Simultaneous stabilization by one K over the nonzero part of the Laplacian
// spectrum (one zero eigenvalue is excluded).
A1Result check_a1(const LtiPlant& plant, const NetworkSpectrum& spec, const Matrix& k);

struct A1PrimeResult {
    bool holds = false;
    bool stabilizable = false;
    double lhs = 0.0;  // product of unstable |lambda(A)|, 0 if rho(A) < 1
    double rhs = 0.0;  // 1 / inf_w max_{j>=2} |1 - w lambda_j|
    double omega = 0.0;
};

// Single-input plants only (ConfigError otherwise).
A1PrimeResult check_a1_prime(const LtiPlant& plant, const NetworkSpectrum& spec);

// inf over real w of max_j |1 - w lambda_j| and its minimizer, by golden
// section on a self-expanding bracket (the objective is convex in w).
std::pair<double, double> min_max_relaxation(const std::vector<Complex>& lambdas);

struct GainSearchOptions {
    std::uint64_t budget = 10000;  // objective evaluations
    std::uint64_t seed = 1;
};

struct GainSearchResult {
    bool found = false;
    Matrix gain;
    double radius = 0.0;  // best objective value reached
    std::uint64_t evaluations = 0;
    std::string method;  // "trivial", "warm-start", "pattern-search"
};

// Minimizes max_{i>=2} rho(A - lambda_i B K). found implies check_a1 holds.
GainSearchResult search_gain_k(const LtiPlant& plant, const NetworkSpectrum& spec,
                               const GainSearchOptions& options = {});
// Minimizes rho(A - G C) through the dual problem on (A^T, C^T).
GainSearchResult search_gain_g(const LtiPlant& plant, const GainSearchOptions& options = {});

struct SizingInputs {
    double c_x = 1.0;
    double c_xhat = 1.0;
    double c_uhat = 1.0;
    std::optional<double> epsilon;       // unset: grid choice
    std::optional<double> epsilon_bar1;  // unset: grid choice
    std::optional<double> gamma;         // unset: midpoint of (max(eta, eta_bar1), 1)
};

inline const std::vector<double> kEpsilonGrid{1e-3, 1e-2, 1e-1, 1.0};

struct SizingTerm {
    std::string name;
    double value = 0.0;
};

struct SizingResult {
    double epsilon = 0.0, epsilon_bar1 = 0.0;
    double eta = 0.0, eta_bar1 = 0.0;
    double m_const = 0.0, m_bar1 = 0.0;
    double gamma = 0.0;
    double r_const = 0.0;
    double e_bound = 0.0;      // ||E(t)|| <= e_bound * gamma^t
    double gamma_const = 0.0;  // Gamma
    double delta_bound = 0.0;  // ||delta(t)|| <= delta_bound * gamma^t
    double l_threshold = 0.0;
    double l_u_threshold = 0.0;
    std::optional<std::int64_t> levels_y;  // unset on overflow
    std::optional<std::int64_t> levels_u;
    bool overflow = false;
    bool stable_plant_case = false;  // rho(A) < 1 with K = 0 and G = 0
    std::vector<SizingTerm> diagnostics;
};

// Level counts that make saturation impossible for initial conditions with
// ||x_i(0)||_inf <= c_x, ||xhat_j0||_inf <= c_xhat, ||uhat_j0||_inf <= c_uhat.
// PreconditionError unless A1 holds for k and rho(A - G C) < 1;
// InfeasibleError when no epsilon gives eta < 1 or gamma is out of range.
SizingResult synthesize_protocol(const LtiPlant& plant, const Network& net, const Matrix& k,
                                 const Matrix& g, const SizingInputs& inputs, double alpha,
                                 double alpha_u);

// Smallest integer level count strictly above threshold / step - 1/2; unset
// when it is not representable.
std::optional<std::int64_t> levels_for_threshold(double threshold, double step);

// Draws fresh initial conditions into a config for one trial.
using InitialSampler = std::function<void(std::mt19937_64&, SimConfig&)>;

struct LevelSearchOptions {
    std::uint64_t horizon = 300;
    std::uint64_t trials = 100;
    std::uint64_t seed = 1;
    std::int64_t cap = 16384;
};

struct LevelSearchResult {
    bool found = false;
    std::int64_t levels_y = 0;
    std::int64_t levels_u = 0;
    std::uint64_t simulations = 0;
};

// Heuristic: bisection for the smallest (L, L_u) with no saturation over all
// trials, jointly first and then per quantizer. No guarantee beyond the trials.
LevelSearchResult empirical_level_search(const SimConfig& base, const InitialSampler& sampler,
                                         const LevelSearchOptions& options = {});

// Uniform draw on [lo, hi) built from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64& rng);
InitialSampler uniform_box_sampler(double lo, double hi);

}  // namespace qcoop
