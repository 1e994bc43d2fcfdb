#include <cmath>

#include <gtest/gtest.h>

#include "qcoop/analysis.hpp"
#include "qcoop/error.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace qcoop {
namespace {

using testing::Gen;

LtiPlant make_plant(Matrix a, Matrix b, Matrix c) { return LtiPlant{std::move(a), std::move(b), std::move(c)}; }

TEST(Detectability, Examples) {
    EXPECT_TRUE(check_detectability(testing::reference_plant()).holds);

    const auto blind = check_detectability(make_plant(Matrix{{1.2}}, Matrix{{1.0}}, Matrix{{0.0}}));
    EXPECT_FALSE(blind.holds);
    ASSERT_EQ(blind.failing.size(), 1u);
    EXPECT_NEAR(blind.failing[0].eigenvalue.real(), 1.2, 1e-12);

    const LtiPlant hidden = make_plant(Matrix{{2.0, 0.0}, {0.0, 0.5}}, Matrix{{1.0}, {1.0}}, Matrix{{0.0, 1.0}});
    const auto r = check_detectability(hidden);
    EXPECT_FALSE(r.holds);
    ASSERT_EQ(r.failing.size(), 1u);
    EXPECT_NEAR(r.failing[0].eigenvalue.real(), 2.0, 1e-12);
    const CVector v = r.failing[0].null_vector;
    EXPECT_LE((hidden.c.cast<Complex>() * v).norm(), 1e-9);
    EXPECT_NEAR(std::abs(v(0)), 1.0, 1e-9);
}

TEST(Stabilizability, MirrorExamples) {
    EXPECT_TRUE(check_stabilizability(testing::reference_plant()).holds);
    EXPECT_FALSE(check_stabilizability(make_plant(Matrix{{1.2}}, Matrix{{0.0}}, Matrix{{1.0}})).holds);
    const LtiPlant stuck = make_plant(Matrix{{2.0, 0.0}, {0.0, 0.5}}, Matrix{{0.0}, {1.0}}, Matrix{{1.0, 1.0}});
    const auto r = check_stabilizability(stuck);
    EXPECT_FALSE(r.holds);
    ASSERT_EQ(r.failing.size(), 1u);
    EXPECT_NEAR(r.failing[0].eigenvalue.real(), 2.0, 1e-12);
}

TEST(Detectability, BoundaryEigenvalueCountsAsUnstable) {
    EXPECT_FALSE(check_detectability(make_plant(Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{0.0}})).holds);
    EXPECT_TRUE(check_detectability(make_plant(Matrix{{0.999}}, Matrix{{1.0}}, Matrix{{0.0}})).holds);
}

TEST(Pbh, AgreesWithRankOfRestrictedGramians) {
    Gen g(73);
    int undetectable = 0, unstabilizable = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<Eigen::Index>(g.integer(1, 5));
        const auto m = static_cast<Eigen::Index>(g.integer(1, 2));
        const auto p = static_cast<Eigen::Index>(g.integer(1, 2));
        // Block-triangular draws so that failures actually occur.
        Matrix a = g.matrix(n, n, -1.5, 1.5);
        Matrix b = g.matrix(n, m), c = g.matrix(p, n);
        if (n > 1 && g.coin(0.5)) {
            const auto split = static_cast<Eigen::Index>(g.integer(1, n - 1));
            a.bottomLeftCorner(n - split, split).setZero();
            b.bottomRows(n - split).setZero();
        }
        if (n > 1 && g.coin(0.5)) {
            const auto split = static_cast<Eigen::Index>(g.integer(1, n - 1));
            a.bottomLeftCorner(n - split, split).setZero();
            c.leftCols(split).setZero();
        }
        const LtiPlant plant = make_plant(a, b, c);
        const bool det = check_detectability(plant).holds;
        const bool stab = check_stabilizability(plant).holds;
        EXPECT_EQ(det, testing::brute_detectable(a, c)) << "trial " << trial;
        EXPECT_EQ(stab, testing::brute_stabilizable(a, b)) << "trial " << trial;
        undetectable += !det;
        unstabilizable += !stab;
    }
    EXPECT_GT(undetectable, 10);
    EXPECT_GT(unstabilizable, 10);
}

TEST(A1, ReferenceGain) {
    const auto spec = spectrum(testing::reference_network());
    const auto r = check_a1(testing::reference_plant(), spec, testing::reference_k());
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.worst_radius, 0.7, 1e-9);
    ASSERT_EQ(r.radii.size(), 3u);
    std::vector<double> radii = r.radii;
    std::sort(radii.begin(), radii.end());
    EXPECT_NEAR(radii[0], std::sqrt(0.34), 1e-9);
    EXPECT_NEAR(radii[1], 0.7, 1e-9);
    EXPECT_NEAR(radii[2], 0.7, 1e-9);
}

TEST(A1, ZeroGain) {
    const auto spec = spectrum(testing::reference_network());
    const auto marginal = check_a1(testing::reference_plant(), spec, Matrix::Zero(1, 2));
    EXPECT_FALSE(marginal.holds);
    EXPECT_NEAR(marginal.worst_radius, 1.0, 1e-12);
    const LtiPlant stable = make_plant(Matrix{{0.5, 0.1}, {0.0, 0.3}}, Matrix{{1.0}, {1.0}}, Matrix{{1.0, 0.0}});
    EXPECT_TRUE(check_a1(stable, spec, Matrix::Zero(1, 2)).holds);
    EXPECT_THROW(check_a1(stable, spec, Matrix::Zero(2, 2)), ConfigError);
}

TEST(A1Prime, StablePlantHasZeroLhs) {
    const LtiPlant stable = make_plant(Matrix{{0.5}}, Matrix{{1.0}}, Matrix{{1.0}});
    const auto r = check_a1_prime(stable, spectrum(testing::undirected_path(3)));
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_TRUE(r.holds);
}

TEST(A1Prime, PathGraphOnThree) {
    const auto r = check_a1_prime(testing::reference_plant(), spectrum(testing::undirected_path(3)));
    EXPECT_NEAR(r.rhs, 2.0, 1e-6);
    EXPECT_NEAR(r.lhs, 1.0, 1e-12);
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.omega, 0.5, 1e-6);
}

TEST(A1Prime, MatchesUndirectedClosedForm) {
    Gen g(79);
    for (int trial = 0; trial < 20; ++trial) {
        const Network net = testing::undirected_connected(g, static_cast<std::size_t>(g.integer(2, 8)));
        const auto r = check_a1_prime(testing::reference_plant(), spectrum(net));
        const double want = testing::undirected_a1_prime_rhs(net.laplacian());
        if (std::isfinite(want)) {
            EXPECT_NEAR(r.rhs, want, 1e-6) << "trial " << trial;
        } else {
            // lambda_2 = lambda_N: the infimum itself is zero.
            EXPECT_LE(1.0 / r.rhs, 1e-12) << "trial " << trial;
        }
    }
}

TEST(A1Prime, MissingSpanningTreeCapsRhsAtOne) {
    const Network net = Network::build(3, {{0, 1, 1.0}});
    const auto r = check_a1_prime(testing::reference_plant(), spectrum(net));
    EXPECT_LE(r.rhs, 1.0 + 1e-12);
    EXPECT_FALSE(r.holds);
    const LtiPlant two_inputs = make_plant(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    EXPECT_THROW(check_a1_prime(two_inputs, spectrum(net)), ConfigError);
}

TEST(MinMaxRelaxation, RealSpectrum) {
    const auto [value, omega] = min_max_relaxation({Complex(1.0, 0.0), Complex(3.0, 0.0)});
    EXPECT_NEAR(value, 0.5, 1e-9);
    EXPECT_NEAR(omega, 0.5, 1e-6);
}

TEST(GainK, StablePlantGetsZero) {
    const LtiPlant stable = make_plant(Matrix{{0.5}}, Matrix{{1.0}}, Matrix{{1.0}});
    const auto r = search_gain_k(stable, spectrum(testing::reference_network()));
    EXPECT_TRUE(r.found);
    EXPECT_TRUE(r.gain.isZero(0.0));
    EXPECT_EQ(r.method, "trivial");
}

TEST(GainK, ReferencePlantWithinBudget) {
    const auto spec = spectrum(testing::reference_network());
    const auto r = search_gain_k(testing::reference_plant(), spec, {10000, 1});
    ASSERT_TRUE(r.found);
    EXPECT_LT(r.radius, 0.71);
    EXPECT_LE(r.evaluations, 10000u);
    const auto check = check_a1(testing::reference_plant(), spec, r.gain);
    EXPECT_TRUE(check.holds);
    EXPECT_NEAR(check.worst_radius, r.radius, 1e-9);
}

TEST(GainK, NoSpanningTreeFails) {
    const auto spec = spectrum(Network::build(3, {{0, 1, 1.0}}));
    const LtiPlant unstable = make_plant(Matrix{{1.1}}, Matrix{{1.0}}, Matrix{{1.0}});
    const auto r = search_gain_k(unstable, spec, {2000, 1});
    EXPECT_FALSE(r.found);
    EXPECT_GE(r.radius, 1.0);
    EXPECT_THROW(search_gain_k(unstable, spec, {0, 1}), ConfigError);
}

TEST(GainK, SuccessAlwaysReverifies) {
    Gen g(83);
    int found = 0;
    for (int trial = 0; trial < 15; ++trial) {
        const auto n = static_cast<Eigen::Index>(g.integer(1, 3));
        const LtiPlant plant = make_plant(g.matrix(n, n, -1.2, 1.2), g.matrix(n, 1), g.matrix(1, n));
        const auto spec = spectrum(testing::strongly_connected(g, static_cast<std::size_t>(g.integer(2, 4))));
        const auto r = search_gain_k(plant, spec, {3000, static_cast<std::uint64_t>(trial)});
        if (r.found) {
            ++found;
            EXPECT_TRUE(check_a1(plant, spec, r.gain).holds);
        }
    }
    EXPECT_GT(found, 0);
}

TEST(GainG, Examples) {
    const auto r = search_gain_g(testing::reference_plant());
    ASSERT_TRUE(r.found);
    EXPECT_LE(r.radius, 0.5 + 1e-6);
    EXPECT_LT(numerics::spectral_radius(Matrix(testing::reference_plant().a - r.gain * testing::reference_plant().c)), 1.0);

    const LtiPlant full = make_plant(Matrix{{1.2, 0.3}, {0.0, 1.1}}, Matrix{{1.0}, {0.0}}, Matrix::Identity(2, 2));
    const auto deadbeat = search_gain_g(full);
    ASSERT_TRUE(deadbeat.found);
    EXPECT_LE(deadbeat.radius, 1e-3);

    const LtiPlant blind = make_plant(Matrix{{2.0, 0.0}, {0.0, 0.5}}, Matrix{{1.0}, {1.0}}, Matrix{{0.0, 1.0}});
    const auto none = search_gain_g(blind, {2000, 1});
    EXPECT_FALSE(none.found);
    EXPECT_GE(none.radius, 1.0);
}

TEST(Levels, ThresholdConversion) {
    EXPECT_EQ(levels_for_threshold(20.0, 1.0), 20);
    EXPECT_EQ(levels_for_threshold(19.4, 1.0), 19);
    EXPECT_EQ(levels_for_threshold(0.1, 1.0), 1);
    EXPECT_EQ(levels_for_threshold(10.0, 0.5), 20);
    EXPECT_FALSE(levels_for_threshold(INFINITY, 1.0).has_value());
    EXPECT_FALSE(levels_for_threshold(1e30, 1.0).has_value());
}

TEST(Synthesis, StablePlantCaseGivesFiniteLevelsWithoutSaturation) {
    const LtiPlant plant = make_plant(Matrix{{0.5}}, Matrix{{1.0}}, Matrix{{1.0}});
    const Network net = Network::build(2, {});
    SizingInputs in;
    in.c_x = 1.0;
    in.c_xhat = 1.0;
    in.c_uhat = 1.0;
    const SizingResult s = synthesize_protocol(plant, net, Matrix::Zero(1, 1), Matrix::Zero(1, 1), in, 1.0, 1.0);
    EXPECT_TRUE(s.stable_plant_case);
    ASSERT_TRUE(s.levels_y && s.levels_u);
    EXPECT_FALSE(s.overflow);
    EXPECT_GT(s.gamma, std::max(s.eta, s.eta_bar1));
    EXPECT_LT(s.gamma, 1.0);
    EXPECT_GT(static_cast<double>(*s.levels_y), s.l_threshold - 0.5);

    SimConfig cfg;
    cfg.plant = plant;
    cfg.net = net;
    cfg.law = ConsensusLaw{Matrix::Zero(1, 1)};
    cfg.comm.gamma = s.gamma;
    cfg.comm.levels_y = *s.levels_y;
    cfg.comm.levels_u = *s.levels_u;
    cfg.comm.observer_gain = Matrix::Zero(1, 1);
    cfg.horizon = 150;
    Gen g(89);
    for (int trial = 0; trial < 30; ++trial) {
        cfg.initial_states = {g.vector(1), g.vector(1)};
        cfg.initial_estimates = {g.vector(1), g.vector(1)};
        cfg.initial_control_estimates = {g.vector(1), g.vector(1)};
        const SimTrace tr = simulate_primitive(cfg);
        EXPECT_TRUE(tr.saturations.empty()) << "trial " << trial;
    }
}

TEST(Synthesis, ReferenceThresholdsExceedEmpiricalLevels) {
    SizingInputs in;
    in.c_x = 5.0;
    in.c_xhat = 0.0;
    in.c_uhat = 0.0;
    const SizingResult s = synthesize_protocol(testing::reference_plant(), testing::reference_network(),
                                               testing::reference_k(), testing::reference_g(), in, 1.0, 1.0);
    EXPECT_FALSE(s.stable_plant_case);
    EXPECT_GT(s.l_threshold, 20.0);
    EXPECT_FALSE(s.diagnostics.empty());
    EXPECT_GT(s.e_bound, 0.0);
    EXPECT_GT(s.delta_bound, 0.0);
}

TEST(Synthesis, ZeroBallsLeaveTheNoiseFloor) {
    SizingInputs in;
    in.c_x = 0.0;
    in.c_xhat = 0.0;
    in.c_uhat = 0.0;
    in.epsilon = 0.1;
    in.epsilon_bar1 = 0.1;
    const SizingResult s = synthesize_protocol(testing::reference_plant(), testing::reference_network(),
                                               testing::reference_k(), testing::reference_g(), in, 1.0, 1.0);
    auto term = [&](const std::string& name) {
        for (const auto& t : s.diagnostics)
            if (t.name == name) return t.value;
        return -1.0;
    };
    EXPECT_EQ(term("R_initial"), 0.0);
    EXPECT_EQ(term("E_initial_control"), 0.0);
    EXPECT_EQ(s.r_const, term("R_noise"));
    EXPECT_GT(s.l_threshold, 0.0);
}

TEST(Synthesis, Preconditions) {
    SizingInputs in;
    EXPECT_THROW(synthesize_protocol(testing::reference_plant(), testing::reference_network(), Matrix::Zero(1, 2),
                                     testing::reference_g(), in, 1.0, 1.0),
                 PreconditionError);
    EXPECT_THROW(synthesize_protocol(testing::reference_plant(), testing::reference_network(), testing::reference_k(),
                                     Matrix::Zero(2, 1), in, 1.0, 1.0),
                 PreconditionError);
    in.gamma = 0.3;
    EXPECT_THROW(synthesize_protocol(testing::reference_plant(), testing::reference_network(), testing::reference_k(),
                                     testing::reference_g(), in, 1.0, 1.0),
                 InfeasibleError);
}

TEST(EmpiricalLevels, ReferenceNeedsAtMostTwenty) {
    Gen g(97);
    SimConfig base = testing::reference_config(g, 300);
    LevelSearchOptions opt;
    opt.horizon = 300;
    opt.trials = 100;
    opt.seed = 5;
    const auto r = empirical_level_search(base, uniform_box_sampler(0.0, 5.0), opt);
    ASSERT_TRUE(r.found);
    EXPECT_LE(r.levels_y, 20);
    EXPECT_LE(r.levels_u, 20);
    EXPECT_GE(r.levels_y, 1);
}

TEST(EmpiricalLevels, HalvingTheStepNeedsMoreLevels) {
    Gen g(101);
    SimConfig base = testing::reference_config(g, 200);
    LevelSearchOptions opt;
    opt.horizon = 200;
    opt.trials = 20;
    const auto full = empirical_level_search(base, uniform_box_sampler(0.0, 5.0), opt);
    base.comm.alpha = 0.5;
    base.comm.alpha_u = 0.5;
    const auto half = empirical_level_search(base, uniform_box_sampler(0.0, 5.0), opt);
    ASSERT_TRUE(full.found && half.found);
    EXPECT_GE(half.levels_y, full.levels_y);
    EXPECT_GE(half.levels_u, full.levels_u);
}

TEST(EmpiricalLevels, ReportsFailureAtTheCap) {
    Gen g(103);
    SimConfig base = testing::reference_config(g, 100);
    base.law = ConsensusLaw{Matrix::Zero(1, 2)};
    base.comm.observer_gain = Matrix::Zero(2, 1);
    base.plant.a(0, 0) = 1.3;
    LevelSearchOptions opt;
    opt.horizon = 100;
    opt.trials = 2;
    opt.cap = 64;
    EXPECT_FALSE(empirical_level_search(base, uniform_box_sampler(0.0, 5.0), opt).found);
}

TEST(Sampler, DrawsInsideTheBox) {
    std::mt19937_64 rng(1);
    SimConfig cfg;
    cfg.initial_states = testing::zeros(5, 3);
    uniform_box_sampler(-2.0, 3.0)(rng, cfg);
    for (const auto& x : cfg.initial_states) {
        EXPECT_GE(x.minCoeff(), -2.0);
        EXPECT_LT(x.maxCoeff(), 3.0);
    }
    std::mt19937_64 a(9), b(9);
    EXPECT_EQ(uniform01(a), uniform01(b));
}

}  // namespace
}  // namespace qcoop
