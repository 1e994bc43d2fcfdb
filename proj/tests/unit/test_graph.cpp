#include <gtest/gtest.h>

#include "qcoop/error.hpp"
#include "qcoop/graph.hpp"
#include "support/generators.hpp"

namespace qcoop {
namespace {

using testing::Gen;

TEST(Network, ReferenceLaplacianRows) {
    const Network net = testing::reference_network();
    const Matrix want{{1, -1, 0, 0}, {-1, 1, 0, 0}, {-1, 0, 1, 0}, {0, -1, 0, 1}};
    EXPECT_EQ(net.laplacian(), want);
    EXPECT_EQ(net.neighbors(2), std::vector<std::size_t>{0});
    EXPECT_EQ(net.neighbors(3), std::vector<std::size_t>{1});
    EXPECT_FALSE(net.is_undirected());
}

TEST(Network, SingleAgentHasZeroLaplacian) {
    const Network net = Network::build(1, {});
    EXPECT_EQ(net.laplacian(), Matrix::Zero(1, 1));
}

TEST(Network, WeightedSingleChannel) {
    const Network net = Network::build(2, {{0, 1, 3.0}});
    EXPECT_EQ(net.laplacian(), (Matrix{{0, 0}, {-3, 3}}));
}

TEST(Network, RejectsMalformedEdges) {
    EXPECT_THROW(Network::build(0, {}), ConfigError);
    EXPECT_THROW(Network::build(2, {{0, 0, 1.0}}), ConfigError);
    EXPECT_THROW(Network::build(2, {{0, 2, 1.0}}), ConfigError);
    EXPECT_THROW(Network::build(2, {{0, 1, 1.0}, {0, 1, 2.0}}), ConfigError);
    EXPECT_THROW(Network::build(2, {{0, 1, 0.0}}), ConfigError);
    EXPECT_THROW(Network::build(2, {{0, 1, -1.0}}), ConfigError);
    EXPECT_THROW(Network::build(2, {{0, 1, INFINITY}}), ConfigError);
}

TEST(Spectrum, ReferenceGraph) {
    const auto s = spectrum(testing::reference_network());
    ASSERT_EQ(s.eigenvalues.size(), 4u);
    EXPECT_NEAR(s.eigenvalues[0].real(), 0.0, 1e-9);
    EXPECT_NEAR(s.eigenvalues[1].real(), 1.0, 1e-9);
    EXPECT_NEAR(s.eigenvalues[2].real(), 1.0, 1e-9);
    EXPECT_NEAR(s.eigenvalues[3].real(), 2.0, 1e-9);
    EXPECT_TRUE(s.pi.isApprox(Vector{{0.5, 0.5, 0.0, 0.0}}, 1e-12));
    EXPECT_TRUE(s.lambda2_nonzero);
    EXPECT_FALSE(s.pi_ambiguous);
}

TEST(Spectrum, CompleteGraphOnTwo) {
    const auto s = spectrum(Network::build(2, {{0, 1, 1.0}, {1, 0, 1.0}}));
    EXPECT_NEAR(s.eigenvalues[0].real(), 0.0, 1e-12);
    EXPECT_NEAR(s.eigenvalues[1].real(), 2.0, 1e-12);
    EXPECT_TRUE(s.pi.isApprox(Vector{{0.5, 0.5}}, 1e-12));
}

TEST(Spectrum, SingleChannelPutsAllWeightOnTheRoot) {
    const auto s = spectrum(Network::build(2, {{0, 1, 1.0}}));
    EXPECT_NEAR(s.eigenvalues[1].real(), 1.0, 1e-12);
    EXPECT_TRUE(s.pi.isApprox(Vector{{1.0, 0.0}}, 1e-12));
}

TEST(Spectrum, TwoClosedComponentsAreFlaggedAmbiguous) {
    const Network net = Network::build(4, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}});
    const auto s = spectrum(net);
    EXPECT_TRUE(s.pi_ambiguous);
    EXPECT_FALSE(s.lambda2_nonzero);
    EXPECT_EQ(s.zero_multiplicity, 2u);
    EXPECT_TRUE(s.pi.isApprox(Vector{{0.5, 0.5, 0.0, 0.0}}, 1e-12));
    EXPECT_LE((s.pi.transpose() * net.laplacian()).norm(), 1e-12);
}

TEST(SpanningTree, Examples) {
    EXPECT_TRUE(has_spanning_tree(testing::reference_network()));
    EXPECT_FALSE(has_spanning_tree(Network::build(2, {})));
    EXPECT_TRUE(has_spanning_tree(Network::build(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}})));
    // Two roots feeding one sink: no single root reaches everyone.
    EXPECT_FALSE(has_spanning_tree(Network::build(3, {{0, 2, 1.0}, {1, 2, 1.0}})));
}

TEST(GraphProperties, RowSumsAndPiAnnihilation) {
    Gen g(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(1, 8));
        const Network net = testing::strongly_connected(g, n);
        const Vector ones = Vector::Ones(static_cast<Eigen::Index>(n));
        EXPECT_LE((net.laplacian() * ones).cwiseAbs().maxCoeff(), 1e-14 * net.laplacian().cwiseAbs().maxCoeff());
        const auto s = spectrum(net);
        EXPECT_LE((s.pi.transpose() * net.laplacian()).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_NEAR(s.pi.sum(), 1.0, 1e-12);
        EXPECT_GE(s.pi.minCoeff(), 0.0);
    }
}

TEST(GraphProperties, StronglyConnectedHasSimpleZeroEigenvalue) {
    Gen g(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(2, 8));
        const Network net = testing::strongly_connected(g, n);
        const auto s = spectrum(net);
        EXPECT_TRUE(has_spanning_tree(net, s));
        EXPECT_EQ(s.zero_multiplicity, 1u);
        // Strong connectivity makes pi strictly positive.
        EXPECT_GT(s.pi.minCoeff(), 0.0);
    }
}

TEST(GraphProperties, UndirectedSpectrumIsReal) {
    Gen g(29);
    for (int trial = 0; trial < 50; ++trial) {
        const Network net = testing::undirected_connected(g, static_cast<std::size_t>(g.integer(2, 8)));
        ASSERT_TRUE(net.is_undirected());
        for (Complex l : spectrum(net).eigenvalues) EXPECT_LE(std::abs(l.imag()), 1e-9);
    }
}

TEST(LaplacianSplit, BlockDiagonalizesTheZeroEigenvalue) {
    Gen g(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<Eigen::Index>(g.integer(2, 7));
        const Network net = testing::strongly_connected(g, static_cast<std::size_t>(n));
        const auto s = spectrum(net);
        const LaplacianSplit sp = split_laplacian(net, s);
        EXPECT_LE((sp.phi * sp.phi_inv - Matrix::Identity(n, n)).norm(), 1e-10);
        const Matrix t = sp.phi * net.laplacian() * sp.phi_inv;
        EXPECT_LE(t.row(0).norm() + t.col(0).norm(), 1e-9);
        EXPECT_LE((t.bottomRightCorner(n - 1, n - 1) - sp.t22).norm(), 1e-9);
        // Nonzero spectrum of L lives on t22.
        const auto t22_ev = numerics::eigenvalues(sp.t22);
        for (Complex l : t22_ev) EXPECT_GT(std::abs(l), 1e-6);
        EXPECT_EQ(sp.phi_bar.rows(), n - 1);
    }
}

}  // namespace
}  // namespace qcoop
