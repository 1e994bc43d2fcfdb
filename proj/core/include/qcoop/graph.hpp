#pragma once

#include <cstddef>
#include <vector>

#include "qcoop/numerics.hpp"

namespace qcoop {

// Directed, weighted channel j -> i (agent i receives from agent j).
// Agent ids are zero-based throughout the C++ API.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 1.0;
};

// Communication topology: adjacency a_ij > 0 iff there is a channel j -> i,
// Laplacian L = D - A with D the in-degree matrix.
class Network {
public:
    Network() = default;

    // Throws ConfigError on self-loops, out-of-range ids, duplicate edges,
    // or non-positive / non-finite weights.
    static Network build(std::size_t n_agents, const std::vector<Edge>& edges);

    std::size_t size() const { return n_; }
    const Matrix& adjacency() const { return adjacency_; }
    const Matrix& laplacian() const { return laplacian_; }
    const std::vector<Edge>& edges() const { return edges_; }

    // N_i = { j : a_ij > 0 }, ascending.
    std::vector<std::size_t> neighbors(std::size_t i) const;
    bool is_undirected() const;

private:
    std::size_t n_ = 0;
    Matrix adjacency_;
    Matrix laplacian_;
    std::vector<Edge> edges_;
};

inline Network build_network(std::size_t n_agents, const std::vector<Edge>& edges) {
    return Network::build(n_agents, edges);
}

struct NetworkSpectrum {
    std::vector<Complex> eigenvalues;  // ascending real part; eigenvalues[0] ~ 0
    Vector pi;                         // nonnegative, sums to one, pi^T L = 0
    bool lambda2_nonzero = false;
    // Left null space of L has dimension > 1 (several closed strong
    // components). pi is then supported on the first such component.
    bool pi_ambiguous = false;
    std::size_t zero_multiplicity = 1;
};

NetworkSpectrum spectrum(const Network& net);

// True iff some root reaches every node along information flow. The result
// is cross-checked against the spectrum; a disagreement throws NumericsError.
bool has_spanning_tree(const Network& net);
bool has_spanning_tree(const Network& net, const NetworkSpectrum& spec);

// Real similarity that splits off the zero eigenvalue of L:
//   phi * L * phi_inv = diag(0, t22),   phi.row(0) = pi^T,   phi_inv.col(0) = 1,
// with phi_inv = [1, Q] and Q an orthonormal basis of pi's orthogonal
// complement, so t22 = Q^T L Q carries the remaining eigenvalues.
struct LaplacianSplit {
    Matrix phi;
    Matrix phi_inv;
    Matrix phi_bar;  // rows 2..N of phi
    Matrix t22;
    Vector pi;
};

LaplacianSplit split_laplacian(const Network& net, const NetworkSpectrum& spec);

}  // namespace qcoop
