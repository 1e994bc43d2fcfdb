#include "qcoop/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "qcoop/error.hpp"

namespace qcoop {

Network Network::build(std::size_t n_agents, const std::vector<Edge>& edges) {
    if (n_agents == 0) throw ConfigError("network: at least one agent is required");
    Network net;
    net.n_ = n_agents;
    const auto n = static_cast<Eigen::Index>(n_agents);
    net.adjacency_ = Matrix::Zero(n, n);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Edge& e : edges) {
        const std::string label =
            "edge " + std::to_string(e.from + 1) + "->" + std::to_string(e.to + 1);
        if (e.from >= n_agents || e.to >= n_agents) {
            throw ConfigError(label + ": node id out of range 1.." + std::to_string(n_agents));
        }
        if (e.from == e.to) throw ConfigError(label + ": self-loops are not allowed");
        if (!std::isfinite(e.weight) || e.weight <= 0.0) {
            throw ConfigError(label + ": weight must be positive and finite");
        }
        if (!seen.emplace(e.from, e.to).second) throw ConfigError(label + ": duplicate edge");
        net.adjacency_(static_cast<Eigen::Index>(e.to), static_cast<Eigen::Index>(e.from)) =
            e.weight;
    }
    net.edges_ = edges;
    std::sort(net.edges_.begin(), net.edges_.end(), [](const Edge& a, const Edge& b) {
        return std::pair(a.from, a.to) < std::pair(b.from, b.to);
    });
    Vector degree = net.adjacency_.rowwise().sum();
    net.laplacian_ = Matrix(degree.asDiagonal()) - net.adjacency_;
    return net;
}

std::vector<std::size_t> Network::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_; ++j) {
        if (adjacency_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
            out.push_back(j);
        }
    }
    return out;
}

bool Network::is_undirected() const { return adjacency_ == adjacency_.transpose(); }

namespace {

// reach[r][k]: k is reachable from r following channels j -> i.
std::vector<std::vector<bool>> reachability(const Network& net) {
    const std::size_t n = net.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t root = 0; root < n; ++root) {
        std::vector<std::size_t> stack{root};
        reach[root][root] = true;
        while (!stack.empty()) {
            const std::size_t j = stack.back();
            stack.pop_back();
            for (std::size_t i = 0; i < n; ++i) {
                if (!reach[root][i] && net.adjacency()(static_cast<Eigen::Index>(i),
                                                       static_cast<Eigen::Index>(j)) > 0.0) {
                    reach[root][i] = true;
                    stack.push_back(i);
                }
            }
        }
    }
    return reach;
}

// Normalizes a null vector of L^T into a probability vector.
Vector normalize_pi(Vector v) {
    Eigen::Index best = 0;
    v.cwiseAbs().maxCoeff(&best);
    if (v(best) < 0.0) v = -v;
    const double scale = v.maxCoeff();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (v(k) < 0.0) {
            if (v(k) < -1e-9 * scale) {
                throw NumericsError("spectrum: left null vector of L has mixed signs");
            }
            v(k) = 0.0;
        }
    }
    return v / v.sum();
}

// pi supported on the closed strong component containing the smallest node id.
Vector pi_on_first_closed_component(const Network& net) {
    const std::size_t n = net.size();
    const auto reach = reachability(net);
    for (std::size_t r = 0; r < n; ++r) {
        // Component of r: nodes mutually reachable with r.
        std::vector<std::size_t> comp;
        for (std::size_t k = 0; k < n; ++k) {
            if (reach[r][k] && reach[k][r]) comp.push_back(k);
        }
        if (comp.front() != r) continue;
        // Closed: every in-neighbor of a member is a member.
        bool closed = true;
        for (std::size_t i : comp) {
            for (std::size_t j : net.neighbors(i)) {
                if (!(reach[r][j] && reach[j][r])) closed = false;
            }
        }
        if (!closed) continue;
        const auto c = static_cast<Eigen::Index>(comp.size());
        Matrix sub(c, c);
        for (Eigen::Index a = 0; a < c; ++a) {
            for (Eigen::Index b = 0; b < c; ++b) {
                sub(a, b) = net.laplacian()(static_cast<Eigen::Index>(comp[a]),
                                            static_cast<Eigen::Index>(comp[b]));
            }
        }
        const auto ns = numerics::rank_and_nullspace(Matrix(sub.transpose()));
        if (ns.basis.empty()) throw NumericsError("spectrum: component Laplacian has no null space");
        Vector local = normalize_pi(ns.basis.front());
        Vector pi = Vector::Zero(static_cast<Eigen::Index>(n));
        for (Eigen::Index a = 0; a < c; ++a) pi(static_cast<Eigen::Index>(comp[a])) = local(a);
        return pi;
    }
    throw NumericsError("spectrum: no closed strong component found");
}

}  // namespace

NetworkSpectrum spectrum(const Network& net) {
    NetworkSpectrum spec;
    const Matrix& lap = net.laplacian();
    spec.eigenvalues = numerics::eigenvalues(lap);
    const double lap_norm = numerics::two_norm(lap);
    spec.zero_multiplicity = static_cast<std::size_t>(
        std::count_if(spec.eigenvalues.begin(), spec.eigenvalues.end(),
                      [&](Complex l) { return numerics::is_zero_eigenvalue(l, lap_norm); }));
    spec.lambda2_nonzero = net.size() == 1 || spec.zero_multiplicity == 1;

    const auto ns = numerics::rank_and_nullspace(Matrix(lap.transpose()));
    if (ns.basis.size() == 1) {
        spec.pi = normalize_pi(ns.basis.front());
    } else {
        spec.pi_ambiguous = true;
        spec.pi = pi_on_first_closed_component(net);
    }
    return spec;
}

bool has_spanning_tree(const Network& net) { return has_spanning_tree(net, spectrum(net)); }

bool has_spanning_tree(const Network& net, const NetworkSpectrum& spec) {
    const auto reach = reachability(net);
    bool found = false;
    for (const auto& row : reach) {
        if (std::all_of(row.begin(), row.end(), [](bool b) { return b; })) found = true;
    }
    if (net.size() >= 2 && found != spec.lambda2_nonzero) {
        throw NumericsError(
            "has_spanning_tree: graph traversal and Laplacian spectrum disagree "
            "(lambda_2 is numerically marginal)");
    }
    return found;
}

LaplacianSplit split_laplacian(const Network& net, const NetworkSpectrum& spec) {
    const auto n = static_cast<Eigen::Index>(net.size());
    LaplacianSplit s;
    s.pi = spec.pi;
    s.phi = Matrix::Zero(n, n);
    s.phi_inv = Matrix::Zero(n, n);
    s.phi_inv.col(0).setOnes();
    s.phi.row(0) = spec.pi.transpose();
    if (n > 1) {
        const Matrix q = numerics::orthonormal_complement(spec.pi);
        s.phi_inv.rightCols(n - 1) = q;
        const Matrix centering = Matrix::Identity(n, n) - Vector::Ones(n) * spec.pi.transpose();
        s.phi.bottomRows(n - 1) = q.transpose() * centering;
        s.t22 = q.transpose() * net.laplacian() * q;
    } else {
        s.t22 = Matrix(0, 0);
    }
    s.phi_bar = s.phi.bottomRows(n - 1);
    return s;
}

}  // namespace qcoop
