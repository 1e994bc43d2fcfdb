#include "qcoop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qcoop/error.hpp"

namespace qcoop::numerics {

namespace {

template <typename M>
M kron_impl(const M& a, const M& b) {
    M out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

void check_eigen_input(Eigen::Index rows, Eigen::Index cols) {
    if (rows != cols) {
        throw NumericsError("eigenvalues: matrix is " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", not square");
    }
    if (rows > kMaxEigenDim) {
        throw NumericsError("eigenvalues: dimension " + std::to_string(rows) +
                            " exceeds the supported limit of " + std::to_string(kMaxEigenDim));
    }
}

void sort_eigenvalues(std::vector<Complex>& values) {
    std::sort(values.begin(), values.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

template <typename M>
double two_norm_impl(const M& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<M> svd(m);
    return svd.singularValues()(0);
}

template <typename M, typename V>
std::pair<Eigen::Index, std::vector<V>> nullspace_impl(const M& m, double tol) {
    if (!(tol > 0.0)) throw ConfigError("rank_and_nullspace: tolerance must be positive");
    const Eigen::Index cols = m.cols();
    if (m.size() == 0) {
        std::vector<V> basis;
        for (Eigen::Index j = 0; j < cols; ++j) basis.push_back(V::Unit(cols, j));
        return {0, basis};
    }
    Eigen::JacobiSVD<M> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = tol * sv(0);
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv(k) > cutoff) ++rank;
    }
    std::vector<V> basis;
    for (Eigen::Index j = rank; j < cols; ++j) basis.push_back(svd.matrixV().col(j));
    return {rank, basis};
}

CVector fix_phase(CVector v) {
    Eigen::Index best = 0;
    v.cwiseAbs().maxCoeff(&best);
    const Complex pivot = v(best);
    if (std::abs(pivot) > 0.0) v *= std::conj(pivot) / std::abs(pivot);
    return v / v.norm();
}

}  // namespace

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite()) throw ConfigError(std::string(what) + ": entries must be finite");
}

void require_square(const Matrix& m, std::string_view what) {
    if (m.rows() != m.cols()) {
        throw ConfigError(std::string(what) + ": expected a square matrix, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

Matrix kron(const Matrix& a, const Matrix& b) { return kron_impl(a, b); }
CMatrix kron(const CMatrix& a, const CMatrix& b) { return kron_impl(a, b); }

std::vector<Complex> eigenvalues(const Matrix& m) {
    check_eigen_input(m.rows(), m.cols());
    std::vector<Complex> values;
    if (m.rows() == 0) return values;
    if (!m.allFinite()) throw NumericsError("eigenvalues: non-finite entries");
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericsError("eigenvalues: QR iteration did not converge");
    }
    const auto& ev = solver.eigenvalues();
    values.assign(ev.data(), ev.data() + ev.size());
    sort_eigenvalues(values);
    return values;
}

std::vector<Complex> eigenvalues(const CMatrix& m) {
    check_eigen_input(m.rows(), m.cols());
    std::vector<Complex> values;
    if (m.rows() == 0) return values;
    if (!m.allFinite()) throw NumericsError("eigenvalues: non-finite entries");
    Eigen::ComplexEigenSolver<CMatrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericsError("eigenvalues: QR iteration did not converge");
    }
    const auto& ev = solver.eigenvalues();
    values.assign(ev.data(), ev.data() + ev.size());
    sort_eigenvalues(values);
    return values;
}

double spectral_radius(const Matrix& m) {
    double r = 0.0;
    for (Complex l : eigenvalues(m)) r = std::max(r, std::abs(l));
    return r;
}

double spectral_radius(const CMatrix& m) {
    double r = 0.0;
    for (Complex l : eigenvalues(m)) r = std::max(r, std::abs(l));
    return r;
}

double two_norm(const Matrix& m) { return two_norm_impl(m); }
double two_norm(const CMatrix& m) { return two_norm_impl(m); }

double inf_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

Norms norms(const Matrix& m) { return {two_norm(m), inf_norm(m)}; }

RankNullspace rank_and_nullspace(const Matrix& m, double tol) {
    auto [rank, basis] = nullspace_impl<Matrix, Vector>(m, tol);
    return {rank, std::move(basis)};
}

ComplexRankNullspace rank_and_nullspace(const CMatrix& m, double tol) {
    auto [rank, basis] = nullspace_impl<CMatrix, CVector>(m, tol);
    return {rank, std::move(basis)};
}

Matrix orthonormal_range(const Matrix& m, double tol) {
    if (m.size() == 0) return Matrix(m.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv(k) > tol * sv(0)) ++rank;
    }
    return svd.matrixU().leftCols(rank);
}

Matrix orthonormal_complement(const Vector& v) {
    const Eigen::Index n = v.size();
    if (n == 0 || v.norm() == 0.0) throw ConfigError("orthonormal_complement: zero vector");
    Eigen::HouseholderQR<Matrix> qr(Matrix(v / v.norm()));
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    return q.rightCols(n - 1);
}

namespace {

template <typename M>
GuoBound guo_impl(const M& m, double epsilon) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ConfigError("guo_power_bound: expected a non-empty square matrix");
    }
    if (!(epsilon > 0.0)) throw ConfigError("guo_power_bound: epsilon must be positive");
    const double n = static_cast<double>(m.rows());
    GuoBound g;
    g.epsilon = epsilon;
    g.m_const = std::sqrt(n) * std::pow(1.0 + 2.0 / epsilon, n - 1.0);
    g.eta = spectral_radius(m) + epsilon * two_norm(m);
    return g;
}

}  // namespace

GuoBound guo_power_bound(const Matrix& m, double epsilon) { return guo_impl(m, epsilon); }
GuoBound guo_power_bound(const CMatrix& m, double epsilon) { return guo_impl(m, epsilon); }

bool is_zero_eigenvalue(Complex lambda, double matrix_norm) {
    return std::abs(lambda) <= kZeroEigenTolerance * std::max(1.0, matrix_norm);
}

bool is_unstable_eigenvalue(Complex lambda) { return std::abs(lambda) >= 1.0 - kUnstableMargin; }

CVector left_eigenvector(const CMatrix& m, Complex lambda) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ConfigError("left_eigenvector: expected a non-empty square matrix");
    }
    CMatrix shifted = m - lambda * CMatrix::Identity(m.rows(), m.cols());
    Eigen::JacobiSVD<CMatrix> svd(shifted.adjoint(), Eigen::ComputeFullV);
    return fix_phase(svd.matrixV().col(m.cols() - 1));
}

CVector right_eigenvector(const CMatrix& m, Complex lambda) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ConfigError("right_eigenvector: expected a non-empty square matrix");
    }
    CMatrix shifted = m - lambda * CMatrix::Identity(m.rows(), m.cols());
    Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
    return fix_phase(svd.matrixV().col(m.cols() - 1));
}

bool modulus_order_less(Complex a, Complex b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

}  // namespace qcoop::numerics
