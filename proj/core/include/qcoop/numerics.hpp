#pragma once

#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qcoop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

namespace numerics {

// Largest dimension accepted by the eigenvalue routines.
inline constexpr Eigen::Index kMaxEigenDim = 64;

// Default relative rank tolerance (relative to the largest singular value).
inline constexpr double kRankTolerance = 1e-10;

// |lambda| <= kZeroEigenTolerance * max(1, ||m||) classifies lambda as zero.
inline constexpr double kZeroEigenTolerance = 1e-9;

// Eigenvalues with modulus >= 1 - kUnstableMargin count as unstable.
inline constexpr double kUnstableMargin = 1e-9;

// Throws ConfigError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);
void require_square(const Matrix& m, std::string_view what);

Matrix kron(const Matrix& a, const Matrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

// All eigenvalues with multiplicity, sorted by (real, imag).
// Throws NumericsError for non-square input, dimension above kMaxEigenDim,
// or when the QR iteration does not converge.
std::vector<Complex> eigenvalues(const Matrix& m);
std::vector<Complex> eigenvalues(const CMatrix& m);

double spectral_radius(const Matrix& m);
double spectral_radius(const CMatrix& m);

struct Norms {
    double two_norm = 0.0;  // largest singular value
    double inf_norm = 0.0;  // max absolute row sum (max |entry| for column vectors)
};

Norms norms(const Matrix& m);
double two_norm(const Matrix& m);
double two_norm(const CMatrix& m);
double inf_norm(const Matrix& m);

struct RankNullspace {
    Eigen::Index rank = 0;
    std::vector<Vector> basis;  // orthonormal basis of the right null space
};

struct ComplexRankNullspace {
    Eigen::Index rank = 0;
    std::vector<CVector> basis;
};

// rank = number of singular values above tol * sigma_max.
RankNullspace rank_and_nullspace(const Matrix& m, double tol = kRankTolerance);
ComplexRankNullspace rank_and_nullspace(const CMatrix& m, double tol = kRankTolerance);

// Orthonormal basis of the column space, using the same rank rule.
Matrix orthonormal_range(const Matrix& m, double tol = kRankTolerance);

// Columns completing the unit vector `v` to an orthonormal basis (n x (n-1)).
Matrix orthonormal_complement(const Vector& v);

// Constants (M, eta) with ||m^k|| <= M eta^k for every k >= 0:
//   M = sqrt(n) (1 + 2/epsilon)^(n-1),  eta = rho(m) + epsilon ||m||.
struct GuoBound {
    double m_const = 1.0;
    double eta = 0.0;
    double epsilon = 0.0;
};

GuoBound guo_power_bound(const Matrix& m, double epsilon);
GuoBound guo_power_bound(const CMatrix& m, double epsilon);

bool is_zero_eigenvalue(Complex lambda, double matrix_norm);
bool is_unstable_eigenvalue(Complex lambda);

// Unit-norm w with w^* m = lambda w^* (smallest right singular vector of
// (m - lambda I)^*). Phase is fixed so the largest-magnitude entry is real
// and positive.
CVector left_eigenvector(const CMatrix& m, Complex lambda);
CVector right_eigenvector(const CMatrix& m, Complex lambda);

// Total order used wherever eigenvalues must be picked deterministically:
// by modulus, then real part, then imaginary part.
bool modulus_order_less(Complex a, Complex b);

}  // namespace numerics
}  // namespace qcoop
