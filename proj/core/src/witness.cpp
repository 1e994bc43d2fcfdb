#include "qcoop/witness.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "qcoop/analysis.hpp"
#include "qcoop/error.hpp"

namespace qcoop {

namespace {

const ConsensusLaw& consensus_law(const SimConfig& cfg, const char* who) {
    const auto* law = std::get_if<ConsensusLaw>(&cfg.law);
    if (law == nullptr) throw ConfigError(std::string(who) + ": requires the consensus law");
    return *law;
}

std::vector<Vector> split_stack(const Vector& v, std::size_t parts) {
    const Eigen::Index d = v.size() / static_cast<Eigen::Index>(parts);
    std::vector<Vector> out;
    for (std::size_t i = 0; i < parts; ++i) out.push_back(v.segment(static_cast<Eigen::Index>(i) * d, d));
    return out;
}

double ball(const std::vector<Vector>& v) {
    double r = 0.0;
    for (const auto& x : v) r = std::max(r, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
    return r;
}

void set_initials(WitnessReport& r, SimConfig& cfg, std::vector<Vector> x, std::vector<Vector> xh,
                  std::vector<Vector> uh) {
    cfg.initial_states = x;
    cfg.initial_estimates = xh;
    cfg.initial_control_estimates = uh;
    r.initial_states = std::move(x);
    r.initial_estimates = std::move(xh);
    r.initial_control_estimates = std::move(uh);
    r.state_ball = ball(r.initial_states);
    r.estimate_ball = ball(r.initial_estimates);
    r.control_ball = ball(r.initial_control_estimates);
}

bool envelope_holds(const WitnessReport& r) {
    for (std::size_t t = 0; t < r.observed.size() && t < r.envelope.size(); ++t) {
        if (!(r.observed[t] >= 0.5 * r.envelope[t])) return false;
    }
    return !r.observed.empty();
}

// Orthonormal basis of the smallest A-invariant subspace containing range(B).
Matrix controllable_basis(const Matrix& a, const Matrix& b) {
    Matrix basis = numerics::orthonormal_range(b);
    for (Eigen::Index iter = 0; iter < a.rows(); ++iter) {
        Matrix grown(a.rows(), 2 * basis.cols());
        grown << basis, a * basis;
        Matrix next = numerics::orthonormal_range(grown);
        if (next.cols() == basis.cols()) break;
        basis = std::move(next);
    }
    return basis;
}

// Orthonormal complement of range(basis) in R^rows.
Matrix complement(const Matrix& basis, Eigen::Index rows) {
    if (basis.cols() == 0) return Matrix::Identity(rows, rows);
    Eigen::HouseholderQR<Matrix> qr(basis);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, rows);
    return q.rightCols(rows - basis.cols());
}

Vector real_direction(const CVector& v) {
    Vector re = v.real();
    Vector im = v.imag();
    Vector out = re.norm() >= im.norm() ? re : im;
    return out / out.norm();
}

}  // namespace

std::string_view to_string(WitnessKind kind) {
    switch (kind) {
        case WitnessKind::undetectable: return "undetectable";
        case WitnessKind::unstabilizable: return "unstabilizable";
        case WitnessKind::schur_growth: return "schur-growth";
    }
    return "unknown";
}

WitnessReport undetectable_witness(const SimConfig& base, const WitnessOptions& options) {
    consensus_law(base, "undetectable_witness");
    const LtiPlant& plant = base.plant;
    validate(plant);
    if (check_detectability(plant).holds) {
        throw PreconditionError("undetectable_witness: (A, C) is detectable");
    }
    const Eigen::Index n = plant.n(), p = plant.p();
    Matrix obs(n * p, n);
    Matrix power = Matrix::Identity(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        obs.middleRows(l * p, p) = plant.c * power;
        power = plant.a * power;
    }
    const auto null = numerics::rank_and_nullspace(obs);
    if (null.basis.empty()) {
        throw PreconditionError("undetectable_witness: (A, C) is observable");
    }
    Matrix z(n, static_cast<Eigen::Index>(null.basis.size()));
    for (std::size_t c = 0; c < null.basis.size(); ++c) z.col(static_cast<Eigen::Index>(c)) = null.basis[c];
    const Matrix restricted = z.transpose() * plant.a * z;
    Eigen::EigenSolver<Matrix> eig(restricted);
    if (eig.info() != Eigen::Success) throw NumericsError("undetectable_witness: eigensolver failed");
    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < eig.eigenvalues().size(); ++i) {
        if (numerics::modulus_order_less(eig.eigenvalues()(lead), eig.eigenvalues()(i))) lead = i;
    }
    if (!numerics::is_unstable_eigenvalue(eig.eigenvalues()(lead))) {
        throw PreconditionError("undetectable_witness: the unobservable subspace decays");
    }
    Vector x0 = z * real_direction(eig.eigenvectors().col(lead));
    const double peak = x0.cwiseAbs().maxCoeff();
    Eigen::Index at = 0;
    x0.cwiseAbs().maxCoeff(&at);
    x0 /= (x0(at) < 0 ? -peak : peak);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(x0(k)) < 1e-14) x0(k) = 0.0;
    }

    WitnessReport r;
    r.kind = WitnessKind::undetectable;
    r.unobservable_start = x0;
    SimConfig cfg = base;
    cfg.horizon = options.horizon;
    cfg.capture_frames = true;
    cfg.stride = 1;
    cfg.mode = CodecMode::quantized;
    const std::size_t agents = cfg.net.size();
    std::vector<Vector> xs(agents, Vector::Zero(n));
    xs[0] = x0;
    set_initials(r, cfg, xs, std::vector<Vector>(agents, Vector::Zero(n)),
                 std::vector<Vector>(agents, Vector::Zero(plant.m())));
    const SimTrace trace = simulate_primitive(cfg);

    for (const auto& f : trace.frames) {
        for (auto i : f.s) r.nonzero_symbols += i != 0;
        for (auto i : f.s_u) r.nonzero_symbols += i != 0;
    }
    r.estimates_identically_zero = true;
    r.controls_identically_zero = true;
    r.quantity = "||E(t)||";
    Vector free = x0;
    for (const auto& step : trace.steps) {
        if (!(step.x_hat.array() == 0.0).all()) r.estimates_identically_zero = false;
        if (!(step.u.array() == 0.0).all()) r.controls_identically_zero = false;
        r.observed.push_back(step.e.norm());
        r.envelope.push_back(free.norm());
        free = plant.a * free;
    }
    r.saturation_events = trace.saturations.size();
    r.confirmed = envelope_holds(r) && r.nonzero_symbols == 0 && r.estimates_identically_zero &&
                  r.controls_identically_zero;
    return r;
}

WitnessReport unstabilizable_witness(const SimConfig& base, const WitnessOptions& options) {
    consensus_law(base, "unstabilizable_witness");
    const LtiPlant& plant = base.plant;
    validate(plant);
    if (check_stabilizability(plant).holds) {
        throw PreconditionError("unstabilizable_witness: (A, B) is stabilizable");
    }
    const NetworkSpectrum spec = spectrum(base.net);
    if (base.net.size() < 2 || !spec.lambda2_nonzero) {
        throw PreconditionError("unstabilizable_witness: needs N >= 2 and a spanning tree");
    }
    const Eigen::Index n = plant.n();
    const Matrix rc = controllable_basis(plant.a, plant.b);
    const Matrix ru = complement(rc, n);
    const Matrix a_unc = ru.transpose() * plant.a * ru;

    // Quotient by the stable invariant subspace of a_unc leaves the unstable block.
    WitnessReport r;
    r.kind = WitnessKind::unstabilizable;
    Eigen::EigenSolver<Matrix> eig(a_unc);
    Matrix stable_vectors(a_unc.rows(), 0);
    std::size_t stable_count = 0;
    for (Eigen::Index i = 0; i < a_unc.rows(); ++i) {
        if (numerics::is_unstable_eigenvalue(eig.eigenvalues()(i))) continue;
        ++stable_count;
        Matrix grown(a_unc.rows(), stable_vectors.cols() + 2);
        grown << stable_vectors, eig.eigenvectors().col(i).real(), eig.eigenvectors().col(i).imag();
        stable_vectors = std::move(grown);
    }
    Matrix unstable_coords = Matrix::Identity(a_unc.rows(), a_unc.rows());
    if (stable_count > 0) {
        const Matrix s = numerics::orthonormal_range(stable_vectors);
        if (static_cast<std::size_t>(s.cols()) == stable_count) {
            unstable_coords = complement(s, a_unc.rows());
        } else {
            r.notes.push_back("stable uncontrollable modes are defective; using the full uncontrollable block");
        }
    }
    const Matrix projector = unstable_coords.transpose() * ru.transpose();  // R^n -> unstable coords
    r.unstable_block = unstable_coords.transpose() * a_unc * unstable_coords;

    // Nonzero Laplacian eigenvalue: prefer real, then smallest real part.
    std::vector<Complex> candidates;
    const double lap_norm = numerics::two_norm(base.net.laplacian());
    for (Complex l : spec.eigenvalues) {
        if (!numerics::is_zero_eigenvalue(l, lap_norm)) candidates.push_back(l);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](Complex x, Complex y) {
        const bool rx = std::abs(x.imag()) < 1e-12, ry = std::abs(y.imag()) < 1e-12;
        if (rx != ry) return rx;
        return x.real() < y.real();
    });
    const Complex lambda = candidates.front();
    r.laplacian_eigenvalue = lambda;
    const bool real_lambda = std::abs(lambda.imag()) < 1e-12;
    CVector w = numerics::left_eigenvector(base.net.laplacian().cast<Complex>(),
                                           real_lambda ? Complex(lambda.real(), 0.0) : lambda);
    if (real_lambda) w = real_direction(w).cast<Complex>();
    const Vector v = (w / w.squaredNorm()).real();

    // Uncontrollable start T1 1, or an unstable eigen-direction if 1 is blind to it.
    Vector local = rc * Vector::Ones(rc.cols()) + ru * Vector::Ones(ru.cols());
    if ((projector * local).norm() < 1e-8) {
        local = ru * unstable_coords.col(0);
        r.notes.push_back("T1 1 has no unstable uncontrollable component; using a basis direction");
    }
    const std::size_t agents = base.net.size();
    std::vector<Vector> xs(agents);
    for (std::size_t i = 0; i < agents; ++i) xs[i] = v(static_cast<Eigen::Index>(i)) * local;

    SimConfig cfg = base;
    cfg.horizon = options.horizon;
    cfg.stride = 1;
    set_initials(r, cfg, xs, std::vector<Vector>(agents, Vector::Ones(n)),
                 std::vector<Vector>(agents, Vector::Ones(plant.m())));
    const SimTrace trace = simulate_primitive(cfg);

    auto zeta_of = [&](const Vector& delta) {
        CVector mixed = CVector::Zero(n);
        for (std::size_t i = 0; i < agents; ++i) {
            mixed += std::conj(w(static_cast<Eigen::Index>(i))) *
                     delta.segment(static_cast<Eigen::Index>(i) * n, n).cast<Complex>();
        }
        return CVector(projector.cast<Complex>() * mixed);
    };
    r.quantity = "||zeta(t)||, zeta = unstable uncontrollable part of (w^* (x) I) delta(t)";
    CVector predicted = zeta_of(trace.steps.front().delta);
    const CMatrix block = r.unstable_block.cast<Complex>();
    for (const auto& step : trace.steps) {
        const CVector zeta = zeta_of(step.delta);
        r.observed.push_back(zeta.norm());
        r.envelope.push_back(predicted.norm());
        const double scale = predicted.norm() > 0.0 ? predicted.norm() : 1.0;
        r.recursion_residual = std::max(r.recursion_residual, (zeta - predicted).norm() / scale);
        predicted = block * predicted;
    }
    r.saturation_events = trace.saturations.size();
    r.confirmed = envelope_holds(r) && r.recursion_residual <= 1e-9 && r.envelope.front() > 0.0;
    return r;
}

Matrix error_block_matrix(const LtiPlant& plant, const Network& net, const Matrix& k, const Matrix& g) {
    const auto agents = static_cast<Eigen::Index>(net.size());
    const Eigen::Index n = plant.n();
    const NetworkSpectrum spec = spectrum(net);
    const LaplacianSplit split = split_laplacian(net, spec);
    const Matrix bk = plant.b * k;
    const Matrix j_obs = numerics::kron(Matrix::Identity(agents, agents), Matrix(plant.a - g * plant.c));
    const Eigen::Index top = agents * n, bottom = (agents - 1) * n;
    Matrix out = Matrix::Zero(top + bottom, top + bottom);
    out.topLeftCorner(top, top) = j_obs;
    if (agents > 1) {
        const Matrix eye_n = Matrix::Identity(n, n);
        out.bottomLeftCorner(bottom, top) =
            numerics::kron(split.phi_bar, eye_n) * numerics::kron(net.laplacian(), bk);
        out.bottomRightCorner(bottom, bottom) =
            numerics::kron(Matrix::Identity(agents - 1, agents - 1), plant.a) -
            numerics::kron(split.t22, bk);
    }
    return out;
}

WitnessReport schur_growth_witness(const SimConfig& base, const WitnessOptions& options) {
    const Matrix& k = consensus_law(base, "schur_growth_witness").k;
    validate(base.plant);
    validate(base.comm, base.plant);
    validate(base.law, base.plant, base.net);
    const LtiPlant& plant = base.plant;
    const Matrix& g = base.comm.observer_gain;
    const Matrix block = error_block_matrix(plant, base.net, k, g);
    const auto values = numerics::eigenvalues(block);
    const Complex lambda1 = *std::max_element(values.begin(), values.end(), numerics::modulus_order_less);

    WitnessReport r;
    r.kind = WitnessKind::schur_growth;
    r.lambda1 = lambda1;
    r.block_radius = std::abs(lambda1);
    if (!numerics::is_unstable_eigenvalue(lambda1)) {
        throw PreconditionError("schur_growth_witness: rho(A(K,G)) = " + std::to_string(r.block_radius) +
                                " < 1, so this (K, G) is not defeated");
    }
    const double gamma = base.comm.gamma;
    const double varrho = options.varrho.value_or((1.0 + gamma) / 2.0);
    if (!(varrho >= gamma && varrho < 1.0)) {
        throw ConfigError("schur_growth_witness: varrho must lie in [gamma, 1)");
    }
    const auto agents = static_cast<Eigen::Index>(base.net.size());
    const Eigen::Index n = plant.n(), m = plant.m();
    const double w_bound = base.comm.alpha / 2.0;
    const double wu_bound = base.comm.alpha_u / 2.0;
    const double gain_bound = std::isfinite(options.gain_bound) ? options.gain_bound : numerics::two_norm(g);
    const double gap = options.gamma_gap_constant ? std::abs(lambda1 - gamma) : 1.0 - varrho;
    const double norm_b = numerics::two_norm(plant.b);
    const double rhs = 4.0 * wu_bound * norm_b * std::sqrt(static_cast<double>(m * agents)) / gap +
                       4.0 * gain_bound * w_bound * std::sqrt(static_cast<double>(n * agents)) / gap;
    r.a_const = rhs > 0.0 ? 1.25 * rhs : 1.0;

    const bool real_lambda = lambda1.imag() == 0.0;
    CVector w = numerics::left_eigenvector(block.cast<Complex>(), lambda1);
    Vector start;
    if (real_lambda) {
        const Vector wr = real_direction(w);
        w = wr.cast<Complex>();
        start = r.a_const * wr;
    } else {
        // Real start Re(c w) with w^* Re(c w) = a: (c + conj(c) beta) / 2 = a, beta = w^* conj(w).
        const Complex beta = w.adjoint() * w.conjugate();
        Eigen::Matrix2d sys;
        sys << 1.0 + beta.real(), beta.imag(), beta.imag(), 1.0 - beta.real();
        const Eigen::Vector2d xy = sys.partialPivLu().solve(Eigen::Vector2d(2.0 * r.a_const, 0.0));
        start = (Complex(xy(0), xy(1)) * w).real();
    }
    const Eigen::Index top = agents * n;
    const Vector e0 = start.head(top);
    const Vector d2 = start.tail(start.size() - top);
    const LaplacianSplit split = split_laplacian(base.net, spectrum(base.net));
    Vector x0 = Vector::Zero(top);
    if (agents > 1) {
        const Matrix q = split.phi_inv.rightCols(agents - 1);
        x0 = numerics::kron(q, Matrix::Identity(n, n)) * d2;
    }
    const Vector xh0 = x0 - e0;
    const Vector uh0 = -numerics::kron(base.net.laplacian(), k) * xh0;

    SimConfig cfg = base;
    cfg.horizon = options.horizon;
    cfg.stride = 1;
    set_initials(r, cfg, split_stack(x0, static_cast<std::size_t>(agents)),
                 split_stack(xh0, static_cast<std::size_t>(agents)),
                 split_stack(uh0, static_cast<std::size_t>(agents)));
    const SimTrace trace = simulate_primitive(cfg);

    const Matrix phi_bar_n = agents > 1 ? numerics::kron(split.phi_bar, Matrix::Identity(n, n))
                                        : Matrix(0, top);
    r.quantity = "|[Z(t)]_1|, Z_1 = w^* (E, (phi_bar (x) I) delta)";
    double growth = 1.0;
    for (const auto& step : trace.steps) {
        Vector stacked(block.rows());
        stacked << step.e, phi_bar_n * step.delta;
        r.observed.push_back(std::abs(Complex(w.adjoint() * stacked.cast<Complex>())));
        r.envelope.push_back(0.5 * r.a_const * growth);
        growth *= r.block_radius;
    }
    r.saturation_events = trace.saturations.size();
    if (r.saturation_events > 0) {
        r.notes.push_back("quantizers saturated; the error bounds W, W_u used to size a do not hold");
    }
    r.confirmed = envelope_holds(r);
    return r;
}

}  // namespace qcoop
