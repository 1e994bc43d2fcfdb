#include "qcoop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "qcoop/error.hpp"

namespace qcoop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSuccessMargin = 1e-9;

std::vector<Complex> distinct_unstable_eigenvalues(const Matrix& a) {
    std::vector<Complex> out;
    for (Complex l : numerics::eigenvalues(a)) {
        if (!numerics::is_unstable_eigenvalue(l)) continue;
        const bool seen = std::any_of(out.begin(), out.end(), [&](Complex o) {
            return std::abs(o - l) <= 1e-8 * std::max(1.0, std::abs(l));
        });
        if (!seen) out.push_back(l);
    }
    return out;
}

// PBH on the stacked [A - lambda I; C].
PbhResult pbh_observability(const Matrix& a, const Matrix& c) {
    PbhResult result;
    const Eigen::Index n = a.rows();
    for (Complex l : distinct_unstable_eigenvalues(a)) {
        CMatrix stacked(n + c.rows(), n);
        stacked.topRows(n) = a.cast<Complex>() - l * CMatrix::Identity(n, n);
        stacked.bottomRows(c.rows()) = c.cast<Complex>();
        Eigen::JacobiSVD<CMatrix> svd(stacked, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smallest = sv(sv.size() - 1);
        if (smallest <= kPbhRankTolerance * std::max(1.0, sv(0))) {
            result.holds = false;
            result.failing.push_back({l, svd.matrixV().col(n - 1)});
        }
    }
    return result;
}

std::vector<Complex> nonzero_part(const NetworkSpectrum& spec) {
    std::vector<Complex> out = spec.eigenvalues;
    if (out.empty()) return out;
    auto zero = std::min_element(out.begin(), out.end(),
                                 [](Complex x, Complex y) { return std::abs(x) < std::abs(y); });
    out.erase(zero);
    return out;
}

double shifted_radius(const Matrix& a, const Matrix& bk, Complex lambda) {
    if (lambda.imag() == 0.0) return numerics::spectral_radius(Matrix(a - lambda.real() * bk));
    return numerics::spectral_radius(CMatrix(a.cast<Complex>() - lambda * bk.cast<Complex>()));
}

// max_i rho(A - lambda_i B K)
struct StabilizationProblem {
    Matrix a;
    Matrix b;
    std::vector<Complex> lambdas;

    double operator()(const Matrix& k) const {
        const Matrix bk = b * k;
        double worst = 0.0;
        for (Complex l : lambdas) worst = std::max(worst, shifted_radius(a, bk, l));
        return worst;
    }
};

// Warm start from the modified algebraic Riccati iteration
//   P = A^T P A - (1 - d^2) A^T P B (B^T P B)^-1 B^T P A + I,
// with K = w (B^T P B)^-1 B^T P A and (d, w) from the relaxation problem.
std::optional<Matrix> riccati_warm_start(const StabilizationProblem& prob) {
    if (prob.lambdas.empty()) return std::nullopt;
    const auto [relax, omega] = min_max_relaxation(prob.lambdas);
    if (!(relax < 1.0) || omega == 0.0) return std::nullopt;
    const Eigen::Index n = prob.a.rows();
    const Matrix& a = prob.a;
    const Matrix& b = prob.b;
    Matrix p = Matrix::Identity(n, n);
    for (int iter = 0; iter < 2000; ++iter) {
        const Matrix btpb = b.transpose() * p * b;
        Eigen::FullPivLU<Matrix> lu(btpb);
        if (!lu.isInvertible()) return std::nullopt;
        const Matrix btpa = b.transpose() * p * a;
        Matrix next = a.transpose() * p * a -
                      (1.0 - relax * relax) * btpa.transpose() * lu.solve(btpa) +
                      Matrix::Identity(n, n);
        next = 0.5 * (next + next.transpose());
        if (!next.allFinite() || next.norm() > 1e12) return std::nullopt;
        const double change = (next - p).norm();
        p = next;
        if (change <= 1e-12 * p.norm()) break;
    }
    const Matrix btpb = b.transpose() * p * b;
    Eigen::FullPivLU<Matrix> lu(btpb);
    if (!lu.isInvertible()) return std::nullopt;
    Matrix k = omega * lu.solve(Matrix(b.transpose() * p * a));
    if (!k.allFinite()) return std::nullopt;
    return k;
}

GainSearchResult pattern_search(const StabilizationProblem& prob, std::optional<Matrix> warm,
                                const GainSearchOptions& options) {
    const Eigen::Index rows = prob.b.cols();
    const Eigen::Index cols = prob.a.rows();
    double lambda_max = 0.0;
    for (Complex l : prob.lambdas) lambda_max = std::max(lambda_max, std::abs(l));
    const double scale = std::max(1.0, numerics::two_norm(prob.a)) /
                         (std::max(lambda_max, 1e-12) * std::max(numerics::two_norm(prob.b), 1e-12));

    GainSearchResult best;
    best.gain = Matrix::Zero(rows, cols);
    best.radius = kInf;
    std::uint64_t evals = 0;
    auto evaluate = [&](const Matrix& k) {
        ++evals;
        return prob(k);
    };

    std::mt19937_64 rng(options.seed);
    std::vector<std::pair<Matrix, std::string>> starts;
    if (warm) starts.emplace_back(*warm, "warm-start");
    starts.emplace_back(Matrix::Zero(rows, cols), "pattern-search");
    std::size_t next_start = 0;

    while (evals < options.budget) {
        Matrix cur;
        std::string origin = "pattern-search";
        if (next_start < starts.size()) {
            cur = starts[next_start].first;
            origin = starts[next_start].second;
            ++next_start;
        } else {
            cur.resize(rows, cols);
            for (Eigen::Index i = 0; i < cur.size(); ++i) {
                cur.data()[i] = scale * (2.0 * uniform01(rng) - 1.0);
            }
        }
        double fcur = evaluate(cur);
        const double start_value = fcur;
        double step = 0.25 * std::max(scale, cur.cwiseAbs().maxCoeff());
        const double min_step = 1e-9 * std::max(scale, 1.0);
        while (step > min_step && evals < options.budget) {
            bool improved = false;
            for (Eigen::Index c = 0; c < cur.size() && !improved; ++c) {
                for (double sign : {1.0, -1.0}) {
                    if (evals >= options.budget) break;
                    Matrix trial = cur;
                    trial.data()[c] += sign * step;
                    const double ft = evaluate(trial);
                    if (ft < fcur) {
                        cur = std::move(trial);
                        fcur = ft;
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) step *= 0.5;
        }
        if (fcur < best.radius) {
            best.radius = fcur;
            best.gain = cur;
            best.method = (origin == "warm-start" && fcur == start_value) ? "warm-start" : origin;
        }
        if (best.radius < 1e-12) break;
    }
    best.evaluations = evals;
    best.found = best.radius < 1.0 - kSuccessMargin;
    return best;
}

numerics::GuoBound pick_guo(const Matrix& m, std::optional<double> epsilon, const std::string& what) {
    if (epsilon) {
        numerics::GuoBound g = numerics::guo_power_bound(m, *epsilon);
        if (!(g.eta < 1.0)) {
            throw InfeasibleError(what + ": eta = " + std::to_string(g.eta) +
                                  " >= 1 for the requested epsilon");
        }
        return g;
    }
    std::optional<numerics::GuoBound> best;
    for (double eps : kEpsilonGrid) {
        numerics::GuoBound g = numerics::guo_power_bound(m, eps);
        if (g.eta < 1.0 && (!best || g.eta < best->eta)) best = g;
    }
    if (!best) throw InfeasibleError(what + ": no epsilon in the grid gives eta < 1");
    return *best;
}

}  // namespace

PbhResult check_detectability(const LtiPlant& plant) {
    validate(plant);
    return pbh_observability(plant.a, plant.c);
}

PbhResult check_stabilizability(const LtiPlant& plant) {
    validate(plant);
    // rank [A - lambda I, B] = rank [A^T - conj(lambda) I; B^T], and the
    // spectrum of a real A is closed under conjugation.
    PbhResult dual = pbh_observability(plant.a.transpose(), plant.b.transpose());
    for (auto& cert : dual.failing) cert.null_vector = cert.null_vector.conjugate();
    return dual;
}

A1Result check_a1(const LtiPlant& plant, const NetworkSpectrum& spec, const Matrix& k) {
    validate(plant);
    if (k.rows() != plant.m() || k.cols() != plant.n()) {
        throw ConfigError("check_a1: K must be m x n");
    }
    A1Result r;
    const Matrix bk = plant.b * k;
    for (Complex l : nonzero_part(spec)) {
        r.radii.push_back(shifted_radius(plant.a, bk, l));
        r.worst_radius = std::max(r.worst_radius, r.radii.back());
    }
    r.holds = r.worst_radius < 1.0;
    return r;
}

std::pair<double, double> min_max_relaxation(const std::vector<Complex>& lambdas) {
    auto f = [&](double w) {
        double worst = 0.0;
        for (Complex l : lambdas) worst = std::max(worst, std::abs(1.0 - w * l));
        return worst;
    };
    if (lambdas.empty()) return {0.0, 0.0};
    double radius = 0.0;
    for (Complex l : lambdas) radius = std::max(radius, std::abs(l));
    if (radius == 0.0) return {1.0, 0.0};
    double lo = -2.0 / radius;
    double hi = 2.0 / radius;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double w = 0.0;
    for (int expansion = 0; expansion < 60; ++expansion) {
        double a = lo, b = hi;
        double c = b - phi * (b - a), d = a + phi * (b - a);
        double fc = f(c), fd = f(d);
        for (int iter = 0; iter < 300 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++iter) {
            if (fc <= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
        }
        w = 0.5 * (a + b);
        const double width = hi - lo;
        if (w - lo < 1e-9 * width) {
            lo -= width;
        } else if (hi - w < 1e-9 * width) {
            hi += width;
        } else {
            break;
        }
    }
    return {f(w), w};
}

A1PrimeResult check_a1_prime(const LtiPlant& plant, const NetworkSpectrum& spec) {
    validate(plant);
    if (plant.m() != 1) throw ConfigError("check_a1_prime: requires a single-input plant (m = 1)");
    A1PrimeResult r;
    r.stabilizable = check_stabilizability(plant).holds;
    double product = 1.0;
    bool any_unstable = false;
    for (Complex l : numerics::eigenvalues(plant.a)) {
        if (numerics::is_unstable_eigenvalue(l)) {
            product *= std::abs(l);
            any_unstable = true;
        }
    }
    r.lhs = any_unstable ? product : 0.0;
    const auto [relax, omega] = min_max_relaxation(nonzero_part(spec));
    r.omega = omega;
    r.rhs = relax > 0.0 ? 1.0 / relax : kInf;
    r.holds = r.stabilizable && r.lhs < r.rhs;
    return r;
}

GainSearchResult search_gain_k(const LtiPlant& plant, const NetworkSpectrum& spec,
                               const GainSearchOptions& options) {
    validate(plant);
    if (options.budget == 0) throw ConfigError("search_gain_k: budget must be positive");
    StabilizationProblem prob{plant.a, plant.b, nonzero_part(spec)};
    const double open_loop = numerics::spectral_radius(plant.a);
    if (open_loop < 1.0 || prob.lambdas.empty()) {
        GainSearchResult r;
        r.found = true;
        r.gain = Matrix::Zero(plant.m(), plant.n());
        r.radius = check_a1(plant, spec, r.gain).worst_radius;
        r.method = "trivial";
        return r;
    }
    GainSearchResult r = pattern_search(prob, riccati_warm_start(prob), options);
    if (r.found && !check_a1(plant, spec, r.gain).holds) r.found = false;
    return r;
}

GainSearchResult search_gain_g(const LtiPlant& plant, const GainSearchOptions& options) {
    validate(plant);
    if (options.budget == 0) throw ConfigError("search_gain_g: budget must be positive");
    if (numerics::spectral_radius(plant.a) < 1.0) {
        GainSearchResult r;
        r.found = true;
        r.gain = Matrix::Zero(plant.n(), plant.p());
        r.radius = numerics::spectral_radius(plant.a);
        r.method = "trivial";
        return r;
    }
    StabilizationProblem dual{plant.a.transpose(), plant.c.transpose(), {Complex(1.0, 0.0)}};
    GainSearchResult r = pattern_search(dual, riccati_warm_start(dual), options);
    r.gain = Matrix(r.gain.transpose());
    if (!check_detectability(plant).holds) r.found = false;
    if (r.found) r.found = numerics::spectral_radius(Matrix(plant.a - r.gain * plant.c)) < 1.0;
    return r;
}

std::optional<std::int64_t> levels_for_threshold(double threshold, double step) {
    if (!std::isfinite(threshold) || !(step > 0.0)) return std::nullopt;
    const double q = threshold / step - 0.5;
    if (!std::isfinite(q) || q >= 4.611686018427387904e18) return std::nullopt;
    if (q < 0.0) return 1;
    return static_cast<std::int64_t>(std::floor(q)) + 1;
}

SizingResult synthesize_protocol(const LtiPlant& plant, const Network& net, const Matrix& k,
                                 const Matrix& g, const SizingInputs& inputs, double alpha,
                                 double alpha_u) {
    validate(plant);
    validate(QuantizerSpec{alpha, 1});
    validate(QuantizerSpec{alpha_u, 1});
    if (!(inputs.c_x >= 0.0 && inputs.c_xhat >= 0.0 && inputs.c_uhat >= 0.0)) {
        throw ConfigError("sizing: C_x, C_xhat, C_uhat must be nonnegative");
    }
    if (g.rows() != plant.n() || g.cols() != plant.p()) throw ConfigError("sizing: G must be n x p");
    const NetworkSpectrum spec = spectrum(net);
    const A1Result a1 = check_a1(plant, spec, k);
    if (!a1.holds) {
        throw PreconditionError("sizing: A1 fails for the given K (worst radius " +
                                std::to_string(a1.worst_radius) + ")");
    }
    const Matrix a_gc = plant.a - g * plant.c;
    if (!(numerics::spectral_radius(a_gc) < 1.0)) {
        throw PreconditionError("sizing: rho(A - G C) >= 1 for the given G");
    }

    const auto big_n = static_cast<Eigen::Index>(net.size());
    const Eigen::Index n = plant.n(), m = plant.m(), p = plant.p();
    const LaplacianSplit split = split_laplacian(net, spec);
    const Matrix& lap = net.laplacian();
    const Matrix& b = plant.b;
    const Matrix bk = b * k;
    const Matrix kbk = k * bk;

    SizingResult r;
    const Matrix j_obs = numerics::kron(Matrix::Identity(big_n, big_n), a_gc);
    const numerics::GuoBound obs = pick_guo(j_obs, inputs.epsilon, "J(G)");
    r.epsilon = obs.epsilon;
    r.eta = obs.eta;
    r.m_const = obs.m_const;

    Matrix w_mat;
    if (big_n > 1) {
        const Matrix j_bar = numerics::kron(Matrix::Identity(big_n - 1, big_n - 1), plant.a) -
                             numerics::kron(split.t22, bk);
        const numerics::GuoBound dis = pick_guo(j_bar, inputs.epsilon_bar1, "Jbar(K)");
        r.epsilon_bar1 = dis.epsilon;
        r.eta_bar1 = dis.eta;
        r.m_bar1 = dis.m_const;
        w_mat = numerics::kron(split.t22, bk);
    }

    const double rate_floor = std::max(r.eta, r.eta_bar1);
    r.gamma = inputs.gamma.value_or((rate_floor + 1.0) / 2.0);
    if (!(r.gamma > rate_floor && r.gamma < 1.0)) {
        throw InfeasibleError("sizing: gamma = " + std::to_string(r.gamma) +
                              " is outside (max(eta, eta_bar1), 1) = (" +
                              std::to_string(rate_floor) + ", 1)");
    }
    const double gam = r.gamma;

    const double nn = static_cast<double>(n * big_n);
    const double sq_nN = std::sqrt(nn);
    const double sq_pN = std::sqrt(static_cast<double>(p * big_n));
    const double sq_mN = std::sqrt(static_cast<double>(m * big_n));
    const double norm_b = numerics::two_norm(b);
    const double norm_g = numerics::two_norm(g);
    const double c_inf = numerics::inf_norm(plant.c);
    const Matrix lk = numerics::kron(lap, k);
    const Matrix lap2 = lap * lap;
    const double norm_lk = numerics::two_norm(lk);
    const double norm_w = big_n > 1 ? numerics::two_norm(w_mat) : 0.0;
    const double norm_phi = numerics::two_norm(split.phi);
    const double norm_phi_inv = numerics::two_norm(split.phi_inv);
    const Matrix m1 = lk - numerics::kron(lap, Matrix(k * plant.a)) + numerics::kron(lap2, kbk);
    const Matrix m2 =
        numerics::kron(lap, Matrix(k * a_gc)) - numerics::kron(lap2, kbk) - lk;
    const Matrix m3 = Matrix::Identity(m * big_n, m * big_n) + numerics::kron(lap, Matrix(k * b));
    const Matrix m4 = numerics::kron(lap, Matrix(k * g));
    const double n_m1 = numerics::two_norm(m1), n_m2 = numerics::two_norm(m2);
    const double n_m3 = numerics::two_norm(m3), n_m4 = numerics::two_norm(m4);

    const double cx = inputs.c_x, cxh = inputs.c_xhat, cuh = inputs.c_uhat;
    const double big_m = r.m_const;
    const double r_initial = sq_nN * big_m * (cx + cxh);
    const double r_noise = alpha * sq_pN * big_m * norm_g / (2.0 * (gam - r.eta));
    r.r_const = std::max(r_initial, r_noise);
    const double h0_bound = sq_nN * norm_lk * cxh + sq_mN * cuh;
    const double control_noise = alpha_u * sq_mN * big_m * norm_b / (2.0 * gam * (gam - r.eta));
    const double h0_term = big_m * norm_b * h0_bound / gam;
    r.e_bound = r.r_const + control_noise + h0_term;
    r.l_threshold = c_inf * r.e_bound;

    double gamma_initial = 0.0, gamma_coupling = 0.0;
    if (big_n > 1) {
        gamma_initial = 2.0 * cx * r.m_bar1 * sq_nN;
        gamma_coupling = r.m_bar1 * norm_w / (gam - r.eta_bar1) * r.e_bound;
    }
    r.gamma_const = std::max(gamma_initial, gamma_coupling);
    r.delta_bound = norm_phi_inv * norm_phi * r.gamma_const;

    const double lu_first = 2.0 * cx * sq_nN * n_m1 + sq_nN * n_m2 * (cx + cxh) +
                            alpha * sq_pN * n_m4 / 2.0 + n_m3 * h0_bound;
    const double lu_later = norm_phi_inv * norm_phi * n_m1 * r.gamma_const + n_m2 * r.e_bound +
                            alpha_u * sq_mN * n_m3 / (2.0 * gam) + alpha * sq_pN * n_m4 / 2.0;
    r.l_u_threshold = std::max(lu_first, lu_later);

    r.levels_y = levels_for_threshold(r.l_threshold, alpha);
    r.levels_u = levels_for_threshold(r.l_u_threshold, alpha_u);
    r.overflow = !r.levels_y || !r.levels_u;
    r.stable_plant_case = numerics::spectral_radius(plant.a) < 1.0 && k.isZero(0.0) && g.isZero(0.0);

    r.diagnostics = {
        {"M", big_m},
        {"M_bar1", r.m_bar1},
        {"norm_B", norm_b},
        {"norm_G", norm_g},
        {"inf_norm_C", c_inf},
        {"norm_LxK", norm_lk},
        {"norm_W", norm_w},
        {"norm_Phi", norm_phi},
        {"norm_Phi_inv", norm_phi_inv},
        {"norm_M1", n_m1},
        {"norm_M2", n_m2},
        {"norm_M3", n_m3},
        {"norm_M4", n_m4},
        {"R_initial", r_initial},
        {"R_noise", r_noise},
        {"E_control_noise", control_noise},
        {"E_initial_control", h0_term},
        {"Gamma_initial", gamma_initial},
        {"Gamma_coupling", gamma_coupling},
        {"Lu_first_step", lu_first},
        {"Lu_later_steps", lu_later},
    };
    return r;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

InitialSampler uniform_box_sampler(double lo, double hi) {
    return [lo, hi](std::mt19937_64& rng, SimConfig& cfg) {
        for (auto& x : cfg.initial_states) {
            for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = lo + (hi - lo) * uniform01(rng);
        }
    };
}

LevelSearchResult empirical_level_search(const SimConfig& base, const InitialSampler& sampler,
                                         const LevelSearchOptions& options) {
    if (options.cap < 1 || options.trials == 0) {
        throw ConfigError("empirical_level_search: cap and trials must be positive");
    }
    LevelSearchResult result;
    SimConfig cfg = base;
    cfg.horizon = options.horizon;
    cfg.stop_on_saturation = true;
    cfg.stride = std::max<std::uint64_t>(options.horizon, 1);
    cfg.capture_frames = false;

    auto clean = [&](std::int64_t levels_y, std::int64_t levels_u) {
        std::mt19937_64 rng(options.seed);
        cfg.comm.levels_y = levels_y;
        cfg.comm.levels_u = levels_u;
        for (std::uint64_t trial = 0; trial < options.trials; ++trial) {
            sampler(rng, cfg);
            ++result.simulations;
            if (!simulate_primitive(cfg).saturations.empty()) return false;
        }
        return true;
    };
    // Smallest value in (lo, hi] passing, assuming hi passes.
    auto bisect = [](std::int64_t lo, std::int64_t hi, const auto& pass) {
        while (hi - lo > 1) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            if (pass(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return hi;
    };

    if (!clean(options.cap, options.cap)) return result;
    const std::int64_t joint = bisect(0, options.cap, [&](std::int64_t l) { return clean(l, l); });
    result.levels_y = bisect(0, joint, [&](std::int64_t l) { return clean(l, joint); });
    result.levels_u =
        bisect(0, joint, [&](std::int64_t l) { return clean(result.levels_y, l); });
    result.found = true;
    return result;
}

}  // namespace qcoop
