#include "qcoop/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "qcoop/error.hpp"

namespace qcoop {

namespace {

Vector stack(const std::vector<Vector>& parts) {
    Eigen::Index total = 0;
    for (const auto& v : parts) total += v.size();
    Vector out(total);
    Eigen::Index off = 0;
    for (const auto& v : parts) {
        out.segment(off, v.size()) = v;
        off += v.size();
    }
    return out;
}

// (1 pi^T (x) I_n) x
Vector consensus_component(const Vector& x, const Vector& pi, Eigen::Index n) {
    const auto agents = pi.size();
    Vector mean = Vector::Zero(n);
    for (Eigen::Index i = 0; i < agents; ++i) mean += pi(i) * x.segment(i * n, n);
    return mean.replicate(agents, 1);
}

void check_vectors(const std::vector<Vector>& v, std::size_t count, Eigen::Index dim,
                   const std::string& what) {
    if (v.size() != count) {
        throw ConfigError(what + ": expected " + std::to_string(count) + " entries, got " +
                          std::to_string(v.size()));
    }
    for (const auto& x : v) {
        if (x.size() != dim) {
            throw ConfigError(what + ": each entry must have dimension " + std::to_string(dim));
        }
        if (!x.allFinite()) throw ConfigError(what + ": entries must be finite");
    }
}

// Fills the per-step summaries that are kept regardless of stride.
class Recorder {
public:
    Recorder(SimTrace& trace, const SimConfig& cfg, const Vector& x0)
        : trace_(trace), a_(cfg.plant.a), stride_(std::max<std::uint64_t>(cfg.stride, 1)) {
        const Vector bar = consensus_component(x0, trace.pi, trace.n);
        reference_ = bar.head(trace.n);
    }

    void record(TraceStep&& step, bool force_keep) {
        const Eigen::Index n = trace_.n;
        trace_.delta_norm.push_back(step.delta.norm());
        std::vector<double> e_norms(trace_.agents);
        double deviation = 0.0;
        for (std::size_t j = 0; j < trace_.agents; ++j) {
            const auto off = static_cast<Eigen::Index>(j) * n;
            e_norms[j] = step.e.segment(off, n).norm();
            deviation = std::max(deviation, (step.x.segment(off, n) - reference_).norm());
        }
        trace_.e_norm.push_back(std::move(e_norms));
        trace_.reference_deviation.push_back(deviation);
        trace_.saturations_per_step.push_back(step.saturations);
        trace_.final_t = step.t;
        reference_ = a_ * reference_;
        if (force_keep || step.t % stride_ == 0) {
            trace_.steps.push_back(std::move(step));
        } else {
            pending_ = std::move(step);
            has_pending_ = true;
        }
    }

    // Keeps the last step even when it falls between strides.
    void finish() {
        if (has_pending_ && (trace_.steps.empty() || trace_.steps.back().t < pending_.t)) {
            trace_.steps.push_back(std::move(pending_));
        }
    }

private:
    SimTrace& trace_;
    Matrix a_;
    std::uint64_t stride_;
    Vector reference_;
    TraceStep pending_;
    bool has_pending_ = false;
};

// Records every component of a stacked, agent-major quantizer input beyond the range.
void note_saturations(SimTrace& trace, std::uint64_t t, const Vector& scaled,
                      const QuantizerSpec& q, bool control) {
    const double limit = (static_cast<double>(q.levels) + 0.5) * q.step;
    const auto per_agent = control ? trace.m : trace.p;
    for (Eigen::Index k = 0; k < scaled.size(); ++k) {
        if (std::abs(scaled(k)) > limit) {
            trace.saturations.push_back({t, static_cast<std::size_t>(k / per_agent), control,
                                         static_cast<std::size_t>(k % per_agent),
                                         std::abs(scaled(k))});
        }
    }
}

SimTrace empty_trace(const SimConfig& cfg, const NetworkSpectrum& spec) {
    SimTrace trace;
    trace.agents = cfg.net.size();
    trace.n = cfg.plant.n();
    trace.m = cfg.plant.m();
    trace.p = cfg.plant.p();
    trace.pi = spec.pi;
    // Precise channels carry reals; only quantized channels have a bit cost.
    if (cfg.mode == CodecMode::quantized) {
        trace.bits_per_channel_step = bits_per_channel_step(cfg.comm, cfg.plant);
        trace.state_step = cfg.comm.alpha;
        trace.control_step = cfg.comm.alpha_u;
    }
    return trace;
}

}  // namespace

std::string_view to_string(SimStatus status) {
    switch (status) {
        case SimStatus::completed: return "completed";
        case SimStatus::scaling_underflow: return "scaling_underflow";
        case SimStatus::stopped_on_saturation: return "stopped_on_saturation";
    }
    return "unknown";
}

void validate(const SimConfig& cfg) {
    validate(cfg.plant);
    validate(cfg.comm, cfg.plant);
    validate(cfg.law, cfg.plant, cfg.net);
    if (cfg.net.size() == 0) throw ConfigError("simulation: network is empty");
    if (cfg.horizon < 1) throw ConfigError("simulation: horizon must be >= 1");
    const std::size_t agents = cfg.net.size();
    check_vectors(cfg.initial_states, agents, cfg.plant.n(), "initial_states");
    check_vectors(cfg.initial_estimates, agents, cfg.plant.n(), "initial_estimates");
    check_vectors(cfg.initial_control_estimates, agents, cfg.plant.m(),
                  "initial_control_estimates");
    if (std::holds_alternative<TrackingLaw>(cfg.law)) {
        if (cfg.leader_state.size() != cfg.plant.n() || cfg.leader_estimate.size() != cfg.plant.n()) {
            throw ConfigError("simulation: tracking law needs leader_state and leader_estimate");
        }
    }
}

SimTrace simulate_primitive(const SimConfig& cfg) {
    validate(cfg);
    const LtiPlant& plant = cfg.plant;
    const Network& net = cfg.net;
    const std::size_t agents = net.size();
    const Eigen::Index n = plant.n(), m = plant.m(), p = plant.p();
    const NetworkSpectrum spec = spectrum(net);
    SimTrace trace = empty_trace(cfg, spec);

    const auto* tracking = std::get_if<TrackingLaw>(&cfg.law);
    const bool has_leader = tracking != nullptr;
    const auto leader_id = static_cast<std::uint32_t>(agents);

    std::vector<Encoder> encoders;
    encoders.reserve(agents);
    for (std::size_t j = 0; j < agents; ++j) {
        encoders.emplace_back(plant, cfg.comm, static_cast<std::uint32_t>(j),
                              cfg.initial_estimates[j], cfg.initial_control_estimates[j], cfg.mode);
    }
    // decoders[(j, i)] lives at agent i and replays agent j.
    std::map<std::pair<std::size_t, std::size_t>, Decoder> decoders;
    for (const Edge& e : net.edges()) {
        decoders.emplace(std::pair(e.from, e.to),
                         Decoder(plant, cfg.comm, static_cast<std::uint32_t>(e.from),
                                 cfg.initial_estimates[e.from],
                                 cfg.initial_control_estimates[e.from], cfg.mode));
    }
    std::optional<Encoder> leader_encoder;
    std::map<std::size_t, Decoder> leader_decoders;
    Vector leader_x;
    if (has_leader) {
        leader_x = cfg.leader_state;
        leader_encoder.emplace(plant, cfg.comm, leader_id, cfg.leader_estimate, Vector::Zero(m),
                               cfg.mode);
        for (std::size_t i = 0; i < agents; ++i) {
            if (tracking->leader_weights[i] > 0.0) {
                leader_decoders.emplace(i, Decoder(plant, cfg.comm, leader_id, cfg.leader_estimate,
                                                   Vector::Zero(m), cfg.mode));
            }
        }
    }
    trace.channels = decoders.size() + leader_decoders.size();

    std::vector<Vector> x = cfg.initial_states;
    std::vector<Vector> u(agents);

    auto compute_controls = [&]() {
        for (std::size_t i = 0; i < agents; ++i) {
            std::map<std::size_t, Vector> neighbors;
            for (std::size_t j : net.neighbors(i)) neighbors.emplace(j, decoders.at({j, i}).state().x_hat);
            LawExtras extras;
            extras.own_state = &x[i];
            if (auto it = leader_decoders.find(i); it != leader_decoders.end()) {
                extras.leader_estimate = &it->second.state().x_hat;
            }
            u[i] = control_input(cfg.law, net, i, encoders[i].state().x_hat, neighbors, extras);
        }
    };

    auto snapshot = [&](std::uint64_t t, Vector quant_error, Vector control_quant_error,
                        std::size_t saturations) {
        TraceStep s;
        s.t = t;
        s.x = stack(x);
        std::vector<Vector> xh, uh;
        for (const auto& enc : encoders) {
            xh.push_back(enc.state().x_hat);
            uh.push_back(enc.state().u_hat);
        }
        s.x_hat = stack(xh);
        s.u = stack(u);
        s.u_hat = stack(uh);
        s.e = s.x - s.x_hat;
        s.h = s.u - s.u_hat;
        s.x_bar = consensus_component(s.x, spec.pi, n);
        s.delta = s.x - s.x_bar;
        s.quant_error = std::move(quant_error);
        s.control_quant_error = std::move(control_quant_error);
        s.saturations = saturations;
        return s;
    };

    compute_controls();
    Recorder recorder(trace, cfg, stack(x));
    recorder.record(snapshot(0, Vector::Zero(static_cast<Eigen::Index>(agents) * p),
                             Vector::Zero(static_cast<Eigen::Index>(agents) * m), 0),
                    true);

    const bool quantized = cfg.mode == CodecMode::quantized;
    for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
        if (quantized && encoders.front().state().scale < kScaleUnderflow) {
            trace.status = SimStatus::scaling_underflow;
            break;
        }
        std::size_t tick_saturations = 0;
        auto note_saturation = [&](std::size_t agent, bool control, const Vector& scaled,
                                   const QuantizerSpec& q) {
            const double limit = (static_cast<double>(q.levels) + 0.5) * q.step;
            for (Eigen::Index k = 0; k < scaled.size(); ++k) {
                if (std::abs(scaled(k)) > limit) {
                    trace.saturations.push_back(
                        {t, agent, control, static_cast<std::size_t>(k), std::abs(scaled(k))});
                    ++tick_saturations;
                }
            }
        };

        // (1)-(2) state symbols from y(t-1), estimates advance to xhat(t).
        std::vector<Vector> errs(agents);
        for (std::size_t j = 0; j < agents; ++j) {
            StateEmission em = encoders[j].emit_state_symbol(plant.c * x[j]);
            if (em.saturated > 0) note_saturation(j, false, em.scaled_innovation, cfg.comm.state_quantizer());
            errs[j] = em.error;
            trace.max_quant_error = std::max(trace.max_quant_error, em.error.cwiseAbs().maxCoeff());
        }
        if (has_leader) {
            StateEmission em = leader_encoder->emit_state_symbol(plant.c * leader_x);
            if (em.saturated > 0) {
                note_saturation(agents, false, em.scaled_innovation, cfg.comm.state_quantizer());
            }
        }
        for (auto& [key, dec] : decoders) dec.apply_state(encoders[key.first].frame());
        for (auto& [i, dec] : leader_decoders) dec.apply_state(leader_encoder->frame());

        // Plants advance with u(t-1).
        for (std::size_t j = 0; j < agents; ++j) x[j] = plant.a * x[j] + plant.b * u[j];
        if (has_leader) {
            leader_x = plant.a * leader_x;
            trace.leader_states.push_back(leader_x);
        }

        // (3) controls from xhat(t); (4)-(5) control symbols, uhat(t).
        compute_controls();
        std::vector<Vector> uerrs(agents);
        for (std::size_t j = 0; j < agents; ++j) {
            ControlEmission em = encoders[j].emit_control_symbol(u[j]);
            if (em.saturated > 0) note_saturation(j, true, em.scaled_innovation, cfg.comm.control_quantizer());
            uerrs[j] = em.error;
            trace.max_control_quant_error =
                std::max(trace.max_control_quant_error, em.error.cwiseAbs().maxCoeff());
        }
        if (has_leader) leader_encoder->emit_control_symbol(Vector::Zero(m));
        for (auto& [key, dec] : decoders) {
            dec.apply_control(encoders[key.first].frame());
            const CodecState& enc = encoders[key.first].state();
            if (!(dec.state().x_hat == enc.x_hat) || !(dec.state().u_hat == enc.u_hat)) {
                ++trace.decoder_mismatches;
            }
        }
        for (auto& [i, dec] : leader_decoders) {
            dec.apply_control(leader_encoder->frame());
            if (!(dec.state().x_hat == leader_encoder->state().x_hat)) ++trace.decoder_mismatches;
        }
        if (cfg.capture_frames && quantized) {
            for (const auto& enc : encoders) trace.frames.push_back(enc.frame());
            if (has_leader) trace.frames.push_back(leader_encoder->frame());
        }
        trace.total_bits += static_cast<std::uint64_t>(trace.bits_per_channel_step) * trace.channels;

        recorder.record(snapshot(t, stack(errs), stack(uerrs), tick_saturations), t == cfg.horizon);
        if (cfg.stop_on_saturation && tick_saturations > 0) {
            trace.status = SimStatus::stopped_on_saturation;
            break;
        }
    }
    recorder.finish();
    return trace;
}

SimTrace simulate_coupled(const SimConfig& cfg) {
    validate(cfg);
    const auto* law = std::get_if<ConsensusLaw>(&cfg.law);
    if (law == nullptr) throw ConfigError("simulate_coupled: only the consensus law is supported");
    if (cfg.mode != CodecMode::quantized) {
        throw ConfigError("simulate_coupled: only quantized mode is supported");
    }
    const LtiPlant& plant = cfg.plant;
    const auto agents = static_cast<Eigen::Index>(cfg.net.size());
    const Eigen::Index n = plant.n(), m = plant.m();
    const NetworkSpectrum spec = spectrum(cfg.net);
    SimTrace trace = empty_trace(cfg, spec);
    trace.channels = cfg.net.edges().size();

    using numerics::kron;
    const Matrix& lap = cfg.net.laplacian();
    const Matrix& k = law->k;
    const Matrix eye_n = Matrix::Identity(agents, agents);
    const Matrix a_gc = plant.a - cfg.comm.observer_gain * plant.c;
    const Matrix bk = plant.b * k;
    const Matrix j_obs = kron(eye_n, a_gc);
    const Matrix ib = kron(eye_n, plant.b);
    const Matrix ig = kron(eye_n, cfg.comm.observer_gain);
    const Matrix ic = kron(eye_n, plant.c);
    const Matrix ia = kron(eye_n, plant.a);
    const Matrix lbk = kron(lap, bk);
    const Matrix lk = kron(lap, k);
    const Matrix lap2 = lap * lap;
    const Matrix kbk = k * bk;
    const Matrix m1 = lk - kron(lap, Matrix(k * plant.a)) + kron(lap2, kbk);
    const Matrix m2 = kron(lap, Matrix(k * a_gc)) - kron(lap2, kbk) - lk;
    const Matrix m3 = Matrix::Identity(agents * m, agents * m) + kron(lap, Matrix(k * plant.b));
    const Matrix m4 = kron(lap, Matrix(k * cfg.comm.observer_gain));
    const Matrix disagreement = ia - lbk;

    const Vector x0 = stack(cfg.initial_states);
    const Vector xh0 = stack(cfg.initial_estimates);
    const Vector uh0 = stack(cfg.initial_control_estimates);
    Vector e = x0 - xh0;
    Vector h = -lk * xh0 - uh0;
    Vector x_bar = consensus_component(x0, spec.pi, n);
    Vector delta = x0 - x_bar;
    double scale = 1.0;

    auto snapshot = [&](std::uint64_t t, Vector qe, Vector cqe, std::size_t sats) {
        TraceStep s;
        s.t = t;
        s.e = e;
        s.h = h;
        s.delta = delta;
        s.x_bar = x_bar;
        s.x = delta + x_bar;
        s.x_hat = s.x - e;
        s.u = -lk * s.x_hat;
        s.u_hat = s.u - h;
        s.quant_error = std::move(qe);
        s.control_quant_error = std::move(cqe);
        s.saturations = sats;
        return s;
    };

    Recorder recorder(trace, cfg, x0);
    recorder.record(snapshot(0, Vector::Zero(agents * plant.p()), Vector::Zero(agents * m), 0), true);
    for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
        if (scale < kScaleUnderflow) {
            trace.status = SimStatus::scaling_underflow;
            break;
        }
        const Vector scaled = ic * e / scale;
        const VectorQuantOutcome qs = quantize(cfg.comm.state_quantizer(), scaled);
        const Vector& quant_error = qs.errors;
        const Vector f = (m1 * delta + m2 * e + m3 * h) / scale + m4 * quant_error;
        const VectorQuantOutcome qu = quantize(cfg.comm.control_quantizer(), f);
        const std::size_t sats = qs.saturated_count + qu.saturated_count;
        trace.max_quant_error = std::max(trace.max_quant_error, quant_error.cwiseAbs().maxCoeff());
        trace.max_control_quant_error =
            std::max(trace.max_control_quant_error, qu.errors.cwiseAbs().maxCoeff());

        Vector e_next = j_obs * e + ib * h + scale * (ig * quant_error);
        Vector delta_next = disagreement * delta + lbk * e;
        h = scale * qu.errors;
        e = std::move(e_next);
        delta = std::move(delta_next);
        x_bar = ia * x_bar;
        scale *= cfg.comm.gamma;
        trace.total_bits += static_cast<std::uint64_t>(trace.bits_per_channel_step) * trace.channels;

        recorder.record(snapshot(t, quant_error, qu.errors, sats), t == cfg.horizon);
        note_saturations(trace, t, scaled, cfg.comm.state_quantizer(), false);
        note_saturations(trace, t, f, cfg.comm.control_quantizer(), true);
        if (sats > 0 && cfg.stop_on_saturation) {
            trace.status = SimStatus::stopped_on_saturation;
            break;
        }
    }
    recorder.finish();
    return trace;
}

namespace {

bool near_half_step(const Vector& errors, double step) {
    if (!(step > 0.0)) return false;
    for (Eigen::Index k = 0; k < errors.size(); ++k) {
        if (std::abs(std::abs(errors(k)) - step / 2.0) <= 1e-9 * step) return true;
    }
    return false;
}

// Largest |a_k - b_k| / step over both symbol kinds of one tick.
double symbol_discrepancy(const TraceStep& a, const TraceStep& b, double state_step, double control_step) {
    double worst = 0.0;
    auto scan = [&](const Vector& x, const Vector& y, double step) {
        if (!(step > 0.0) || x.size() != y.size()) return;
        for (Eigen::Index k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x(k) - y(k)) / step);
    };
    scan(a.quant_error, b.quant_error, state_step);
    scan(a.control_quant_error, b.control_quant_error, control_step);
    return worst;
}

}  // namespace

TraceComparison compare_traces(const SimTrace& a, const SimTrace& b, double rel_tol,
                               double abs_floor) {
    TraceComparison out;
    bool diverged = false, tie_seen = false;
    double state_peak = 1.0;
    std::size_t ia = 0, ib = 0;
    while (ia < a.steps.size() && ib < b.steps.size()) {
        const TraceStep& sa = a.steps[ia];
        const TraceStep& sb = b.steps[ib];
        if (sa.t < sb.t) {
            ++ia;
            continue;
        }
        if (sb.t < sa.t) {
            ++ib;
            continue;
        }
        state_peak = std::max(state_peak, sa.x.norm());
        const double floor = abs_floor * state_peak;
        if (!diverged) {
            tie_seen = tie_seen || near_half_step(sa.quant_error, a.state_step) ||
                       near_half_step(sa.control_quant_error, a.control_step);
        }
        if (!out.symbol_flip_t) {
            const double gap = symbol_discrepancy(sa, sb, a.state_step, a.control_step);
            if (gap > 0.5) {
                out.symbol_flip_t = sa.t;
            } else {
                out.pre_flip_drift = std::max(out.pre_flip_drift, gap);
            }
        }
        auto check = [&](const Vector& va, const Vector& vb, const char* name) {
            const double tol = rel_tol * std::max(va.norm(), vb.norm()) + floor;
            const double ratio = (va - vb).norm() / tol;
            if (!(ratio <= 1.0) && !diverged) {
                diverged = true;
                out.first_divergence_t = sa.t;
                out.boundary_tie = tie_seen;
            }
            if (!(ratio <= out.worst_ratio)) {
                out.worst_ratio = ratio;
                out.worst_t = sa.t;
                out.worst_quantity = name;
            }
        };
        check(sa.e, sb.e, "E");
        check(sa.delta, sb.delta, "delta");
        check(sa.h, sb.h, "H");
        ++out.steps_compared;
        ++ia;
        ++ib;
    }
    out.agree = out.steps_compared > 0 && out.worst_ratio <= 1.0;
    return out;
}

Metrics compute_metrics(const SimTrace& trace, const MetricsOptions& options) {
    Metrics out;
    out.steps = trace.delta_norm.size();
    out.status = trace.status;
    out.saturation_events = trace.saturations.size();
    out.observed_w = trace.max_quant_error;
    out.observed_w_u = trace.max_control_quant_error;
    out.bits_per_channel_step = trace.bits_per_channel_step;
    out.total_bits = trace.total_bits;
    out.decoder_mismatches = trace.decoder_mismatches;
    if (!trace.delta_norm.empty()) {
        out.final_delta_norm = trace.delta_norm.back();
        const auto& last = trace.e_norm.back();
        out.final_max_e_norm = last.empty() ? 0.0 : *std::max_element(last.begin(), last.end());
        out.max_reference_deviation_final = trace.reference_deviation.back();
    }
    // Least squares on (t, log ||delta(t)||) over the window.
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t count = 0;
    const std::uint64_t end = std::min<std::uint64_t>(options.fit_end, out.steps == 0 ? 0 : out.steps - 1);
    for (std::uint64_t t = options.fit_begin; t <= end && out.steps > 0; ++t) {
        const double v = trace.delta_norm[t];
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        const double tt = static_cast<double>(t), y = std::log(v);
        st += tt;
        sy += y;
        stt += tt * tt;
        sty += tt * y;
        ++count;
    }
    out.fit_points = count;
    if (count >= 2) {
        const double c = static_cast<double>(count);
        const double slope = (c * sty - st * sy) / (c * stt - st * st);
        out.decay_rate = std::exp(slope);
    }
    return out;
}

}  // namespace qcoop
