#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "qcoop/error.hpp"
#include "qcoop/serialize.hpp"

namespace qcoop::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path.string() + ": cannot open for writing");
    out << content;
    if (!out) throw ConfigError(path.string() + ": write failed");
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError(dir + ": cannot create output directory (" + ec.message() + ")");
    return p;
}

ExperimentConfig load_with_overrides(const CommandOptions& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required for this command");
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.simulation.seed = *opts.seed;
    if (opts.horizon) cfg.simulation.horizon = *opts.horizon;
    return cfg;
}

std::string fmt(double v) { return format_double(v); }

ordered_json complex_json(Complex c) { return ordered_json::array({c.real(), c.imag()}); }

ordered_json vector_json(const Vector& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

ordered_json matrix_json(const Matrix& m) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
    return out;
}

ordered_json pbh_json(const PbhResult& r) {
    ordered_json failing = ordered_json::array();
    for (const auto& mode : r.failing) failing.push_back(complex_json(mode.eigenvalue));
    return {{"holds", r.holds}, {"failing_modes", failing}};
}

ordered_json search_json(const GainSearchResult& g) {
    return {{"found", g.found},
            {"gain", matrix_json(g.gain)},
            {"radius", g.radius},
            {"evaluations", g.evaluations},
            {"method", g.method}};
}

ordered_json comparison_json(const TraceComparison& c) {
    return {{"agree", c.agree},
            {"steps_compared", c.steps_compared},
            {"worst_ratio", c.worst_ratio},
            {"worst_t", c.worst_t},
            {"worst_quantity", c.worst_quantity},
            {"first_divergence_t", c.first_divergence_t},
            {"boundary_tie", c.boundary_tie},
            {"symbol_flip_t", c.symbol_flip_t ? ordered_json(*c.symbol_flip_t) : ordered_json(nullptr)},
            {"pre_flip_drift", c.pre_flip_drift}};
}

void write_trace_outputs(const fs::path& dir, const SimTrace& trace, const ExperimentConfig& cfg,
                         const std::string& format, const std::string& title) {
    if (format == "json") {
        write_file(dir / "trace.json", trace_json(trace));
    } else {
        write_file(dir / "trace.csv", trace_csv(trace));
    }
    write_file(dir / "metrics.json", metrics_json(compute_metrics(trace)));
    write_file(dir / "delta_norm.dat", delta_norm_dat(trace));
    for (std::size_t j = 0; j < trace.agents; ++j) {
        write_file(dir / ("e_norm_" + std::to_string(j + 1) + ".dat"), e_norm_dat(trace, j));
    }
    write_file(dir / "plot.gnuplot", gnuplot_script(trace.agents, title));
    // The int16 wire format bounds the alphabet.
    if (!trace.frames.empty() && cfg.comm.levels_y <= 32767 && cfg.comm.levels_u <= 32767) {
        write_bytes(dir / "frames.bin", frames_binary(trace, cfg.comm.levels_y, cfg.comm.levels_u));
        write_file(dir / "frames_index.json", frames_index_json(trace));
    }
}

void print_metrics(std::ostream& out, const Metrics& m) {
    out << "status: " << to_string(m.status) << ", steps: " << m.steps << "\n"
        << "final ||delta||: " << fmt(m.final_delta_norm) << ", final max_j ||E_j||: " << fmt(m.final_max_e_norm)
        << "\n"
        << "decay rate of ||delta|| (fit over " << m.fit_points << " points): " << fmt(m.decay_rate) << "\n"
        << "saturation events: " << m.saturation_events << ", observed W: " << fmt(m.observed_w)
        << ", observed W_u: " << fmt(m.observed_w_u) << "\n"
        << "bits per channel step: " << m.bits_per_channel_step << ", total bits: " << m.total_bits
        << ", decoder mismatches: " << m.decoder_mismatches << "\n";
}

}  // namespace

int run_guarded(const std::function<int()>& command, std::ostream& err) {
    try {
        return command();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const PreconditionError& e) {
        err << "inapplicable: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailed;
    }
}

int cmd_analyze(const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = load_with_overrides(opts);
    const fs::path dir = prepare_out(opts.out_dir);
    const NetworkSpectrum spec = spectrum(cfg.net);
    const bool tree = has_spanning_tree(cfg.net, spec);
    const PbhResult det = check_detectability(cfg.plant);
    const PbhResult stab = check_stabilizability(cfg.plant);

    ordered_json j;
    j["plant"] = {{"spectral_radius", numerics::spectral_radius(cfg.plant.a)},
                  {"detectable", pbh_json(det)},
                  {"stabilizable", pbh_json(stab)}};
    ordered_json eig = ordered_json::array();
    for (Complex l : spec.eigenvalues) eig.push_back(complex_json(l));
    j["graph"] = {{"agents", cfg.agents},
                  {"laplacian_eigenvalues", eig},
                  {"pi", vector_json(spec.pi)},
                  {"pi_ambiguous", spec.pi_ambiguous},
                  {"spanning_tree", tree},
                  {"undirected", cfg.net.is_undirected()}};

    out << "detectable: " << (det.holds ? "yes" : "no") << "\n"
        << "stabilizable: " << (stab.holds ? "yes" : "no") << "\n"
        << "spanning tree: " << (tree ? "yes" : "no") << "\n"
        << "laplacian eigenvalues:";
    for (Complex l : spec.eigenvalues) {
        out << " " << fmt(l.real());
        if (l.imag() != 0.0) out << (l.imag() > 0 ? "+" : "") << fmt(l.imag()) << "i";
    }
    out << "\npi:";
    for (Eigen::Index k = 0; k < spec.pi.size(); ++k) out << " " << fmt(spec.pi(k));
    out << "\n";

    const auto* consensus = std::get_if<ConsensusLaw>(&cfg.law);
    if (consensus != nullptr && !cfg.k_auto) {
        const A1Result a1 = check_a1(cfg.plant, spec, consensus->k);
        j["a1"] = {{"holds", a1.holds}, {"worst_radius", a1.worst_radius}, {"radii", a1.radii}};
        out << "A1 for the given K: " << (a1.holds ? "holds" : "fails") << ", worst radius "
            << fmt(a1.worst_radius) << "\n";
    }
    if (!spec.lambda2_nonzero) {
        j["a1_note"] = "lambda_2 = 0: A1 fails for every K when rho(A) >= 1";
        out << "A1: lambda_2 = 0, so A1 fails for every K when rho(A) >= 1\n";
    }
    if (cfg.plant.m() == 1) {
        const A1PrimeResult a1p = check_a1_prime(cfg.plant, spec);
        j["a1_prime"] = {{"holds", a1p.holds}, {"stabilizable", a1p.stabilizable}, {"lhs", a1p.lhs},
                         {"rhs", a1p.rhs}, {"omega", a1p.omega}};
        out << "A1' (single input): " << (a1p.holds ? "holds" : "fails") << ", lhs " << fmt(a1p.lhs) << ", rhs "
            << fmt(a1p.rhs) << "\n";
    }
    if (!cfg.g_auto) {
        const double rho = numerics::spectral_radius(Matrix(cfg.plant.a - cfg.comm.observer_gain * cfg.plant.c));
        j["observer"] = {{"spectral_radius", rho}, {"schur", rho < 1.0}};
        out << "rho(A - G C): " << fmt(rho) << "\n";
    }
    j["law"] = {{"type", std::string(law_name(cfg.law))}, {"sizing_guarantee", has_sizing_guarantee(cfg.law)}};
    write_file(dir / "analysis.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_synthesize(const CommandOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load_with_overrides(opts);
    const fs::path dir = prepare_out(opts.out_dir);
    const Resolution res = resolve(cfg, /*always_size=*/true);

    ordered_json j;
    j["resolved_fields"] = res.resolved;
    if (res.k_search) j["k_search"] = search_json(*res.k_search);
    if (res.g_search) j["g_search"] = search_json(*res.g_search);
    if (res.sizing) j["sizing"] = ordered_json::parse(sizing_json(*res.sizing));
    if (res.level_search) {
        j["level_search"] = {{"found", res.level_search->found},
                             {"levels_y", res.level_search->levels_y},
                             {"levels_u", res.level_search->levels_u},
                             {"simulations", res.level_search->simulations}};
    }
    write_file(dir / "synthesis.json", j.dump(2) + "\n");
    write_file(dir / "resolved_config.json", config_to_json(cfg));

    for (const auto& field : res.resolved) out << "resolved " << field << "\n";
    if (res.sizing) {
        const SizingResult& s = *res.sizing;
        out << "gamma: " << fmt(s.gamma) << " (eta " << fmt(s.eta) << ", eta_bar1 " << fmt(s.eta_bar1) << ")\n"
            << "state threshold L > " << fmt(s.l_threshold) << ", control threshold L_u > " << fmt(s.l_u_threshold)
            << "\n"
            << "sufficient levels: L = "
            << (s.levels_y ? std::to_string(*s.levels_y) : std::string("overflow")) << ", L_u = "
            << (s.levels_u ? std::to_string(*s.levels_u) : std::string("overflow")) << "\n"
            << "bounds: ||E(t)|| <= " << fmt(s.e_bound) << " gamma^t, ||delta(t)|| <= " << fmt(s.delta_bound)
            << " gamma^t\n";
        if (s.stable_plant_case) out << "stable plant with K = 0, G = 0\n";
    } else {
        out << "no sizing: the law is not the consensus law\n";
    }
    out << "configured levels: L = " << cfg.comm.levels_y << ", L_u = " << cfg.comm.levels_u << "\n";
    return kExitOk;
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load_with_overrides(opts);
    if (opts.format != "csv" && opts.format != "json") throw ConfigError("--format must be csv or json");
    const fs::path dir = prepare_out(opts.out_dir);
    const Resolution res = resolve(cfg);
    for (const auto& field : res.resolved) out << "resolved " << field << "\n";
    write_file(dir / "resolved_config.json", config_to_json(cfg));

    const SimConfig sim = make_sim_config(cfg, cfg.simulation.seed);
    const SimTrace trace = simulate_primitive(sim);
    write_trace_outputs(dir, trace, cfg, opts.format, cfg.name.empty() ? "simulation" : cfg.name);
    print_metrics(out, compute_metrics(trace));

    if (opts.oracle) {
        const SimTrace coupled = simulate_coupled(sim);
        const TraceComparison cmp = compare_traces(trace, coupled);
        write_file(dir / "oracle.json", comparison_json(cmp).dump(2) + "\n");
        out << "oracle: " << (cmp.agree ? "agree" : "MISMATCH") << " over " << cmp.steps_compared
            << " steps, worst ratio " << fmt(cmp.worst_ratio) << " (" << cmp.worst_quantity << " at t = " << cmp.worst_t
            << ")\n";
        if (!cmp.agree) {
            if (cmp.boundary_tie) {
                out << "oracle: a quantizer input sat on a bin edge at or before t = " << cmp.first_divergence_t
                    << "; the two routes rounded it to different bins\n";
            }
            if (cmp.symbol_flip_t) {
                out << "oracle: first differing symbol at t = " << *cmp.symbol_flip_t
                    << " after a quantizer-input drift of " << fmt(cmp.pre_flip_drift) << " steps\n";
            }
            return kExitOracleMismatch;
        }
    }
    return kExitOk;
}

int cmd_witness(const CommandOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = load_with_overrides(opts);
    const fs::path dir = prepare_out(opts.out_dir);
    if (cfg.has_auto()) resolve(cfg);
    WitnessOptions wopts = cfg.witness;
    if (opts.horizon) wopts.horizon = *opts.horizon;
    SimConfig base = make_sim_config(cfg, cfg.simulation.seed);

    WitnessReport report;
    if (opts.witness_kind == "undetectable") {
        report = undetectable_witness(base, wopts);
    } else if (opts.witness_kind == "unstabilizable") {
        report = unstabilizable_witness(base, wopts);
    } else if (opts.witness_kind == "schur-growth") {
        report = schur_growth_witness(base, wopts);
    } else {
        throw ConfigError("--kind must be undetectable, unstabilizable or schur-growth");
    }
    write_file(dir / "witness.json", witness_json(report));
    write_file(dir / "witness.dat", witness_dat(report));
    write_file(dir / "witness.gnuplot",
               "set terminal pngcairo size 900,600\nset logscale y\nset xlabel 't'\nset output 'witness.png'\n"
               "set title '" + std::string(to_string(report.kind)) + " witness'\n"
               "plot 'witness.dat' using 1:2 with lines title 'observed', \\\n"
               "     'witness.dat' using 1:3 with lines dashtype 2 title 'envelope'\n");
    out << "witness: " << to_string(report.kind) << "\n"
        << "quantity: " << report.quantity << "\n"
        << "horizon: " << (report.observed.empty() ? 0 : report.observed.size() - 1) << " ticks\n"
        << "initial balls: states " << fmt(report.state_ball) << ", estimates " << fmt(report.estimate_ball)
        << ", control estimates " << fmt(report.control_ball) << "\n";
    if (report.kind == WitnessKind::undetectable) {
        out << "nonzero symbols: " << report.nonzero_symbols << ", estimates identically zero: "
            << (report.estimates_identically_zero ? "yes" : "no") << "\n";
    } else if (report.kind == WitnessKind::unstabilizable) {
        out << "recursion residual: " << fmt(report.recursion_residual) << "\n";
    } else {
        out << "a = " << fmt(report.a_const) << ", |lambda_1| = " << fmt(report.block_radius) << "\n";
    }
    for (const auto& note : report.notes) out << "note: " << note << "\n";
    out << "confirmed: " << (report.confirmed ? "yes" : "no") << "\n";
    return report.confirmed ? kExitOk : kExitFailed;
}

const std::string& reference_config_json() {
    static const std::string text = R"({
  "schema_version": 1,
  "name": "four-agent reference",
  "plant": {
    "A": [[1.0, 0.1], [0.0, 0.5]],
    "B": [[1.0], [1.0]],
    "C": [[1.0, 0.0]]
  },
  "network": {
    "agents": 4,
    "edges": [
      {"from": 1, "to": 2},
      {"from": 2, "to": 1},
      {"from": 1, "to": 3},
      {"from": 2, "to": 4}
    ]
  },
  "law": {"type": "consensus", "K": [[0.2, 0.0]]},
  "comm": {"gamma": 0.95, "alpha": 1.0, "alpha_u": 1.0, "levels_y": 20, "levels_u": 20, "G": [[0.5], [0.0]]},
  "sizing": {"c_x": 5.0, "c_xhat": 0.0, "c_uhat": 0.0},
  "simulation": {
    "horizon": 500,
    "seed": 7,
    "initial_states": {"uniform": [0.0, 5.0]},
    "initial_estimates": "zero",
    "initial_control_estimates": "zero"
  }
}
)";
    return text;
}

ReferenceRun run_reference(const ExperimentConfig& cfg, std::uint64_t seed, bool with_oracle) {
    ReferenceRun run;
    run.seed = seed;
    const SimConfig sim = make_sim_config(cfg, seed);
    run.trace = simulate_primitive(sim);
    run.metrics = compute_metrics(run.trace);
    const Metrics& m = run.metrics;
    auto check = [&](std::string name, bool pass, double value, double threshold) {
        run.checks.push_back({std::move(name), pass, value, threshold});
    };
    check("final_delta_norm", m.final_delta_norm < kReferenceConvergence, m.final_delta_norm, kReferenceConvergence);
    check("final_max_e_norm", m.final_max_e_norm < kReferenceConvergence, m.final_max_e_norm, kReferenceConvergence);
    check("saturation_events", m.saturation_events == 0, static_cast<double>(m.saturation_events), 0.0);
    check("decay_rate", m.fit_points > 1 && m.decay_rate <= kReferenceDecayRate, m.decay_rate, kReferenceDecayRate);
    const bool has_limit = run.trace.reference_deviation.size() > kReferenceLimitTick;
    const double dev = has_limit ? run.trace.reference_deviation[kReferenceLimitTick]
                                 : std::numeric_limits<double>::quiet_NaN();
    check("limit_deviation_t200", has_limit && dev < kReferenceLimitDeviation, dev, kReferenceLimitDeviation);
    check("decoder_mismatches", m.decoder_mismatches == 0, static_cast<double>(m.decoder_mismatches), 0.0);
    if (with_oracle) {
        SimConfig short_sim = sim;
        short_sim.horizon = kOracleHorizon;
        short_sim.capture_frames = false;
        run.oracle = compare_traces(simulate_primitive(short_sim), simulate_coupled(short_sim));
        check("oracle_worst_ratio", run.oracle->agree, run.oracle->worst_ratio, 1.0);
    }
    run.pass = true;
    for (const auto& c : run.checks) run.pass = run.pass && c.pass;
    return run;
}

int cmd_reproduce_paper(const CommandOptions& opts, std::ostream& out) {
    ExperimentConfig cfg = parse_config(reference_config_json(), "<reference>");
    if (opts.horizon) cfg.simulation.horizon = *opts.horizon;
    if (opts.levels) {
        if (*opts.levels < 1) throw ConfigError("--levels must be at least 1");
        cfg.comm.levels_y = cfg.comm.levels_u = *opts.levels;
    }
    if (opts.runs == 0) throw ConfigError("--runs must be at least 1");
    if (opts.format != "csv" && opts.format != "json") throw ConfigError("--format must be csv or json");
    const std::uint64_t seed = opts.seed.value_or(cfg.simulation.seed);
    cfg.simulation.seed = seed;
    const fs::path dir = prepare_out(opts.out_dir);
    write_file(dir / "resolved_config.json", config_to_json(cfg));

    ordered_json runs = ordered_json::array();
    std::uint64_t passed = 0;
    for (std::uint64_t r = 0; r < opts.runs; ++r) {
        const ReferenceRun run = run_reference(cfg, seed + r, opts.oracle);
        if (r == 0) write_trace_outputs(dir, run.trace, cfg, opts.format, cfg.name);
        ordered_json checks = ordered_json::array();
        for (const auto& c : run.checks) {
            checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", format_double(c.value)},
                              {"threshold", format_double(c.threshold)}});
        }
        ordered_json entry{{"seed", run.seed}, {"pass", run.pass}, {"checks", checks}};
        if (run.oracle) entry["oracle"] = comparison_json(*run.oracle);
        runs.push_back(std::move(entry));
        passed += run.pass;
        if (!run.pass || opts.runs == 1) {
            out << "seed " << run.seed << ": " << (run.pass ? "PASS" : "FAIL") << "\n";
            for (const auto& c : run.checks) {
                out << "  " << (c.pass ? "ok  " : "FAIL") << " " << c.name << " = " << fmt(c.value) << " (threshold "
                    << fmt(c.threshold) << ")\n";
            }
        }
    }
    ordered_json summary;
    summary["runs"] = opts.runs;
    summary["passed"] = passed;
    summary["bits_per_channel_step"] = bits_per_channel_step(cfg.comm, cfg.plant);
    summary["results"] = runs;
    write_file(dir / "reproduce_summary.json", summary.dump(2) + "\n");
    out << "summary: " << passed << "/" << opts.runs << " runs pass; " << bits_per_channel_step(cfg.comm, cfg.plant)
        << " bits per channel step\n";
    return passed == opts.runs ? kExitOk : kExitFailed;
}

}  // namespace qcoop::app
