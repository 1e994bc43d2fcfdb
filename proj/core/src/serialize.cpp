#include "qcoop/serialize.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace qcoop {

namespace {

using nlohmann::ordered_json;

ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

ordered_json vec(const Vector& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(number(v(k)));
    return out;
}

ordered_json vecs(const std::vector<Vector>& vs) {
    ordered_json out = ordered_json::array();
    for (const auto& v : vs) out.push_back(vec(v));
    return out;
}

ordered_json mat(const Matrix& m) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vec(m.row(r).transpose()));
    return out;
}

ordered_json complex(Complex c) { return ordered_json::array({number(c.real()), number(c.imag())}); }

ordered_json doubles(const std::vector<double>& vs) {
    ordered_json out = ordered_json::array();
    for (double v : vs) out.push_back(number(v));
    return out;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> trace_columns(const SimTrace& trace) {
    std::vector<std::string> cols{"t"};
    const auto n = static_cast<std::size_t>(trace.n);
    for (std::size_t i = 1; i <= trace.agents; ++i)
        for (std::size_t k = 1; k <= n; ++k) cols.push_back("x" + std::to_string(i) + "_" + std::to_string(k));
    for (std::size_t j = 1; j <= trace.agents; ++j)
        for (std::size_t k = 1; k <= n; ++k) cols.push_back("E" + std::to_string(j) + "_" + std::to_string(k));
    cols.push_back("delta_norm");
    for (std::size_t j = 1; j <= trace.agents; ++j) cols.push_back("Ej_norm_" + std::to_string(j));
    cols.push_back("sat_count");
    return cols;
}

// Row values in column order; t and sat_count are exact integers.
std::vector<double> trace_row(const SimTrace& trace, const TraceStep& step) {
    std::vector<double> row{static_cast<double>(step.t)};
    row.insert(row.end(), step.x.data(), step.x.data() + step.x.size());
    row.insert(row.end(), step.e.data(), step.e.data() + step.e.size());
    row.push_back(trace.delta_norm[step.t]);
    row.insert(row.end(), trace.e_norm[step.t].begin(), trace.e_norm[step.t].end());
    row.push_back(static_cast<double>(trace.saturations_per_step[step.t]));
    return row;
}

}  // namespace

std::string trace_csv(const SimTrace& trace) {
    std::ostringstream out;
    const auto cols = trace_columns(trace);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (const auto& step : trace.steps) {
        const auto row = trace_row(trace, step);
        out << step.t;
        for (std::size_t c = 1; c + 1 < row.size(); ++c) out << ',' << format_double(row[c]);
        out << ',' << trace.saturations_per_step[step.t] << '\n';
    }
    return out.str();
}

std::string trace_json(const SimTrace& trace) {
    ordered_json j;
    j["columns"] = trace_columns(trace);
    ordered_json rows = ordered_json::array();
    for (const auto& step : trace.steps) {
        ordered_json row = ordered_json::array();
        const auto values = trace_row(trace, step);
        row.push_back(step.t);
        for (std::size_t c = 1; c + 1 < values.size(); ++c) row.push_back(number(values[c]));
        row.push_back(trace.saturations_per_step[step.t]);
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j.dump() + "\n";
}

std::string delta_norm_dat(const SimTrace& trace) {
    std::ostringstream out;
    for (std::size_t t = 0; t < trace.delta_norm.size(); ++t) {
        out << t << ' ' << format_double(trace.delta_norm[t]) << '\n';
    }
    return out.str();
}

std::string e_norm_dat(const SimTrace& trace, std::size_t channel) {
    std::ostringstream out;
    for (std::size_t t = 0; t < trace.e_norm.size(); ++t) {
        out << t << ' ' << format_double(trace.e_norm[t].at(channel)) << '\n';
    }
    return out.str();
}

std::string gnuplot_script(std::size_t agents, const std::string& title) {
    std::ostringstream out;
    out << "set terminal pngcairo size 900,600\n"
        << "set logscale y\n"
        << "set xlabel 't'\n"
        << "set format y '%.0e'\n"
        << "set output 'delta_norm.png'\n"
        << "set title '" << title << ": ||delta(t)||'\n"
        << "plot 'delta_norm.dat' using 1:2 with lines title '||delta(t)||'\n"
        << "set output 'e_norm.png'\n"
        << "set title '" << title << ": ||E_j(t)||'\n"
        << "plot";
    for (std::size_t j = 1; j <= agents; ++j) {
        out << (j > 1 ? ", \\\n     " : " ") << "'e_norm_" << j << ".dat' using 1:2 with lines title '||E_"
            << j << "(t)||'";
    }
    out << '\n';
    return out.str();
}

std::string metrics_json(const Metrics& m) {
    ordered_json j;
    j["status"] = std::string(to_string(m.status));
    j["steps"] = m.steps;
    j["decay_rate"] = number(m.decay_rate);
    j["fit_points"] = m.fit_points;
    j["final_delta_norm"] = number(m.final_delta_norm);
    j["final_max_e_norm"] = number(m.final_max_e_norm);
    j["max_reference_deviation_final"] = number(m.max_reference_deviation_final);
    j["saturation_events"] = m.saturation_events;
    j["observed_w"] = number(m.observed_w);
    j["observed_w_u"] = number(m.observed_w_u);
    j["bits_per_channel_step"] = m.bits_per_channel_step;
    j["total_bits"] = m.total_bits;
    j["decoder_mismatches"] = m.decoder_mismatches;
    return dump(j);
}

std::string sizing_json(const SizingResult& s) {
    ordered_json j;
    j["epsilon"] = number(s.epsilon);
    j["epsilon_bar1"] = number(s.epsilon_bar1);
    j["eta"] = number(s.eta);
    j["eta_bar1"] = number(s.eta_bar1);
    j["m_const"] = number(s.m_const);
    j["m_bar1"] = number(s.m_bar1);
    j["gamma"] = number(s.gamma);
    j["r_const"] = number(s.r_const);
    j["e_bound"] = number(s.e_bound);
    j["gamma_const"] = number(s.gamma_const);
    j["delta_bound"] = number(s.delta_bound);
    j["l_threshold"] = number(s.l_threshold);
    j["l_u_threshold"] = number(s.l_u_threshold);
    j["levels_y"] = s.levels_y ? ordered_json(*s.levels_y) : ordered_json(nullptr);
    j["levels_u"] = s.levels_u ? ordered_json(*s.levels_u) : ordered_json(nullptr);
    j["overflow"] = s.overflow;
    j["stable_plant_case"] = s.stable_plant_case;
    ordered_json diag = ordered_json::object();
    for (const auto& term : s.diagnostics) diag[term.name] = number(term.value);
    j["diagnostics"] = diag;
    return dump(j);
}

std::string witness_json(const WitnessReport& r) {
    ordered_json j;
    j["kind"] = std::string(to_string(r.kind));
    j["confirmed"] = r.confirmed;
    j["quantity"] = r.quantity;
    j["initial_states"] = vecs(r.initial_states);
    j["initial_estimates"] = vecs(r.initial_estimates);
    j["initial_control_estimates"] = vecs(r.initial_control_estimates);
    j["state_ball"] = number(r.state_ball);
    j["estimate_ball"] = number(r.estimate_ball);
    j["control_ball"] = number(r.control_ball);
    switch (r.kind) {
        case WitnessKind::undetectable:
            j["unobservable_start"] = vec(r.unobservable_start);
            j["nonzero_symbols"] = r.nonzero_symbols;
            j["estimates_identically_zero"] = r.estimates_identically_zero;
            j["controls_identically_zero"] = r.controls_identically_zero;
            break;
        case WitnessKind::unstabilizable:
            j["unstable_block"] = mat(r.unstable_block);
            j["laplacian_eigenvalue"] = complex(r.laplacian_eigenvalue);
            j["recursion_residual"] = number(r.recursion_residual);
            break;
        case WitnessKind::schur_growth:
            j["a_const"] = number(r.a_const);
            j["lambda1"] = complex(r.lambda1);
            j["block_radius"] = number(r.block_radius);
            break;
    }
    j["saturation_events"] = r.saturation_events;
    j["notes"] = r.notes;
    j["observed"] = doubles(r.observed);
    j["envelope"] = doubles(r.envelope);
    return dump(j);
}

std::string witness_dat(const WitnessReport& r) {
    std::ostringstream out;
    for (std::size_t t = 0; t < r.observed.size(); ++t) {
        out << t << ' ' << format_double(r.observed[t]) << ' '
            << format_double(t < r.envelope.size() ? r.envelope[t] : 0.0) << '\n';
    }
    return out.str();
}

std::vector<std::uint8_t> frames_binary(const SimTrace& trace, std::int64_t levels_y,
                                        std::int64_t levels_u) {
    std::vector<std::uint8_t> out;
    out.reserve(trace.frames.size() * frame_size(static_cast<std::size_t>(trace.p),
                                                 static_cast<std::size_t>(trace.m)));
    for (const auto& f : trace.frames) {
        const auto bytes = encode_frame(f, levels_y, levels_u);
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

std::string frames_index_json(const SimTrace& trace) {
    const std::size_t size =
        frame_size(static_cast<std::size_t>(trace.p), static_cast<std::size_t>(trace.m));
    ordered_json j;
    j["frame_size"] = size;
    j["p"] = trace.p;
    j["m"] = trace.m;
    j["count"] = trace.frames.size();
    ordered_json entries = ordered_json::array();
    std::size_t offset = 0;
    for (const auto& f : trace.frames) {
        entries.push_back(ordered_json{{"t", f.t}, {"sender", f.sender + 1}, {"offset", offset}});
        offset += size;
    }
    j["frames"] = entries;
    return dump(j);
}

}  // namespace qcoop
