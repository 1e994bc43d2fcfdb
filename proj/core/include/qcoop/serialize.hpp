#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcoop/analysis.hpp"
#include "qcoop/simulator.hpp"
#include "qcoop/witness.hpp"

namespace qcoop {

// Shortest decimal that round-trips, identical on every platform.
// Non-finite values print as "nan", "inf", "-inf".
std::string format_double(double value);

// Header: t, x<i>_<k>, E<j>_<k>, delta_norm, Ej_norm_<j>, sat_count with
// 1-based agent and component ids; one row per stored step.
std::string trace_csv(const SimTrace& trace);

// Same content as trace_csv: {"columns": [...], "rows": [[...], ...]}.
std::string trace_json(const SimTrace& trace);

// Two whitespace-separated columns "t value", one line per tick.
std::string delta_norm_dat(const SimTrace& trace);
std::string e_norm_dat(const SimTrace& trace, std::size_t channel);
// Plots delta_norm.dat and e_norm_<j>.dat (j = 1..agents) on log scale to PNG.
std::string gnuplot_script(std::size_t agents, const std::string& title);

// JSON documents (two-space indented, keys in a fixed order).
std::string metrics_json(const Metrics& metrics);
std::string sizing_json(const SizingResult& sizing);
std::string witness_json(const WitnessReport& report);
// "t observed envelope" per tick.
std::string witness_dat(const WitnessReport& report);

// Concatenated wire frames and an index with one {t, sender, offset} entry each.
std::vector<std::uint8_t> frames_binary(const SimTrace& trace, std::int64_t levels_y,
                                        std::int64_t levels_u);
std::string frames_index_json(const SimTrace& trace);

}  // namespace qcoop
