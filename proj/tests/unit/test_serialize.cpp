#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "qcoop/codec.hpp"
#include "qcoop/serialize.hpp"
#include "support/generators.hpp"

namespace qcoop {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    return out;
}

std::vector<std::string> lines(const std::string& text) { return split(text, '\n'); }

SimTrace reference_trace(std::uint64_t horizon, std::uint64_t stride = 1) {
    testing::Gen gen(211);
    SimConfig cfg = testing::reference_config(gen, horizon);
    cfg.stride = stride;
    cfg.capture_frames = true;
    return simulate_primitive(cfg);
}

TEST(FormatDouble, RoundTripsAndSpellsNonFinite) {
    testing::Gen gen(223);
    for (int i = 0; i < 2000; ++i) {
        const double v = gen.uniform(-1.0, 1.0) * std::pow(10.0, gen.integer(-300, 300));
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(TraceCsv, HeaderAndRows) {
    const SimTrace trace = reference_trace(20);
    const auto rows = lines(trace_csv(trace));
    const auto header = split(rows.at(0), ',');
    std::vector<std::string> want{"t"};
    for (int i = 1; i <= 4; ++i)
        for (int k = 1; k <= 2; ++k) want.push_back("x" + std::to_string(i) + "_" + std::to_string(k));
    for (int j = 1; j <= 4; ++j)
        for (int k = 1; k <= 2; ++k) want.push_back("E" + std::to_string(j) + "_" + std::to_string(k));
    want.push_back("delta_norm");
    for (int j = 1; j <= 4; ++j) want.push_back("Ej_norm_" + std::to_string(j));
    want.push_back("sat_count");
    EXPECT_EQ(header, want);
    ASSERT_EQ(rows.size(), trace.steps.size() + 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto cells = split(rows[r], ',');
        ASSERT_EQ(cells.size(), want.size());
        EXPECT_EQ(std::stoull(cells[0]), trace.steps[r - 1].t);
        EXPECT_EQ(std::stod(cells[17]), trace.delta_norm[trace.steps[r - 1].t]);
    }
}

TEST(TraceCsv, StrideKeepsEndpoints) {
    const SimTrace trace = reference_trace(25, 10);
    const auto rows = lines(trace_csv(trace));
    ASSERT_EQ(rows.size(), 5u);  // header, t = 0, 10, 20, 25
    EXPECT_EQ(split(rows.back(), ',')[0], "25");
}

TEST(TraceJson, MatchesCsv) {
    const SimTrace trace = reference_trace(15);
    const auto doc = nlohmann::json::parse(trace_json(trace));
    const auto rows = lines(trace_csv(trace));
    const auto header = split(rows[0], ',');
    ASSERT_EQ(doc["columns"].size(), header.size());
    for (std::size_t c = 0; c < header.size(); ++c) EXPECT_EQ(doc["columns"][c], header[c]);
    ASSERT_EQ(doc["rows"].size(), rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto cells = split(rows[r], ',');
        for (std::size_t c = 0; c < cells.size(); ++c) {
            EXPECT_EQ(doc["rows"][r - 1][c].get<double>(), std::stod(cells[c]));
        }
    }
}

TEST(DatFiles, OneLinePerTick) {
    const SimTrace trace = reference_trace(30, 7);
    const auto d = lines(delta_norm_dat(trace));
    ASSERT_EQ(d.size(), 31u);
    EXPECT_EQ(split(d[12], ' ')[0], "12");
    EXPECT_EQ(std::stod(split(d[12], ' ')[1]), trace.delta_norm[12]);
    const auto e = lines(e_norm_dat(trace, 2));
    ASSERT_EQ(e.size(), 31u);
    EXPECT_EQ(std::stod(split(e[5], ' ')[1]), trace.e_norm[5][2]);
    const std::string script = gnuplot_script(4, "run");
    EXPECT_NE(script.find("e_norm_4.dat"), std::string::npos);
    EXPECT_EQ(script.find("e_norm_5.dat"), std::string::npos);
}

TEST(Documents, MetricsSizingWitnessParse) {
    const SimTrace trace = reference_trace(60);
    const Metrics m = compute_metrics(trace);
    const auto mj = nlohmann::json::parse(metrics_json(m));
    EXPECT_EQ(mj["steps"], m.steps);
    EXPECT_EQ(mj["bits_per_channel_step"], 12);
    EXPECT_EQ(mj["total_bits"], m.total_bits);

    SizingResult s;
    s.levels_y = 21;
    s.diagnostics.push_back({"R_initial", 2.5});
    const auto sj = nlohmann::json::parse(sizing_json(s));
    EXPECT_EQ(sj["levels_y"], 21);
    EXPECT_TRUE(sj["levels_u"].is_null());
    EXPECT_EQ(sj["diagnostics"]["R_initial"], 2.5);

    WitnessReport w;
    w.kind = WitnessKind::schur_growth;
    w.observed = {1.0, 2.0};
    w.envelope = {0.5, 1.0};
    const auto wj = nlohmann::json::parse(witness_json(w));
    EXPECT_EQ(wj["kind"], "schur-growth");
    EXPECT_TRUE(wj.contains("a_const"));
    EXPECT_FALSE(wj.contains("nonzero_symbols"));
    EXPECT_EQ(lines(witness_dat(w)).at(1), "1 2 1");
}

TEST(Frames, BinaryAndIndexAgree) {
    const SimTrace trace = reference_trace(10);
    const auto bytes = frames_binary(trace, 20, 20);
    const std::size_t size = frame_size(1, 1);
    ASSERT_EQ(trace.frames.size(), 40u);
    ASSERT_EQ(bytes.size(), 40u * size);
    const auto index = nlohmann::json::parse(frames_index_json(trace));
    EXPECT_EQ(index["count"], 40);
    EXPECT_EQ(index["frame_size"], size);
    for (std::size_t f = 0; f < trace.frames.size(); ++f) {
        const auto offset = index["frames"][f]["offset"].get<std::size_t>();
        EXPECT_EQ(index["frames"][f]["sender"].get<std::size_t>(), trace.frames[f].sender + 1u);
        const auto decoded = decode_frame(std::span<const std::uint8_t>(bytes.data() + offset, size), 1, 1, 20, 20);
        EXPECT_EQ(decoded, trace.frames[f]);
    }
}

}  // namespace
}  // namespace qcoop
