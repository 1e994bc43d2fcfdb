#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "json_locate.hpp"
#include "qcoop/error.hpp"

namespace qcoop::app {

namespace {

using nlohmann::ordered_json;
using Json = nlohmann::json;

class Reader {
public:
    Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& problem) const {
        const TextPosition pos = locate_pointer(text_, pointer);
        throw ConfigError(origin_ + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.column) +
                          ": " + (pointer.empty() ? "/" : pointer) + ": " + problem);
    }

    void only_keys(const Json& obj, const std::string& ptr, std::initializer_list<const char*> keys) const {
        if (!obj.is_object()) fail(ptr, "expected an object");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& item : obj.items()) {
            if (!allowed.count(item.key())) fail(ptr + "/" + item.key(), "unknown field");
        }
    }

    const Json& need(const Json& obj, const std::string& ptr, const char* key) const {
        if (!obj.contains(key)) fail(ptr, std::string("missing required field \"") + key + "\"");
        return obj.at(key);
    }

    static bool is_auto(const Json& j) { return j.is_string() && j.get<std::string>() == "auto"; }

    double number(const Json& j, const std::string& ptr) const {
        if (!j.is_number()) fail(ptr, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(ptr, "expected a finite number");
        return v;
    }

    double positive(const Json& j, const std::string& ptr) const {
        const double v = number(j, ptr);
        if (!(v > 0.0)) fail(ptr, "expected a positive number");
        return v;
    }

    std::int64_t integer(const Json& j, const std::string& ptr, std::int64_t min) const {
        if (!j.is_number_integer()) fail(ptr, "expected an integer");
        const std::int64_t v = j.get<std::int64_t>();
        if (v < min) fail(ptr, "expected an integer >= " + std::to_string(min));
        return v;
    }

    bool boolean(const Json& j, const std::string& ptr) const {
        if (!j.is_boolean()) fail(ptr, "expected true or false");
        return j.get<bool>();
    }

    Vector vector(const Json& j, const std::string& ptr) const {
        if (!j.is_array() || j.empty()) fail(ptr, "expected a non-empty array of numbers");
        Vector v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t k = 0; k < j.size(); ++k) {
            v(static_cast<Eigen::Index>(k)) = number(j[k], ptr + "/" + std::to_string(k));
        }
        return v;
    }

    Matrix matrix(const Json& j, const std::string& ptr) const {
        if (!j.is_array() || j.empty()) fail(ptr, "expected a non-empty array of rows");
        const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
        if (cols == 0) fail(ptr + "/0", "expected a non-empty row");
        Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < j.size(); ++r) {
            const std::string row_ptr = ptr + "/" + std::to_string(r);
            if (!j[r].is_array()) fail(row_ptr, "expected a row array");
            if (j[r].size() != cols) {
                fail(row_ptr, "row has " + std::to_string(j[r].size()) + " entries, expected " +
                                  std::to_string(cols));
            }
            for (std::size_t c = 0; c < cols; ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    number(j[r][c], row_ptr + "/" + std::to_string(c));
            }
        }
        return m;
    }

    void shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& ptr) const {
        if (m.rows() != rows || m.cols() != cols) {
            fail(ptr, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        }
    }

    std::size_t node(const Json& j, const std::string& ptr, std::size_t agents) const {
        const std::int64_t id = integer(j, ptr, 1);
        if (static_cast<std::size_t>(id) > agents) {
            fail(ptr, "node id " + std::to_string(id) + " out of range 1.." + std::to_string(agents));
        }
        return static_cast<std::size_t>(id - 1);
    }

    InitialSpec initial(const Json& j, const std::string& ptr, std::size_t agents, Eigen::Index dim) const {
        InitialSpec spec;
        if (j.is_string()) {
            if (j.get<std::string>() != "zero") fail(ptr, "expected \"zero\", {\"uniform\": [lo, hi]} or explicit vectors");
            return spec;
        }
        if (j.is_object()) {
            only_keys(j, ptr, {"uniform"});
            const Json& box = need(j, ptr, "uniform");
            const std::string box_ptr = ptr + "/uniform";
            if (!box.is_array() || box.size() != 2) fail(box_ptr, "expected [lo, hi]");
            spec.kind = InitialSpec::Kind::uniform;
            spec.lo = number(box[0], box_ptr + "/0");
            spec.hi = number(box[1], box_ptr + "/1");
            if (!(spec.lo <= spec.hi)) fail(box_ptr, "expected lo <= hi");
            return spec;
        }
        if (!j.is_array() || j.size() != agents) {
            fail(ptr, "expected " + std::to_string(agents) + " vectors, one per agent");
        }
        spec.kind = InitialSpec::Kind::given;
        for (std::size_t i = 0; i < agents; ++i) {
            const std::string item = ptr + "/" + std::to_string(i);
            Vector v = vector(j[i], item);
            if (v.size() != dim) fail(item, "expected " + std::to_string(dim) + " components");
            spec.values.push_back(std::move(v));
        }
        return spec;
    }

private:
    const std::string& text_;
    std::string origin_;
};

void parse_law(const Reader& rd, const Json& j, ExperimentConfig& cfg) {
    const std::string ptr = "/law";
    const Json& type_node = rd.need(j, ptr, "type");
    if (!type_node.is_string()) rd.fail(ptr + "/type", "expected a string");
    const std::string type = type_node.get<std::string>();
    const Eigen::Index n = cfg.plant.n(), m = cfg.plant.m();
    auto gain = [&](const char* key) {
        const std::string p = ptr + "/" + key;
        Matrix k = rd.matrix(rd.need(j, ptr, key), p);
        rd.shape(k, m, n, p);
        return k;
    };
    if (type == "consensus") {
        rd.only_keys(j, ptr, {"type", "K"});
        const Json& k = rd.need(j, ptr, "K");
        if (Reader::is_auto(k)) {
            cfg.k_auto = true;
            cfg.law = ConsensusLaw{Matrix::Zero(m, n)};
        } else {
            cfg.law = ConsensusLaw{gain("K")};
        }
    } else if (type == "formation") {
        rd.only_keys(j, ptr, {"type", "K", "offsets"});
        FormationLaw law{gain("K"), {}};
        if (j.contains("offsets")) {
            const Json& offs = j.at("offsets");
            if (!offs.is_array()) rd.fail(ptr + "/offsets", "expected an array");
            for (std::size_t k = 0; k < offs.size(); ++k) {
                const std::string p = ptr + "/offsets/" + std::to_string(k);
                rd.only_keys(offs[k], p, {"from", "to", "b"});
                const std::size_t from = rd.node(rd.need(offs[k], p, "from"), p + "/from", cfg.agents);
                const std::size_t to = rd.node(rd.need(offs[k], p, "to"), p + "/to", cfg.agents);
                Vector b = rd.vector(rd.need(offs[k], p, "b"), p + "/b");
                if (b.size() != n) rd.fail(p + "/b", "expected " + std::to_string(n) + " components");
                law.offsets[{from, to}] = std::move(b);
            }
        }
        cfg.law = std::move(law);
    } else if (type == "tracking") {
        rd.only_keys(j, ptr, {"type", "K1", "K2", "leader_weights", "leader_state", "leader_estimate"});
        TrackingLaw law{gain("K1"), gain("K2"), {}};
        const Json& w = rd.need(j, ptr, "leader_weights");
        const Vector weights = rd.vector(w, ptr + "/leader_weights");
        if (static_cast<std::size_t>(weights.size()) != cfg.agents) {
            rd.fail(ptr + "/leader_weights", "expected one weight per agent");
        }
        law.leader_weights.assign(weights.data(), weights.data() + weights.size());
        cfg.leader_state = rd.vector(rd.need(j, ptr, "leader_state"), ptr + "/leader_state");
        if (cfg.leader_state.size() != n) rd.fail(ptr + "/leader_state", "expected n components");
        cfg.leader_estimate = j.contains("leader_estimate")
                                  ? rd.vector(j.at("leader_estimate"), ptr + "/leader_estimate")
                                  : Vector(Vector::Zero(n));
        if (cfg.leader_estimate.size() != n) rd.fail(ptr + "/leader_estimate", "expected n components");
        cfg.law = std::move(law);
    } else if (type == "mixed") {
        rd.only_keys(j, ptr, {"type", "K_local", "K_coop"});
        cfg.law = MixedLaw{gain("K_local"), gain("K_coop")};
    } else {
        rd.fail(ptr + "/type", "unknown law \"" + type + "\" (consensus, formation, tracking, mixed)");
    }
    try {
        validate(cfg.law, cfg.plant, cfg.net);
    } catch (const ConfigError& e) {
        rd.fail(ptr, e.what());
    }
}

void parse_comm(const Reader& rd, const Json& j, ExperimentConfig& cfg) {
    const std::string ptr = "/comm";
    rd.only_keys(j, ptr, {"gamma", "alpha", "alpha_u", "levels_y", "levels_u", "G"});
    const Json& gamma = rd.need(j, ptr, "gamma");
    if (Reader::is_auto(gamma)) {
        cfg.gamma_auto = true;
        cfg.comm.gamma = 0.5;
    } else {
        cfg.comm.gamma = rd.number(gamma, ptr + "/gamma");
        if (!(cfg.comm.gamma > 0.0 && cfg.comm.gamma < 1.0)) rd.fail(ptr + "/gamma", "expected 0 < gamma < 1");
    }
    for (auto [key, target] : {std::pair{"alpha", &cfg.comm.alpha}, std::pair{"alpha_u", &cfg.comm.alpha_u}}) {
        const std::string p = ptr + "/" + key;
        *target = j.contains(key) ? rd.positive(j.at(key), p) : 1.0;
        if (*target > 1.0) rd.fail(p, "quantizer step must lie in (0, 1]");
    }
    for (auto [key, target, flag] : {std::tuple{"levels_y", &cfg.comm.levels_y, &cfg.levels_y_auto},
                                     std::tuple{"levels_u", &cfg.comm.levels_u, &cfg.levels_u_auto}}) {
        const Json& node = rd.need(j, ptr, key);
        if (Reader::is_auto(node)) {
            *flag = true;
            *target = 1;
        } else {
            *target = rd.integer(node, ptr + "/" + key, 1);
        }
    }
    const Json& g = rd.need(j, ptr, "G");
    if (Reader::is_auto(g)) {
        cfg.g_auto = true;
        cfg.comm.observer_gain = Matrix::Zero(cfg.plant.n(), cfg.plant.p());
    } else {
        cfg.comm.observer_gain = rd.matrix(g, ptr + "/G");
        rd.shape(cfg.comm.observer_gain, cfg.plant.n(), cfg.plant.p(), ptr + "/G");
    }
}

std::optional<double> optional_number(const Reader& rd, const Json& j, const std::string& ptr, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return rd.number(j.at(key), ptr + "/" + key);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const TextPosition pos = position_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError(origin + ":" + std::to_string(pos.line) + ":" + std::to_string(pos.column) +
                          ": invalid JSON (" + e.what() + ")");
    }
    const Reader rd(text, origin);
    rd.only_keys(root, "", {"schema_version", "name", "plant", "network", "law", "comm", "sizing", "simulation", "witness"});
    ExperimentConfig cfg;
    cfg.schema_version = static_cast<int>(rd.integer(rd.need(root, "", "schema_version"), "/schema_version", 1));
    if (cfg.schema_version != kSchemaVersion) {
        rd.fail("/schema_version", "unsupported schema version " + std::to_string(cfg.schema_version) +
                                       " (expected " + std::to_string(kSchemaVersion) + ")");
    }
    if (root.contains("name")) {
        if (!root["name"].is_string()) rd.fail("/name", "expected a string");
        cfg.name = root["name"].get<std::string>();
    }

    const Json& plant = rd.need(root, "", "plant");
    rd.only_keys(plant, "/plant", {"A", "B", "C"});
    cfg.plant.a = rd.matrix(rd.need(plant, "/plant", "A"), "/plant/A");
    cfg.plant.b = rd.matrix(rd.need(plant, "/plant", "B"), "/plant/B");
    cfg.plant.c = rd.matrix(rd.need(plant, "/plant", "C"), "/plant/C");
    const Eigen::Index n = cfg.plant.a.rows();
    rd.shape(cfg.plant.a, n, n, "/plant/A");
    rd.shape(cfg.plant.b, n, cfg.plant.b.cols(), "/plant/B");
    rd.shape(cfg.plant.c, cfg.plant.c.rows(), n, "/plant/C");

    const Json& net = rd.need(root, "", "network");
    rd.only_keys(net, "/network", {"agents", "edges"});
    cfg.agents = static_cast<std::size_t>(rd.integer(rd.need(net, "/network", "agents"), "/network/agents", 1));
    const Json& edges = rd.need(net, "/network", "edges");
    if (!edges.is_array()) rd.fail("/network/edges", "expected an array");
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const std::string p = "/network/edges/" + std::to_string(k);
        const Json& e = edges[k];
        rd.only_keys(e, p, {"from", "to", "weight"});
        Edge edge;
        edge.from = rd.node(rd.need(e, p, "from"), p + "/from", cfg.agents);
        edge.to = rd.node(rd.need(e, p, "to"), p + "/to", cfg.agents);
        edge.weight = e.contains("weight") ? rd.positive(e.at("weight"), p + "/weight") : 1.0;
        cfg.edges.push_back(edge);
    }
    try {
        cfg.net = Network::build(cfg.agents, cfg.edges);
    } catch (const ConfigError& e) {
        rd.fail("/network/edges", e.what());
    }

    parse_law(rd, rd.need(root, "", "law"), cfg);
    parse_comm(rd, rd.need(root, "", "comm"), cfg);

    if (root.contains("sizing")) {
        const Json& s = root["sizing"];
        const std::string p = "/sizing";
        rd.only_keys(s, p, {"c_x", "c_xhat", "c_uhat", "epsilon", "epsilon_bar1", "empirical", "trials",
                            "search_horizon", "search_seed", "level_cap", "gain_budget", "gain_seed"});
        cfg.sizing.c_x = optional_number(rd, s, p, "c_x");
        cfg.sizing.c_xhat = optional_number(rd, s, p, "c_xhat");
        cfg.sizing.c_uhat = optional_number(rd, s, p, "c_uhat");
        cfg.sizing.epsilon = optional_number(rd, s, p, "epsilon");
        cfg.sizing.epsilon_bar1 = optional_number(rd, s, p, "epsilon_bar1");
        if (s.contains("empirical")) cfg.sizing.empirical = rd.boolean(s["empirical"], p + "/empirical");
        if (s.contains("trials")) cfg.sizing.search.trials = static_cast<std::uint64_t>(rd.integer(s["trials"], p + "/trials", 1));
        if (s.contains("search_horizon")) cfg.sizing.search.horizon = static_cast<std::uint64_t>(rd.integer(s["search_horizon"], p + "/search_horizon", 1));
        if (s.contains("search_seed")) cfg.sizing.search.seed = static_cast<std::uint64_t>(rd.integer(s["search_seed"], p + "/search_seed", 0));
        if (s.contains("level_cap")) cfg.sizing.search.cap = rd.integer(s["level_cap"], p + "/level_cap", 1);
        if (s.contains("gain_budget")) cfg.sizing.gains.budget = static_cast<std::uint64_t>(rd.integer(s["gain_budget"], p + "/gain_budget", 1));
        if (s.contains("gain_seed")) cfg.sizing.gains.seed = static_cast<std::uint64_t>(rd.integer(s["gain_seed"], p + "/gain_seed", 0));
    }

    if (root.contains("simulation")) {
        const Json& s = root["simulation"];
        const std::string p = "/simulation";
        rd.only_keys(s, p, {"horizon", "seed", "mode", "stride", "capture_frames", "initial_states",
                            "initial_estimates", "initial_control_estimates"});
        auto& sim = cfg.simulation;
        if (s.contains("horizon")) sim.horizon = static_cast<std::uint64_t>(rd.integer(s["horizon"], p + "/horizon", 1));
        if (s.contains("seed")) sim.seed = static_cast<std::uint64_t>(rd.integer(s["seed"], p + "/seed", 0));
        if (s.contains("stride")) sim.stride = static_cast<std::uint64_t>(rd.integer(s["stride"], p + "/stride", 1));
        if (s.contains("capture_frames")) sim.capture_frames = rd.boolean(s["capture_frames"], p + "/capture_frames");
        if (s.contains("mode")) {
            const Json& mode = s["mode"];
            if (mode == "quantized") sim.mode = CodecMode::quantized;
            else if (mode == "precise") sim.mode = CodecMode::precise;
            else rd.fail(p + "/mode", "expected \"quantized\" or \"precise\"");
        }
        if (s.contains("initial_states")) sim.initial_states = rd.initial(s["initial_states"], p + "/initial_states", cfg.agents, n);
        if (s.contains("initial_estimates")) sim.initial_estimates = rd.initial(s["initial_estimates"], p + "/initial_estimates", cfg.agents, n);
        if (s.contains("initial_control_estimates")) {
            sim.initial_control_estimates = rd.initial(s["initial_control_estimates"], p + "/initial_control_estimates",
                                                       cfg.agents, cfg.plant.m());
        }
    }

    if (root.contains("witness")) {
        const Json& w = root["witness"];
        const std::string p = "/witness";
        rd.only_keys(w, p, {"horizon", "gain_bound", "varrho", "gamma_gap_constant"});
        if (w.contains("horizon")) cfg.witness.horizon = static_cast<std::uint64_t>(rd.integer(w["horizon"], p + "/horizon", 1));
        if (w.contains("gain_bound") && !w["gain_bound"].is_null()) cfg.witness.gain_bound = rd.positive(w["gain_bound"], p + "/gain_bound");
        cfg.witness.varrho = optional_number(rd, w, p, "varrho");
        if (w.contains("gamma_gap_constant")) cfg.witness.gamma_gap_constant = rd.boolean(w["gamma_gap_constant"], p + "/gamma_gap_constant");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

namespace {

ordered_json to_json(const Vector& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

ordered_json to_json(const Matrix& m) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
    return out;
}

ordered_json to_json(const InitialSpec& s) {
    switch (s.kind) {
        case InitialSpec::Kind::zero: return "zero";
        case InitialSpec::Kind::uniform: return ordered_json{{"uniform", {s.lo, s.hi}}};
        case InitialSpec::Kind::given: {
            ordered_json out = ordered_json::array();
            for (const auto& v : s.values) out.push_back(to_json(v));
            return out;
        }
    }
    return nullptr;
}

ordered_json law_json(const ExperimentConfig& cfg) {
    return std::visit(
        [&](const auto& law) -> ordered_json {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, ConsensusLaw>) {
                return {{"type", "consensus"}, {"K", to_json(law.k)}};
            } else if constexpr (std::is_same_v<T, FormationLaw>) {
                ordered_json offs = ordered_json::array();
                for (const auto& [key, b] : law.offsets) {
                    offs.push_back({{"from", key.first + 1}, {"to", key.second + 1}, {"b", to_json(b)}});
                }
                return {{"type", "formation"}, {"K", to_json(law.k)}, {"offsets", offs}};
            } else if constexpr (std::is_same_v<T, TrackingLaw>) {
                return {{"type", "tracking"},
                        {"K1", to_json(law.k1)},
                        {"K2", to_json(law.k2)},
                        {"leader_weights", law.leader_weights},
                        {"leader_state", to_json(cfg.leader_state)},
                        {"leader_estimate", to_json(cfg.leader_estimate)}};
            } else {
                return {{"type", "mixed"}, {"K_local", to_json(law.k_local)}, {"K_coop", to_json(law.k_coop)}};
            }
        },
        cfg.law);
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
    if (cfg.has_auto()) throw ConfigError("config_to_json: unresolved \"auto\" fields remain");
    ordered_json j;
    j["schema_version"] = cfg.schema_version;
    j["name"] = cfg.name;
    j["plant"] = {{"A", to_json(cfg.plant.a)}, {"B", to_json(cfg.plant.b)}, {"C", to_json(cfg.plant.c)}};
    ordered_json edges = ordered_json::array();
    for (const Edge& e : cfg.edges) edges.push_back({{"from", e.from + 1}, {"to", e.to + 1}, {"weight", e.weight}});
    j["network"] = {{"agents", cfg.agents}, {"edges", edges}};
    j["law"] = law_json(cfg);
    j["comm"] = {{"gamma", cfg.comm.gamma},
                 {"alpha", cfg.comm.alpha},
                 {"alpha_u", cfg.comm.alpha_u},
                 {"levels_y", cfg.comm.levels_y},
                 {"levels_u", cfg.comm.levels_u},
                 {"G", to_json(cfg.comm.observer_gain)}};
    ordered_json sizing;
    auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
    sizing["c_x"] = opt(cfg.sizing.c_x);
    sizing["c_xhat"] = opt(cfg.sizing.c_xhat);
    sizing["c_uhat"] = opt(cfg.sizing.c_uhat);
    sizing["epsilon"] = opt(cfg.sizing.epsilon);
    sizing["epsilon_bar1"] = opt(cfg.sizing.epsilon_bar1);
    sizing["empirical"] = cfg.sizing.empirical;
    sizing["trials"] = cfg.sizing.search.trials;
    sizing["search_horizon"] = cfg.sizing.search.horizon;
    sizing["search_seed"] = cfg.sizing.search.seed;
    sizing["level_cap"] = cfg.sizing.search.cap;
    sizing["gain_budget"] = cfg.sizing.gains.budget;
    sizing["gain_seed"] = cfg.sizing.gains.seed;
    j["sizing"] = sizing;
    const auto& sim = cfg.simulation;
    j["simulation"] = {{"horizon", sim.horizon},
                       {"seed", sim.seed},
                       {"mode", sim.mode == CodecMode::quantized ? "quantized" : "precise"},
                       {"stride", sim.stride},
                       {"capture_frames", sim.capture_frames},
                       {"initial_states", to_json(sim.initial_states)},
                       {"initial_estimates", to_json(sim.initial_estimates)},
                       {"initial_control_estimates", to_json(sim.initial_control_estimates)}};
    ordered_json w;
    w["horizon"] = cfg.witness.horizon;
    w["gain_bound"] = std::isfinite(cfg.witness.gain_bound) ? ordered_json(cfg.witness.gain_bound) : ordered_json(nullptr);
    w["varrho"] = opt(cfg.witness.varrho);
    w["gamma_gap_constant"] = cfg.witness.gamma_gap_constant;
    j["witness"] = w;
    return j.dump(2) + "\n";
}

namespace {

double ball_of(const InitialSpec& s) {
    switch (s.kind) {
        case InitialSpec::Kind::zero: return 0.0;
        case InitialSpec::Kind::uniform: return std::max(std::abs(s.lo), std::abs(s.hi));
        case InitialSpec::Kind::given: {
            double r = 0.0;
            for (const auto& v : s.values) r = std::max(r, v.cwiseAbs().maxCoeff());
            return r;
        }
    }
    return 0.0;
}

void fill(const InitialSpec& s, std::mt19937_64& rng, std::vector<Vector>& out) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (s.kind) {
            case InitialSpec::Kind::zero: out[i].setZero(); break;
            case InitialSpec::Kind::given: out[i] = s.values[i]; break;
            case InitialSpec::Kind::uniform:
                for (Eigen::Index k = 0; k < out[i].size(); ++k) out[i](k) = s.lo + (s.hi - s.lo) * uniform01(rng);
                break;
        }
    }
}

}  // namespace

SizingInputs sizing_inputs(const ExperimentConfig& cfg) {
    SizingInputs in;
    in.c_x = cfg.sizing.c_x.value_or(ball_of(cfg.simulation.initial_states));
    in.c_xhat = cfg.sizing.c_xhat.value_or(ball_of(cfg.simulation.initial_estimates));
    in.c_uhat = cfg.sizing.c_uhat.value_or(ball_of(cfg.simulation.initial_control_estimates));
    in.epsilon = cfg.sizing.epsilon;
    in.epsilon_bar1 = cfg.sizing.epsilon_bar1;
    if (!cfg.gamma_auto) in.gamma = cfg.comm.gamma;
    return in;
}

InitialSampler make_sampler(const ExperimentConfig& cfg) {
    const SimulationSpec sim = cfg.simulation;
    return [sim](std::mt19937_64& rng, SimConfig& out) {
        fill(sim.initial_states, rng, out.initial_states);
        fill(sim.initial_estimates, rng, out.initial_estimates);
        fill(sim.initial_control_estimates, rng, out.initial_control_estimates);
    };
}

SimConfig make_sim_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.has_auto()) throw ConfigError("simulation: unresolved \"auto\" fields remain");
    SimConfig sim;
    sim.plant = cfg.plant;
    sim.net = cfg.net;
    sim.law = cfg.law;
    sim.comm = cfg.comm;
    sim.horizon = cfg.simulation.horizon;
    sim.mode = cfg.simulation.mode;
    sim.stride = cfg.simulation.stride;
    sim.capture_frames = cfg.simulation.capture_frames && cfg.simulation.mode == CodecMode::quantized;
    sim.leader_state = cfg.leader_state;
    sim.leader_estimate = cfg.leader_estimate;
    sim.initial_states.assign(cfg.agents, Vector::Zero(cfg.plant.n()));
    sim.initial_estimates.assign(cfg.agents, Vector::Zero(cfg.plant.n()));
    sim.initial_control_estimates.assign(cfg.agents, Vector::Zero(cfg.plant.m()));
    std::mt19937_64 rng(seed);
    make_sampler(cfg)(rng, sim);
    return sim;
}

Resolution resolve(ExperimentConfig& cfg, bool always_size) {
    Resolution res;
    const NetworkSpectrum spec = spectrum(cfg.net);
    if (cfg.k_auto) {
        if (!spec.lambda2_nonzero) {
            throw InfeasibleError("law.K: the graph has no spanning tree, so no K satisfies A1");
        }
        GainSearchResult k = search_gain_k(cfg.plant, spec, cfg.sizing.gains);
        if (!k.found) {
            throw InfeasibleError("law.K: no K with max rho(A - lambda_i B K) < 1 found within " +
                                  std::to_string(k.evaluations) + " evaluations (best " +
                                  std::to_string(k.radius) + ")");
        }
        std::get<ConsensusLaw>(cfg.law).k = k.gain;
        cfg.k_auto = false;
        res.resolved.push_back("/law/K");
        res.k_search = std::move(k);
    }
    if (cfg.g_auto) {
        if (!check_detectability(cfg.plant).holds) {
            throw InfeasibleError("comm.G: (A, C) is not detectable, so no G makes A - G C Schur");
        }
        GainSearchResult g = search_gain_g(cfg.plant, cfg.sizing.gains);
        if (!g.found) {
            throw InfeasibleError("comm.G: no G with rho(A - G C) < 1 found within budget (best " +
                                  std::to_string(g.radius) + ")");
        }
        cfg.comm.observer_gain = g.gain;
        cfg.g_auto = false;
        res.resolved.push_back("/comm/G");
        res.g_search = std::move(g);
    }
    const bool needs_sizing = cfg.gamma_auto || cfg.levels_y_auto || cfg.levels_u_auto;
    const auto* consensus = std::get_if<ConsensusLaw>(&cfg.law);
    if (needs_sizing && consensus == nullptr) {
        throw ConfigError("comm: \"auto\" gamma and level counts need the consensus law");
    }
    if ((needs_sizing || always_size) && consensus != nullptr) {
        SizingResult sizing;
        try {
            sizing = synthesize_protocol(cfg.plant, cfg.net, consensus->k, cfg.comm.observer_gain,
                                         sizing_inputs(cfg), cfg.comm.alpha, cfg.comm.alpha_u);
        } catch (const PreconditionError& e) {
            throw InfeasibleError(e.what());
        }
        if (cfg.gamma_auto) {
            cfg.comm.gamma = sizing.gamma;
            cfg.gamma_auto = false;
            res.resolved.push_back("/comm/gamma");
        }
        if (cfg.levels_y_auto || cfg.levels_u_auto) {
            if (cfg.sizing.empirical) {
                SimConfig base = make_sim_config([&] {
                    ExperimentConfig tmp = cfg;
                    tmp.levels_y_auto = tmp.levels_u_auto = false;
                    return tmp;
                }(), cfg.simulation.seed);
                LevelSearchResult found = empirical_level_search(base, make_sampler(cfg), cfg.sizing.search);
                if (!found.found) {
                    throw InfeasibleError("comm.levels: empirical search found no saturation-free level counts up to " +
                                          std::to_string(cfg.sizing.search.cap));
                }
                if (cfg.levels_y_auto) cfg.comm.levels_y = found.levels_y;
                if (cfg.levels_u_auto) cfg.comm.levels_u = found.levels_u;
                res.level_search = found;
            } else {
                if (cfg.levels_y_auto && !sizing.levels_y) {
                    throw InfeasibleError("comm.levels_y: the sufficient level count overflows");
                }
                if (cfg.levels_u_auto && !sizing.levels_u) {
                    throw InfeasibleError("comm.levels_u: the sufficient level count overflows");
                }
                if (cfg.levels_y_auto) cfg.comm.levels_y = *sizing.levels_y;
                if (cfg.levels_u_auto) cfg.comm.levels_u = *sizing.levels_u;
            }
            if (cfg.levels_y_auto) res.resolved.push_back("/comm/levels_y");
            if (cfg.levels_u_auto) res.resolved.push_back("/comm/levels_u");
            cfg.levels_y_auto = cfg.levels_u_auto = false;
        }
        res.sizing = std::move(sizing);
    }
    return res;
}

}  // namespace qcoop::app
