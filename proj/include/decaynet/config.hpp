#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "experiment.hpp"

namespace decaynet::config {

// Flat dotted-key configuration:
//
//   # comment
//   graph.kind = er
//   dynamics.p = 0.003
//
// Every key may also be addressed by its last component ("p", "th", ...), all
// of which are unique.

struct KeyInfo {
    std::string_view name;
    std::string_view type;
    std::string_view default_value;
    std::string_view description;
};

inline const std::vector<KeyInfo>& keys() {
    static const std::vector<KeyInfo> k = {
        {"graph.kind", "er|ba|regular", "er", "initial topology generator"},
        {"graph.n", "int >= 2", "10000", "initial node count N(0)"},
        {"graph.mean_degree", "real >= 1", "10", "mean degree <k> (exact degree for regular; 2x attachments for ba)"},
        {"dynamics.p", "real in [0,1]", "0.001", "per-step internal failure probability"},
        {"dynamics.r", "real in [0,1]", "0.8", "external failure probability when critically damaged"},
        {"dynamics.q", "real in [0,1]", "0.99", "probability that an internal failure is recoverable"},
        {"dynamics.tau", "int >= 1", "50", "recovery delay in steps (also indicator window)"},
        {"dynamics.th", "real in (0,1]", "0.5", "fractional threshold T_h"},
        {"dynamics.p_link", "real in [0,1]", "0", "per-step permanent internal link failure probability"},
        {"dynamics.p_birth", "real in [0,1]", "0", "per-step per-living-node birth probability"},
        {"sim.max_steps", "int >= 0", "0", "steps per run; 0 = 3x analytic lifetime (100000 if infinite)"},
        {"sim.replicas", "int >= 1", "1", "independent replicas (graph and dynamics)"},
        {"sim.record_stride", "int >= 1", "1", "record every n-th step"},
        {"scenario.name", "timeseries|sweep_p|sweep_q|sweep_th|phase_flip|meanfield_compare|phase_diagram",
         "timeseries", "experiment to run"},
        {"scenario.grid_start", "real", "0", "first swept value"},
        {"scenario.grid_stop", "real", "0", "last swept value"},
        {"scenario.grid_points", "int >= 1", "1", "swept values (per axis for phase_diagram)"},
    };
    return k;
}

/// Canonical dotted name for a full or leaf key; throws on unknown keys.
inline std::string canonical_key(std::string_view key) {
    for (const auto& k : keys()) {
        if (k.name == key) return std::string(k.name);
        const auto leaf = k.name.substr(k.name.rfind('.') + 1);
        if (leaf == key) return std::string(k.name);
    }
    throw ParameterError(std::string(key), "unknown configuration key");
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

using Entries = std::map<std::string, std::string>;

/// Splits "key=value" and canonicalizes the key.
inline std::pair<std::string, std::string> parse_assignment(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParameterError(trim(text), "expected key = value");
    const auto key = trim(text.substr(0, eq));
    if (key.empty()) throw ParameterError("?", "empty key");
    return {canonical_key(key), trim(text.substr(eq + 1))};
}

inline Entries parse_text(std::string_view text) {
    Entries out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        auto [k, v] = parse_assignment(line);
        out[k] = v;
    }
    return out;
}

inline Entries parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("--config", "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

namespace detail {

inline double to_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* b = v.data();
    const auto* e = v.data() + v.size();
    auto [p, ec] = std::from_chars(b, e, x);
    if (ec != std::errc{} || p != e || !std::isfinite(x)) throw ParameterError(key, "expected a number, got '" + v + "'");
    return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto* b = v.data();
    const auto* e = v.data() + v.size();
    auto [p, ec] = std::from_chars(b, e, x);
    if (ec != std::errc{} || p != e) throw ParameterError(key, "expected a non-negative integer, got '" + v + "'");
    return x;
}

inline void unit_interval(const std::string& key, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterError(key, "must be in [0, 1], got " + format_decimal(v));
}

} // namespace detail

/// Applies one canonical key. Domain violations name the key.
inline void apply(ExperimentConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "graph.kind") {
        const auto k = parse_graph_kind(value);
        if (!k) throw ParameterError(key, "must be one of er, ba, regular");
        c.graph.kind = *k;
    } else if (key == "graph.n") {
        c.graph.n = to_uint(key, value);
        if (c.graph.n < 2) throw ParameterError(key, "must be >= 2");
    } else if (key == "graph.mean_degree") {
        c.graph.mean_degree = to_real(key, value);
        if (!(c.graph.mean_degree >= 1.0)) throw ParameterError(key, "must be >= 1");
    } else if (key == "dynamics.p") {
        unit_interval(key, c.params.p = to_real(key, value));
    } else if (key == "dynamics.r") {
        unit_interval(key, c.params.r = to_real(key, value));
    } else if (key == "dynamics.q") {
        unit_interval(key, c.params.q = to_real(key, value));
    } else if (key == "dynamics.tau") {
        const auto t = to_uint(key, value);
        if (t < 1 || t > 0xffffffffULL) throw ParameterError(key, "must be an integer in [1, 2^32)");
        c.params.tau = static_cast<std::uint32_t>(t);
    } else if (key == "dynamics.th") {
        c.params.th = to_real(key, value);
        if (!(c.params.th > 0.0 && c.params.th <= 1.0)) throw ParameterError(key, "must be in (0, 1]");
    } else if (key == "dynamics.p_link") {
        unit_interval(key, c.params.p_link = to_real(key, value));
    } else if (key == "dynamics.p_birth") {
        unit_interval(key, c.params.p_birth = to_real(key, value));
    } else if (key == "sim.max_steps") {
        c.max_steps = to_uint(key, value);
    } else if (key == "sim.replicas") {
        c.replicas = to_uint(key, value);
        if (c.replicas < 1) throw ParameterError(key, "must be >= 1");
    } else if (key == "sim.record_stride") {
        c.record_stride = to_uint(key, value);
        if (c.record_stride < 1) throw ParameterError(key, "must be >= 1");
    } else if (key == "scenario.name") {
        const auto s = parse_scenario(value);
        if (!s) throw ParameterError(key, "unknown scenario '" + value + "'");
        c.scenario = *s;
    } else if (key == "scenario.grid_start") {
        c.grid.start = to_real(key, value);
    } else if (key == "scenario.grid_stop") {
        c.grid.stop = to_real(key, value);
    } else if (key == "scenario.grid_points") {
        c.grid.points = to_uint(key, value);
        if (c.grid.points < 1) throw ParameterError(key, "must be >= 1");
    } else {
        throw ParameterError(key, "unknown configuration key");
    }
}

inline ExperimentConfig defaults() {
    ExperimentConfig c;
    for (const auto& k : keys()) apply(c, std::string(k.name), std::string(k.default_value));
    return c;
}

/// Defaults, then file entries, then overrides (in order).
inline ExperimentConfig build(const Entries& file, const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    ExperimentConfig c = defaults();
    for (const auto& [k, v] : file) apply(c, k, v);
    for (const auto& [k, v] : overrides) apply(c, k, v);
    return c;
}

/// Current value of every documented key, rendered as config text would be.
inline Entries dump(const ExperimentConfig& c) {
    Entries e;
    e["graph.kind"] = std::string(to_string(c.graph.kind));
    e["graph.n"] = std::to_string(c.graph.n);
    e["graph.mean_degree"] = format_decimal(c.graph.mean_degree, 17);
    e["dynamics.p"] = format_decimal(c.params.p, 17);
    e["dynamics.r"] = format_decimal(c.params.r, 17);
    e["dynamics.q"] = format_decimal(c.params.q, 17);
    e["dynamics.tau"] = std::to_string(c.params.tau);
    e["dynamics.th"] = format_decimal(c.params.th, 17);
    e["dynamics.p_link"] = format_decimal(c.params.p_link, 17);
    e["dynamics.p_birth"] = format_decimal(c.params.p_birth, 17);
    e["sim.max_steps"] = std::to_string(c.max_steps);
    e["sim.replicas"] = std::to_string(c.replicas);
    e["sim.record_stride"] = std::to_string(c.record_stride);
    e["scenario.name"] = std::string(to_string(c.scenario));
    e["scenario.grid_start"] = format_decimal(c.grid.start, 17);
    e["scenario.grid_stop"] = format_decimal(c.grid.stop, 17);
    e["scenario.grid_points"] = std::to_string(c.grid.points);
    return e;
}

/// Key reference printed by --help.
inline std::string key_reference() {
    std::ostringstream os;
    os << "Configuration keys (file: 'key = value'; override: --set key=value; the last\n"
          "component alone, e.g. 'p', is accepted as well):\n";
    for (const auto& k : keys()) {
        os << "  " << k.name << " (" << k.type << ", default " << k.default_value << ")\n"
           << "      " << k.description << '\n';
    }
    return os.str();
}

} // namespace decaynet::config
