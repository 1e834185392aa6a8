#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace decaynet {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

/// Undirected link, stored with u < v.
struct Link {
    NodeId u;
    NodeId v;

    friend bool operator==(const Link&, const Link&) = default;
    friend auto operator<=>(const Link&, const Link&) = default;
};

enum class GraphKind { er, ba, regular };

inline std::string_view to_string(GraphKind kind) {
    switch (kind) {
    case GraphKind::er: return "er";
    case GraphKind::ba: return "ba";
    case GraphKind::regular: return "regular";
    }
    return "?";
}

inline std::optional<GraphKind> parse_graph_kind(std::string_view s) {
    if (s == "er") return GraphKind::er;
    if (s == "ba") return GraphKind::ba;
    if (s == "regular") return GraphKind::regular;
    return std::nullopt;
}

/// Recipe for an initial topology.
///
/// `mean_degree` is the target average degree for every kind. For `regular`
/// it is the exact degree and must be integral; for `ba` each new node makes
/// mean_degree/2 attachments on average (a fractional half-integer count is
/// realized by choosing between floor and ceil per node).
struct GraphSpec {
    GraphKind kind = GraphKind::er;
    std::size_t n = 10000;
    double mean_degree = 10.0;
    std::uint64_t seed = 0;
};

inline void validate(const GraphSpec& spec) {
    if (spec.n < 2) throw ParameterError("graph.n", "must be >= 2");
    if (!(spec.mean_degree >= 1.0) || !std::isfinite(spec.mean_degree))
        throw ParameterError("graph.mean_degree", "must be a finite value >= 1");
    if (spec.mean_degree > static_cast<double>(spec.n - 1))
        throw ParameterError("graph.mean_degree", "must not exceed n - 1");
    if (spec.kind == GraphKind::regular) {
        const double k = spec.mean_degree;
        if (k != std::floor(k)) throw ParameterError("graph.mean_degree", "must be an integer for regular graphs");
        if ((spec.n * static_cast<std::size_t>(k)) % 2 != 0)
            throw ParameterError("graph.mean_degree", "n * k must be even for regular graphs");
    }
    if (spec.kind == GraphKind::ba) {
        const auto core = static_cast<std::size_t>(std::ceil(spec.mean_degree / 2.0)) + 1;
        if (spec.n < core) throw ParameterError("graph.n", "smaller than the preferential-attachment core");
    }
}

/// Immutable initial graph: simple, undirected, with per-node incidence lists.
class Topology {
public:
    Topology() = default;

    /// Builds from an edge list. Rejects self-loops, duplicates and ids >= n.
    static Topology from_edges(std::size_t n, std::vector<Link> edges) {
        for (auto& e : edges) {
            if (e.u == e.v) throw GenerationError("self-loop at node " + std::to_string(e.u));
            if (e.u > e.v) std::swap(e.u, e.v);
            if (e.v >= n) throw GenerationError("node id " + std::to_string(e.v) + " out of range");
        }
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
            throw GenerationError("duplicate edge");

        Topology t;
        t.links_ = std::move(edges);
        t.adjacency_.assign(n, {});
        t.incident_.assign(n, {});
        for (LinkId id = 0; id < t.links_.size(); ++id) {
            const auto [u, v] = t.links_[id];
            t.adjacency_[u].push_back(v);
            t.incident_[u].push_back(id);
            t.adjacency_[v].push_back(u);
            t.incident_[v].push_back(id);
        }
        // Links are sorted, so each neighbor list is already ascending for the
        // u-side entries; v-side entries interleave, hence the joint sort.
        for (std::size_t i = 0; i < n; ++i) {
            auto& adj = t.adjacency_[i];
            auto& inc = t.incident_[i];
            std::vector<std::pair<NodeId, LinkId>> z(adj.size());
            for (std::size_t j = 0; j < adj.size(); ++j) z[j] = {adj[j], inc[j]};
            std::sort(z.begin(), z.end());
            for (std::size_t j = 0; j < adj.size(); ++j) std::tie(adj[j], inc[j]) = z[j];
        }
        return t;
    }

    std::size_t node_count() const noexcept { return adjacency_.size(); }
    std::size_t link_count() const noexcept { return links_.size(); }

    std::span<const NodeId> neighbors(NodeId i) const { return adjacency_[i]; }
    /// Link ids parallel to neighbors(i).
    std::span<const LinkId> incident_links(NodeId i) const { return incident_[i]; }
    std::size_t initial_degree(NodeId i) const { return adjacency_[i].size(); }
    std::span<const Link> links() const noexcept { return links_; }

    double mean_degree() const noexcept {
        return node_count() == 0 ? 0.0 : 2.0 * static_cast<double>(link_count()) / static_cast<double>(node_count());
    }

    friend bool operator==(const Topology& a, const Topology& b) {
        return a.node_count() == b.node_count() && a.links_ == b.links_;
    }

private:
    std::vector<std::vector<NodeId>> adjacency_;
    std::vector<std::vector<LinkId>> incident_;
    std::vector<Link> links_;
};

namespace detail {

// G(n, p) by geometric skipping over the lexicographic pair order; each pair
// is present independently with probability p.
inline std::vector<Link> erdos_renyi_edges(std::size_t n, double p, Rng& rng) {
    std::vector<Link> edges;
    if (p <= 0.0) return edges;
    if (p >= 1.0) {
        for (NodeId v = 1; v < n; ++v)
            for (NodeId w = 0; w < v; ++w) edges.push_back({w, v});
        return edges;
    }
    edges.reserve(static_cast<std::size_t>(p * static_cast<double>(n) * static_cast<double>(n - 1) / 2.0 * 1.1) + 16);
    std::uint64_t v = 1;
    std::int64_t w = -1;
    while (v < n) {
        const std::uint64_t skip = rng.geometric(p);
        if (skip >= static_cast<std::uint64_t>(n) * n) break;
        w += 1 + static_cast<std::int64_t>(skip);
        while (w >= static_cast<std::int64_t>(v) && v < n) {
            w -= static_cast<std::int64_t>(v);
            ++v;
        }
        if (v < n) edges.push_back({static_cast<NodeId>(w), static_cast<NodeId>(v)});
    }
    return edges;
}

inline std::vector<Link> barabasi_albert_edges(std::size_t n, double attachments, Rng& rng) {
    const auto whole = static_cast<std::size_t>(std::floor(attachments));
    const double frac = attachments - static_cast<double>(whole);
    const auto core = static_cast<std::size_t>(std::ceil(attachments)) + 1;

    std::vector<Link> edges;
    std::vector<NodeId> endpoints; // node repeated once per incident edge
    for (NodeId v = 1; v < core; ++v)
        for (NodeId u = 0; u < v; ++u) {
            edges.push_back({u, v});
            endpoints.push_back(u);
            endpoints.push_back(v);
        }

    std::vector<NodeId> chosen;
    for (auto v = static_cast<NodeId>(core); v < n; ++v) {
        std::size_t count = whole;
        if (frac > 0.0 && rng.bernoulli(frac)) ++count;
        count = std::clamp<std::size_t>(count, 1, v);
        chosen.clear();
        while (chosen.size() < count) {
            const NodeId target = endpoints[rng.below(endpoints.size())];
            if (std::find(chosen.begin(), chosen.end(), target) == chosen.end()) chosen.push_back(target);
        }
        for (NodeId target : chosen) {
            edges.push_back({target, v});
            endpoints.push_back(target);
            endpoints.push_back(v);
        }
    }
    return edges;
}

// Configuration-model pairing: random stub pairs are accepted only when they
// form a new simple edge; a dead end restarts the whole pairing.
inline std::vector<Link> random_regular_edges(std::size_t n, std::size_t k, Rng& rng, int max_restarts = 200) {
    std::vector<std::vector<NodeId>> adj(n);
    auto linked = [&](NodeId a, NodeId b) {
        return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
    };
    for (int attempt = 0; attempt < max_restarts; ++attempt) {
        for (auto& a : adj) a.clear();
        std::vector<NodeId> stubs;
        stubs.reserve(n * k);
        for (NodeId i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) stubs.push_back(i);
        std::vector<Link> edges;
        edges.reserve(n * k / 2);

        bool stuck = false;
        while (!stubs.empty() && !stuck) {
            bool placed = false;
            const std::size_t tries = 50 * stubs.size() + 100;
            for (std::size_t t = 0; t < tries; ++t) {
                const auto i = rng.below(stubs.size());
                const auto j = rng.below(stubs.size());
                const NodeId a = stubs[i];
                const NodeId b = stubs[j];
                if (i == j || a == b || linked(a, b)) continue;
                adj[a].push_back(b);
                adj[b].push_back(a);
                edges.push_back({std::min(a, b), std::max(a, b)});
                // Remove the higher index first so the lower one stays valid.
                for (auto idx : {std::max(i, j), std::min(i, j)}) {
                    stubs[idx] = stubs.back();
                    stubs.pop_back();
                }
                placed = true;
                break;
            }
            if (!placed) stuck = true;
        }
        if (!stuck) return edges;
    }
    throw GenerationError("random regular pairing failed after " + std::to_string(max_restarts) + " restarts");
}

} // namespace detail

/// Deterministic for a fixed spec (including its seed).
inline Topology generate(const GraphSpec& spec) {
    validate(spec);
    Rng rng(derive_seed(spec.seed, 0x6772617068ULL));
    switch (spec.kind) {
    case GraphKind::er:
        return Topology::from_edges(spec.n, detail::erdos_renyi_edges(spec.n, spec.mean_degree / static_cast<double>(spec.n - 1), rng));
    case GraphKind::ba:
        return Topology::from_edges(spec.n, detail::barabasi_albert_edges(spec.n, spec.mean_degree / 2.0, rng));
    case GraphKind::regular:
        return Topology::from_edges(spec.n, detail::random_regular_edges(spec.n, static_cast<std::size_t>(spec.mean_degree), rng));
    }
    throw ParameterError("graph.kind", "unknown kind");
}

inline std::map<std::size_t, std::size_t> degree_histogram(const Topology& topology) {
    std::map<std::size_t, std::size_t> h;
    for (NodeId i = 0; i < topology.node_count(); ++i) ++h[topology.initial_degree(i)];
    return h;
}

// Edge-list text format: one "u v" pair per line, 0-based ids, u < v, ascending.

inline void write_edge_list(const Topology& topology, std::ostream& out) {
    for (const auto& [u, v] : topology.links()) out << u << ' ' << v << '\n';
}

inline void write_edge_list(const Topology& topology, const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    write_edge_list(topology, out);
    if (!out) throw IoError(path.string(), "write failed");
}

/// Reads an edge list. Without `n`, the node count is one past the largest id.
inline Topology read_edge_list(std::istream& in, std::optional<std::size_t> n = std::nullopt) {
    std::vector<Link> edges;
    std::size_t max_id = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::uint64_t u, v;
        if (!(ls >> u >> v)) throw GenerationError("malformed edge on line " + std::to_string(lineno));
        edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
        max_id = std::max<std::size_t>(max_id, std::max(u, v));
    }
    const std::size_t count = n.value_or(edges.empty() ? 0 : max_id + 1);
    return Topology::from_edges(count, std::move(edges));
}

inline Topology read_edge_list(const std::filesystem::path& path, std::optional<std::size_t> n = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    return read_edge_list(in, n);
}

} // namespace decaynet
