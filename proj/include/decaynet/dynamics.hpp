#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace decaynet {

/// Model parameters of the decaying network.
///
///   p        per-step probability that a living node is hit by an internal failure
///   r        probability of external failure while critically damaged
///   q        probability that an internal failure is recoverable (1 - q: permanent)
///   tau      steps an internally failed node stays down before recovering
///   th       fractional threshold
///   p_link   per-step probability of a permanent internal link failure
///   p_birth  per-step probability that a living node spawns a new node
struct SimParams {
    double p = 0.0;
    double r = 0.0;
    double q = 1.0;
    std::uint32_t tau = 1;
    double th = 0.5;
    double p_link = 0.0;
    double p_birth = 0.0;
};

inline void validate(const SimParams& params) {
    auto unit = [](const char* key, double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw ParameterError(key, "must be in [0, 1], got " + format_decimal(v));
    };
    unit("dynamics.p", params.p);
    unit("dynamics.r", params.r);
    unit("dynamics.q", params.q);
    unit("dynamics.p_link", params.p_link);
    unit("dynamics.p_birth", params.p_birth);
    if (!(params.th > 0.0 && params.th <= 1.0))
        throw ParameterError("dynamics.th", "must be in (0, 1], got " + format_decimal(params.th));
    if (params.tau < 1) throw ParameterError("dynamics.tau", "must be >= 1");
}

enum class InternalState : std::uint8_t { active, failed };

/// Snapshot of one node. The node is ACTIVE iff alive, internally active and
/// externally active.
struct NodeDynState {
    bool alive = true;
    InternalState internal = InternalState::active;
    std::uint64_t recover_at = 0; ///< meaningful only while internally failed
    bool external_active = true;

    bool active() const noexcept { return alive && internal == InternalState::active && external_active; }
};

struct StepRecord {
    std::uint64_t t = 0;
    double f_n = 0.0;         ///< active nodes / N(0)
    double f_l = 0.0;         ///< active links / L(0)
    double mean_degree = 0.0; ///< mean over living nodes of intact links to living nodes
    std::size_t n_alive = 0;
    std::size_t n_active = 0;
};

/// Mutable state of one replica. Owns a private copy of the wiring because
/// births add nodes and links; the initial topology is kept for reference.
/// Active-neighbor counts are maintained incrementally as nodes change state.
class SimState {
public:
    SimState(std::shared_ptr<const Topology> topology, const SimParams& params, std::uint64_t seed)
        : topology_(std::move(topology)), params_(params),
          internal_rng_(derive_seed(seed, 1)), external_rng_(derive_seed(seed, 2)),
          link_rng_(derive_seed(seed, 3)), birth_rng_(derive_seed(seed, 4)) {
        validate(params_);
        const Topology& topo = *topology_;
        n0_ = topo.node_count();
        l0_ = topo.link_count();
        links_.assign(topo.links().begin(), topo.links().end());
        link_active_.assign(l0_, 1);
        incidence_.resize(n0_);
        for (NodeId i = 0; i < n0_; ++i) {
            const auto nb = topo.neighbors(i);
            const auto li = topo.incident_links(i);
            incidence_[i].reserve(nb.size());
            for (std::size_t j = 0; j < nb.size(); ++j) incidence_[i].push_back({nb[j], li[j]});
        }
        flags_.assign(n0_, kActive);
        recover_at_.assign(n0_, 0);
        k0_.resize(n0_);
        threshold_.resize(n0_);
        act_nb_.resize(n0_);
        for (NodeId i = 0; i < n0_; ++i) {
            k0_[i] = static_cast<std::uint32_t>(topo.initial_degree(i));
            threshold_[i] = threshold_for(k0_[i]);
            act_nb_[i] = k0_[i];
        }
        n_alive_ = n_active_ = n0_;
        intact_links_ = l0_;
    }

    std::uint64_t time() const noexcept { return t_; }
    const SimParams& params() const noexcept { return params_; }
    const Topology& topology() const noexcept { return *topology_; }
    std::size_t initial_node_count() const noexcept { return n0_; }
    std::size_t initial_link_count() const noexcept { return l0_; }
    /// Including nodes born during the run.
    std::size_t node_count() const noexcept { return flags_.size(); }
    /// Including links created by births.
    std::size_t link_count() const noexcept { return links_.size(); }
    const Link& link(LinkId l) const { return links_[l]; }

    NodeDynState node(NodeId i) const {
        NodeDynState s;
        s.alive = alive(i);
        s.internal = (flags_[i] & kInternal) ? InternalState::active : InternalState::failed;
        s.recover_at = recover_at_[i];
        s.external_active = (flags_[i] & kExternal) != 0;
        return s;
    }

    bool alive(NodeId i) const noexcept { return (flags_[i] & kAlive) != 0; }
    bool is_active(NodeId i) const noexcept { return flags_[i] == kActive; }
    bool link_internally_active(LinkId l) const noexcept { return link_active_[l] != 0; }
    std::uint32_t initial_degree(NodeId i) const noexcept { return k0_[i]; }
    /// m_i = floor(th * k_i(0)), fixed when the node appears.
    std::uint32_t threshold_count(NodeId i) const noexcept { return threshold_[i]; }

    /// ACTIVE neighbors reached over internally intact links.
    std::uint32_t active_neighbor_count(NodeId i) const noexcept { return act_nb_[i]; }

    bool is_critically_damaged(NodeId i) const {
        if (i >= flags_.size()) throw QueryError("node " + std::to_string(i) + " does not exist");
        if (!alive(i)) throw QueryError("node " + std::to_string(i) + " is dead");
        return critical(i);
    }

    /// Puts a living node into recoverable internal failure until `recover_at`.
    void force_internal_failure(NodeId i, std::uint64_t recover_at) {
        if (i >= flags_.size()) throw QueryError("node " + std::to_string(i) + " does not exist");
        if (!alive(i)) throw QueryError("node " + std::to_string(i) + " is dead");
        set_flags(i, flags_[i] & ~kInternal);
        recover_at_[i] = recover_at;
    }

    StepRecord record() const {
        StepRecord rec;
        rec.t = t_;
        rec.n_alive = n_alive_;
        rec.n_active = n_active_;
        std::size_t ends = 0;
        for (NodeId i = 0; i < flags_.size(); ++i)
            if (flags_[i] == kActive) ends += act_nb_[i];
        rec.f_n = n0_ ? static_cast<double>(n_active_) / static_cast<double>(n0_) : 0.0;
        rec.f_l = l0_ ? static_cast<double>(ends / 2) / static_cast<double>(l0_) : 0.0;
        rec.mean_degree = n_alive_ ? 2.0 * static_cast<double>(intact_links_) / static_cast<double>(n_alive_) : 0.0;
        return rec;
    }

    /// Per-node excess e_i = min(1, active neighbors / k_i(0)) - th over living
    /// nodes, in node-id order. An isolated node counts as fully supported
    /// (fraction 1), matching the rule that it is never critical. The cap only
    /// matters for nodes that gained neighbors through births.
    void excess_values(std::vector<double>& out) const {
        out.clear();
        out.reserve(n_alive_);
        for (NodeId i = 0; i < flags_.size(); ++i) {
            if (!alive(i)) continue;
            const double frac = k0_[i] == 0 ? 1.0 : std::min(1.0, static_cast<double>(act_nb_[i]) / k0_[i]);
            out.push_back(frac - params_.th);
        }
    }

    /// One synchronous update; see README for the phase order.
    StepRecord step() {
        const std::size_t n = flags_.size();

        // 1. Internal failures. Every living node is attacked with probability
        // p; each attack is permanent with probability 1 - q. A recoverable hit
        // on a node that is already down leaves its recovery time unchanged.
        // Hit positions are drawn by geometric skipping over all node ids;
        // hits on dead nodes are ignored.
        for (std::uint64_t hit = next_hit(0); hit < n; hit = next_hit(hit + 1)) {
            const auto i = static_cast<NodeId>(hit);
            if (!alive(i)) continue;
            if (internal_rng_.bernoulli(1.0 - params_.q)) {
                set_flags(i, 0);
            } else if (flags_[i] & kInternal) {
                set_flags(i, flags_[i] & ~kInternal);
                recover_at_[i] = t_ + 1 + params_.tau;
            }
        }

        // 2. Recoveries.
        for (NodeId i = 0; i < n; ++i)
            if ((flags_[i] & (kAlive | kInternal)) == kAlive && recover_at_[i] == t_ + 1) set_flags(i, flags_[i] | kInternal);

        // 3. Permanent internal link failures between living endpoints.
        if (params_.p_link > 0.0) {
            for (LinkId l = 0; l < links_.size(); ++l) {
                const auto [u, v] = links_[l];
                if (!link_active_[l] || !alive(u) || !alive(v)) continue;
                if (!link_rng_.bernoulli(params_.p_link)) continue;
                link_active_[l] = 0;
                --intact_links_;
                if (is_active(u)) --act_nb_[v];
                if (is_active(v)) --act_nb_[u];
            }
        }

        // 4. Births.
        if (params_.p_birth > 0.0) spawn_births();

        // 5. External states, resampled from the neighborhood seen with the
        // previous external states. Decide everything first, then apply.
        changes_.clear();
        for (NodeId i = 0; i < flags_.size(); ++i) {
            if (!alive(i)) continue;
            const bool failed = critical(i) && external_rng_.bernoulli(params_.r);
            const bool ext = (flags_[i] & kExternal) != 0;
            if (failed == ext) changes_.push_back(i);
        }
        for (NodeId i : changes_) set_flags(i, flags_[i] ^ kExternal);

        ++t_;
        return record();
    }

private:
    static constexpr std::uint8_t kAlive = 1;
    static constexpr std::uint8_t kInternal = 2;
    static constexpr std::uint8_t kExternal = 4;
    static constexpr std::uint8_t kActive = kAlive | kInternal | kExternal;

    struct Incidence {
        NodeId neighbor;
        LinkId link;
    };

    std::uint32_t threshold_for(std::uint32_t degree) const {
        // Guard against th * k landing a hair below an integer.
        return static_cast<std::uint32_t>(std::floor(params_.th * degree + 1e-12));
    }

    /// First attacked position >= from.
    std::uint64_t next_hit(std::uint64_t from) {
        if (params_.p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
        if (params_.p >= 1.0) return from;
        const auto skip = internal_rng_.geometric(params_.p);
        return skip > std::numeric_limits<std::uint64_t>::max() - from ? std::numeric_limits<std::uint64_t>::max()
                                                                       : from + skip;
    }

    bool critical(NodeId i) const noexcept { return k0_[i] > 0 && act_nb_[i] <= threshold_[i]; }

    /// Changes a node's flags and propagates the effect on neighbor counts.
    void set_flags(NodeId i, int f) {
        const auto next = static_cast<std::uint8_t>(f);
        const std::uint8_t prev = flags_[i];
        flags_[i] = next;
        const bool was_active = prev == kActive, now_active = next == kActive;
        if (was_active != now_active) {
            for (const auto& [nb, link] : incidence_[i])
                if (link_active_[link]) now_active ? ++act_nb_[nb] : --act_nb_[nb];
            now_active ? ++n_active_ : --n_active_;
        }
        if ((prev & kAlive) && !(next & kAlive)) {
            --n_alive_;
            for (const auto& [nb, link] : incidence_[i])
                if (link_active_[link] && alive(nb)) --intact_links_;
        }
    }

    void spawn_births() {
        alive_list_.clear();
        for (NodeId i = 0; i < flags_.size(); ++i)
            if (alive(i)) alive_list_.push_back(i);
        if (alive_list_.empty()) return;
        const auto degree = static_cast<std::size_t>(std::lround(record().mean_degree));
        const std::size_t wire = std::min(degree, alive_list_.size());

        std::vector<NodeId> targets;
        for (std::size_t b = 0; b < alive_list_.size(); ++b) {
            if (!birth_rng_.bernoulli(params_.p_birth)) continue;
            targets.clear();
            while (targets.size() < wire) {
                const NodeId c = alive_list_[birth_rng_.below(alive_list_.size())];
                if (std::find(targets.begin(), targets.end(), c) == targets.end()) targets.push_back(c);
            }
            const auto id = static_cast<NodeId>(flags_.size());
            flags_.push_back(kActive);
            recover_at_.push_back(0);
            k0_.push_back(static_cast<std::uint32_t>(targets.size()));
            threshold_.push_back(threshold_for(k0_.back()));
            act_nb_.push_back(0);
            incidence_.emplace_back();
            ++n_alive_;
            ++n_active_;
            for (NodeId c : targets) {
                const auto link = static_cast<LinkId>(links_.size());
                links_.push_back({c, id});
                link_active_.push_back(1);
                incidence_[id].push_back({c, link});
                incidence_[c].push_back({id, link});
                ++intact_links_;
                if (is_active(c)) ++act_nb_[id];
                ++act_nb_[c];
            }
        }
    }

    std::shared_ptr<const Topology> topology_;
    SimParams params_;
    std::uint64_t t_ = 0;
    std::size_t n0_ = 0;
    std::size_t l0_ = 0;

    std::vector<std::vector<Incidence>> incidence_;
    std::vector<Link> links_;
    std::vector<std::uint8_t> link_active_;
    std::vector<std::uint8_t> flags_;
    std::vector<std::uint64_t> recover_at_;
    std::vector<std::uint32_t> k0_;
    std::vector<std::uint32_t> threshold_;
    std::vector<std::uint32_t> act_nb_;
    std::size_t n_alive_ = 0;
    std::size_t n_active_ = 0;
    std::size_t intact_links_ = 0;

    Rng internal_rng_;
    Rng external_rng_;
    Rng link_rng_;
    Rng birth_rng_;

    std::vector<NodeId> changes_;
    std::vector<NodeId> alive_list_;
};

inline SimState init_state(std::shared_ptr<const Topology> topology, const SimParams& params, std::uint64_t seed) {
    return SimState(std::move(topology), params, seed);
}

/// Recorded trajectory. `excess[i]` summarizes the per-node excess at `steps[i].t`.
struct TimeSeries {
    std::vector<StepRecord> steps;
    std::vector<Moments> excess;

    std::size_t size() const noexcept { return steps.size(); }

    std::vector<double> f_n() const {
        std::vector<double> v;
        v.reserve(steps.size());
        for (const auto& s : steps) v.push_back(s.f_n);
        return v;
    }

    std::vector<double> excess_mean() const {
        std::vector<double> v;
        v.reserve(excess.size());
        for (const auto& m : excess) v.push_back(m.mean);
        return v;
    }
};

enum class StopRule {
    steps_exhausted,
    /// Stop `crash_tail` steps after the mean excess first becomes <= 0.
    crash_detected,
};

struct RunOptions {
    std::uint64_t max_steps = 1000;
    std::uint64_t record_stride = 1;
    StopRule stop = StopRule::steps_exhausted;
    std::uint64_t crash_tail = 0;
    /// Called with the state after every recorded step (and at t = 0).
    std::function<void(const SimState&)> on_record;
};

/// Advances `state` up to max_steps times. The initial state is always recorded.
inline TimeSeries run(SimState& state, const RunOptions& options) {
    if (options.record_stride < 1) throw ParameterError("sim.record_stride", "must be >= 1");
    TimeSeries ts;
    std::vector<double> scratch;
    auto summarize = [&] {
        state.excess_values(scratch);
        return sample_moments(scratch);
    };
    auto keep = [&](const StepRecord& rec, const Moments& m) {
        ts.steps.push_back(rec);
        ts.excess.push_back(m);
        if (options.on_record) options.on_record(state);
    };

    const auto start = state.time();
    keep(state.record(), summarize());
    const bool watch = options.stop == StopRule::crash_detected;
    std::optional<std::uint64_t> crash_at;
    if (watch && ts.excess.back().mean <= 0.0) crash_at = state.time();

    for (std::uint64_t s = 0; s < options.max_steps; ++s) {
        if (crash_at && state.time() >= *crash_at + options.crash_tail) break;
        const StepRecord rec = state.step();
        const bool recorded = (rec.t - start) % options.record_stride == 0;
        if (!recorded && !watch) continue;
        const Moments m = summarize();
        if (recorded) keep(rec, m);
        if (watch && !crash_at && m.mean <= 0.0) crash_at = rec.t;
    }
    return ts;
}

inline void write_timeseries_csv(const TimeSeries& ts, const std::filesystem::path& path) {
    CsvWriter w(path, "t,f_n,f_l,mean_degree,n_alive,n_active");
    for (const auto& s : ts.steps) {
        w.field(s.t).field(s.f_n).field(s.f_l).field(s.mean_degree)
            .field(static_cast<std::uint64_t>(s.n_alive)).field(static_cast<std::uint64_t>(s.n_active));
        w.end_row();
    }
    w.close();
}

} // namespace decaynet
