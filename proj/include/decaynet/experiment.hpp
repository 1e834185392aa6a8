#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "csv.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "indicators.hpp"
#include "meanfield.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace decaynet {

enum class Scenario { timeseries, sweep_p, sweep_q, sweep_th, phase_flip, meanfield_compare, phase_diagram };

inline std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::timeseries: return "timeseries";
    case Scenario::sweep_p: return "sweep_p";
    case Scenario::sweep_q: return "sweep_q";
    case Scenario::sweep_th: return "sweep_th";
    case Scenario::phase_flip: return "phase_flip";
    case Scenario::meanfield_compare: return "meanfield_compare";
    case Scenario::phase_diagram: return "phase_diagram";
    }
    return "?";
}

inline std::optional<Scenario> parse_scenario(std::string_view s) {
    for (auto sc : {Scenario::timeseries, Scenario::sweep_p, Scenario::sweep_q, Scenario::sweep_th,
                    Scenario::phase_flip, Scenario::meanfield_compare, Scenario::phase_diagram})
        if (to_string(sc) == s) return sc;
    return std::nullopt;
}

/// Evenly spaced values from start to stop inclusive.
struct Grid {
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 1;

    std::vector<double> values() const {
        std::vector<double> v(points);
        for (std::size_t i = 0; i < points; ++i)
            v[i] = points == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
        return v;
    }
};

struct ExperimentConfig {
    GraphSpec graph{};
    SimParams params{};
    std::size_t replicas = 1;
    /// 0 selects 3x the analytic lifetime (or kDefaultHorizon when it is infinite).
    std::uint64_t max_steps = 0;
    std::uint64_t record_stride = 1;
    Scenario scenario = Scenario::timeseries;
    Grid grid{};
    std::uint64_t seed = 0;
    std::string out_prefix;
    unsigned threads = 0; ///< 0: hardware concurrency
    std::ostream* progress = nullptr;
};

inline constexpr std::uint64_t kDefaultHorizon = 100000;
inline constexpr std::uint64_t kPhaseFlipMinSteps = 50000;

inline void validate(const ExperimentConfig& c) {
    if (c.replicas < 1) throw ParameterError("sim.replicas", "must be >= 1");
    if (c.record_stride < 1) throw ParameterError("sim.record_stride", "must be >= 1");
    validate(c.params);
    if (c.scenario != Scenario::phase_diagram && c.scenario != Scenario::meanfield_compare) validate(c.graph);
    const bool sweep = c.scenario == Scenario::sweep_p || c.scenario == Scenario::sweep_q || c.scenario == Scenario::sweep_th;
    if (sweep) {
        if (c.grid.points < 1) throw ParameterError("scenario.grid_points", "must be >= 1");
        if (c.grid.points > 1 && !(c.grid.stop > c.grid.start))
            throw ParameterError("scenario.grid_stop", "grid must be strictly increasing");
        const double lo = c.grid.start, hi = c.grid.points > 1 ? c.grid.stop : c.grid.start;
        const bool th = c.scenario == Scenario::sweep_th;
        if (!(lo >= 0.0 && hi <= 1.0) || (th && !(lo > 0.0)))
            throw ParameterError("scenario.grid_start", "grid outside the swept parameter's domain");
    }
}

/// Steps to simulate when the configuration does not fix a horizon.
inline std::uint64_t horizon(const ExperimentConfig& c) {
    if (c.max_steps > 0) return c.max_steps;
    const auto life = meanfield::t_c_analytic(c.params.th, c.params.p, c.params.q);
    if (!life.is_finite()) return kDefaultHorizon;
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(3.0 * life.steps())));
}

/// Seed of replica `i`; graph and dynamics seeds are derived from it.
inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t i) { return derive_seed(master, i); }

/// Runs `fn(i)` for i in [0, n) on a small pool. Completion order is irrelevant
/// to results because every task writes only its own slot.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct ReplicaResult {
    std::uint64_t seed = 0;
    TimeSeries series;
    std::optional<CrashReport> crash;          ///< indicator-II zero crossing
    std::optional<CrashReport> crash_max_drop; ///< largest single-step f_n decrease
};

struct AggregatePoint {
    std::uint64_t t = 0;
    std::size_t count = 0;
    Moments f_n, f_l, mean_degree, n_alive, n_active;
};

struct EnsembleResult {
    std::vector<ReplicaResult> replicas;
    std::vector<AggregatePoint> aggregate;
};

struct EnsembleOptions {
    std::uint64_t max_steps = 1000;
    StopRule stop = StopRule::steps_exhausted;
    /// Post-crash window, also used for drop sizes. 0 selects 10 * tau.
    std::uint64_t plateau_steps = 0;
};

inline std::uint64_t plateau_for(const SimParams& p, std::uint64_t requested) {
    return requested ? requested : 10ULL * p.tau;
}

inline ReplicaResult run_replica(const GraphSpec& graph, const SimParams& params, std::uint64_t seed,
                                 std::uint64_t record_stride, const EnsembleOptions& opt) {
    ReplicaResult out;
    out.seed = seed;
    GraphSpec g = graph;
    g.seed = derive_seed(seed, 100);
    auto topology = std::make_shared<const Topology>(generate(g));
    SimState state(topology, params, derive_seed(seed, 200));
    RunOptions ro;
    ro.max_steps = opt.max_steps;
    ro.record_stride = record_stride;
    ro.stop = opt.stop;
    const auto plateau = plateau_for(params, opt.plateau_steps);
    ro.crash_tail = plateau;
    out.series = run(state, ro);
    out.crash = detect_crash(out.series, CrashMethod::excess_zero_cross, plateau);
    out.crash_max_drop = detect_crash(out.series, CrashMethod::max_drop, plateau);
    return out;
}

/// Index-aligned mean/std over replicas; later records may cover fewer replicas
/// when runs stopped early.
inline std::vector<AggregatePoint> aggregate(const std::vector<ReplicaResult>& reps) {
    std::size_t len = 0;
    for (const auto& r : reps) len = std::max(len, r.series.size());
    std::vector<AggregatePoint> agg(len);
    std::vector<double> fn, fl, md, na, nc;
    for (std::size_t i = 0; i < len; ++i) {
        fn.clear(); fl.clear(); md.clear(); na.clear(); nc.clear();
        for (const auto& r : reps) {
            if (i >= r.series.size()) continue;
            const auto& s = r.series.steps[i];
            agg[i].t = s.t;
            fn.push_back(s.f_n);
            fl.push_back(s.f_l);
            md.push_back(s.mean_degree);
            na.push_back(static_cast<double>(s.n_alive));
            nc.push_back(static_cast<double>(s.n_active));
        }
        agg[i].count = fn.size();
        agg[i].f_n = sample_moments(fn);
        agg[i].f_l = sample_moments(fl);
        agg[i].mean_degree = sample_moments(md);
        agg[i].n_alive = sample_moments(na);
        agg[i].n_active = sample_moments(nc);
    }
    return agg;
}

inline EnsembleResult run_ensemble(const ExperimentConfig& config, const EnsembleOptions& opt) {
    validate(config.params);
    validate(config.graph);
    EnsembleResult res;
    res.replicas.resize(config.replicas);
    std::mutex log_mutex;
    std::atomic<std::size_t> done{0};
    parallel_for(config.replicas, config.threads, [&](std::size_t i) {
        res.replicas[i] = run_replica(config.graph, config.params, replica_seed(config.seed, i), config.record_stride, opt);
        if (config.progress) {
            std::lock_guard lock(log_mutex);
            *config.progress << "replica " << ++done << "/" << config.replicas << " done\n";
        }
    });
    res.aggregate = aggregate(res.replicas);
    return res;
}

/// Ensemble with the configuration's own horizon.
inline EnsembleResult run_ensemble(const ExperimentConfig& config) {
    EnsembleOptions opt;
    opt.max_steps = horizon(config);
    return run_ensemble(config, opt);
}

// --- Sweeps ---

struct SweepPoint {
    double param = 0.0;
    double tc_mean = std::nan("");
    double tc_std = std::nan("");
    double tc_analytic = 0.0; ///< +inf when the analytic lifetime is infinite
    double drop_mean = std::nan("");
    std::size_t censored_count = 0;
    std::vector<std::optional<std::uint64_t>> tc_zero_cross; ///< per replica
    std::vector<std::optional<std::uint64_t>> tc_max_drop;   ///< per replica
    std::vector<double> drop_sizes;                          ///< uncensored replicas
};

struct SweepResult {
    Scenario scenario = Scenario::sweep_p;
    std::vector<SweepPoint> points;
};

inline SimParams with_swept(SimParams p, Scenario s, double v) {
    switch (s) {
    case Scenario::sweep_p: p.p = v; break;
    case Scenario::sweep_q: p.q = v; break;
    case Scenario::sweep_th: p.th = v; break;
    default: throw ParameterError("scenario.name", "not a sweep scenario");
    }
    return p;
}

/// Summarizes replicas of one grid point. Uncensored replicas contribute to
/// the lifetime and drop statistics.
inline SweepPoint summarize_point(double param, const SimParams& params, const std::vector<ReplicaResult>& reps) {
    SweepPoint pt;
    pt.param = param;
    pt.tc_analytic = meanfield::t_c_analytic(params.th, params.p, params.q).value_or_inf();
    std::vector<double> tcs;
    for (const auto& r : reps) {
        pt.tc_zero_cross.push_back(r.crash ? std::optional(r.crash->t_c_numeric) : std::nullopt);
        pt.tc_max_drop.push_back(r.crash_max_drop ? std::optional(r.crash_max_drop->t_c_numeric) : std::nullopt);
        if (!r.crash) {
            ++pt.censored_count;
            continue;
        }
        tcs.push_back(static_cast<double>(r.crash->t_c_numeric));
        pt.drop_sizes.push_back(r.crash->drop_size);
    }
    if (!tcs.empty()) {
        const auto m = sample_moments(tcs);
        pt.tc_mean = m.mean;
        pt.tc_std = std::sqrt(m.variance);
        pt.drop_mean = sample_moments(pt.drop_sizes).mean;
    }
    return pt;
}

/// Runs the ensemble at every grid value. Replica i uses the same seed at
/// every grid point, so points differ only through the swept parameter.
inline SweepResult sweep(const ExperimentConfig& config) {
    validate(config);
    SweepResult out;
    out.scenario = config.scenario;
    for (double v : config.grid.values()) {
        ExperimentConfig point = config;
        point.params = with_swept(config.params, config.scenario, v);
        validate(point.params);
        EnsembleOptions opt;
        opt.max_steps = horizon(point);
        opt.stop = StopRule::crash_detected;
        const auto ens = run_ensemble(point, opt);
        out.points.push_back(summarize_point(v, point.params, ens.replicas));
        if (config.progress) *config.progress << "grid point " << format_decimal(v) << " done\n";
    }
    return out;
}

// --- Scenarios ---

/// Long trajectories for the flip-with-decay experiment.
inline EnsembleResult phase_flip_scenario(const ExperimentConfig& config) {
    EnsembleOptions opt;
    opt.max_steps = std::max(config.max_steps, kPhaseFlipMinSteps);
    return run_ensemble(config, opt);
}

/// Mean f_n over the last quarter of a trajectory.
inline double final_quartile_mean(const TimeSeries& ts) {
    const std::size_t from = ts.size() - ts.size() / 4;
    double s = 0.0;
    for (std::size_t i = from; i < ts.size(); ++i) s += ts.steps[i].f_n;
    return s / static_cast<double>(ts.size() - from);
}

/// Low-branch predictions at increasing times.
///
/// The lowest root grows as k(t) decays and iteration from below converges to
/// the lowest root, so each time warm-starts from the previous solution.
inline std::vector<meanfield::Prediction> fn_trajectory(const meanfield::MFParams& mp, const std::vector<double>& times,
                                                        bool with_links = false) {
    std::vector<meanfield::Prediction> out;
    out.reserve(times.size());
    double warm = 0.0;
    const unsigned m = mp.m();
    for (double t : times) {
        const double decay = std::exp(-(1.0 - mp.q) * mp.p * t);
        meanfield::Prediction pr;
        pr.t = t;
        pr.k_t = mp.k * decay;
        if (pr.k_t <= static_cast<double>(m)) {
            pr.a_t = mp.p + mp.r * (1.0 - mp.p);
        } else {
            meanfield::MFParams at = mp;
            at.k = pr.k_t;
            at.threshold_count = m;
            pr.a_t = meanfield::iterate(meanfield::SelfConsistency(at, with_links), warm).value;
            warm = pr.a_t;
        }
        pr.f_n = (1.0 - pr.a_t) * decay;
        out.push_back(pr);
    }
    return out;
}

inline meanfield::MFParams mf_params(const ExperimentConfig& c) {
    meanfield::MFParams mp;
    mp.p = c.params.p;
    mp.r = c.params.r;
    mp.q = c.params.q;
    mp.tau = c.params.tau;
    mp.th = c.params.th;
    mp.p_link = c.params.p_link;
    mp.k = c.graph.mean_degree;
    return mp;
}

struct ComparisonRow {
    std::uint64_t t = 0;
    double fn_sim = 0.0;
    double fn_pred = 0.0;
    double abs_err = 0.0;
};

struct MeanfieldComparison {
    std::vector<ComparisonRow> rows;
    double mean_abs_error = 0.0;
    double tc_numeric_mean = std::nan(""); ///< over uncensored replicas
    double tc_analytic = 0.0;
    double tc_rel_error = std::nan("");
    std::size_t censored = 0;
};

/// Compares an ensemble against its mean-field prediction, up to the first
/// record that not every replica reached.
inline MeanfieldComparison compare_with_meanfield(const ExperimentConfig& config, const EnsembleResult& ens) {
    MeanfieldComparison cmp;
    std::vector<double> times;
    for (const auto& a : ens.aggregate) {
        if (a.count != ens.replicas.size()) break;
        times.push_back(static_cast<double>(a.t));
    }
    const auto pred = fn_trajectory(mf_params(config), times, config.params.p_link > 0.0);
    double err = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        ComparisonRow row;
        row.t = ens.aggregate[i].t;
        row.fn_sim = ens.aggregate[i].f_n.mean;
        row.fn_pred = pred[i].f_n;
        row.abs_err = std::fabs(row.fn_sim - row.fn_pred);
        err += row.abs_err;
        cmp.rows.push_back(row);
    }
    cmp.mean_abs_error = times.empty() ? 0.0 : err / static_cast<double>(times.size());
    const auto pt = summarize_point(0.0, config.params, ens.replicas);
    cmp.tc_numeric_mean = pt.tc_mean;
    cmp.tc_analytic = pt.tc_analytic;
    cmp.censored = pt.censored_count;
    if (std::isfinite(cmp.tc_analytic) && cmp.tc_analytic > 0.0 && std::isfinite(cmp.tc_numeric_mean))
        cmp.tc_rel_error = std::fabs(cmp.tc_numeric_mean - cmp.tc_analytic) / cmp.tc_analytic;
    return cmp;
}

inline MeanfieldComparison meanfield_compare(const ExperimentConfig& config) {
    validate(config.graph);
    return compare_with_meanfield(config, run_ensemble(config));
}

// --- Persistence. File names under the prefix are stable. ---

namespace files {
inline constexpr std::string_view edges = "edges.txt";
inline constexpr std::string_view ensemble_mean = "ensemble_mean.csv";
inline constexpr std::string_view crashes = "crashes.csv";
inline constexpr std::string_view sweep = "sweep.csv";
inline constexpr std::string_view sweep_detectors = "sweep_detectors.csv";
inline constexpr std::string_view comparison = "meanfield_compare.csv";
inline constexpr std::string_view comparison_summary = "meanfield_summary.csv";
inline constexpr std::string_view trajectory = "trajectory.csv";
inline constexpr std::string_view phase_diagram = "phase_diagram.csv";
inline constexpr std::string_view indicators = "indicators.csv";
inline constexpr std::string_view histogram = "histogram.csv";

inline std::string replica(std::size_t i) { return "replica_" + std::to_string(i) + ".csv"; }
} // namespace files

inline std::filesystem::path output_path(const std::string& prefix, std::string_view name) {
    return std::filesystem::path(prefix + std::string(name));
}

inline void write_ensemble(const EnsembleResult& ens, const std::string& prefix) {
    for (std::size_t i = 0; i < ens.replicas.size(); ++i)
        write_timeseries_csv(ens.replicas[i].series, output_path(prefix, files::replica(i)));

    CsvWriter agg(output_path(prefix, files::ensemble_mean),
                  "t,f_n_mean,f_n_std,f_l_mean,f_l_std,mean_degree_mean,mean_degree_std,n_alive_mean,n_active_mean,replicas");
    for (const auto& a : ens.aggregate) {
        agg.field(a.t).field(a.f_n.mean).field(std::sqrt(a.f_n.variance)).field(a.f_l.mean)
            .field(std::sqrt(a.f_l.variance)).field(a.mean_degree.mean).field(std::sqrt(a.mean_degree.variance))
            .field(a.n_alive.mean).field(a.n_active.mean).field(static_cast<std::uint64_t>(a.count));
        agg.end_row();
    }
    agg.close();

    CsvWriter cr(output_path(prefix, files::crashes), "replica,seed,tc_zero_cross,tc_max_drop,drop_size");
    for (std::size_t i = 0; i < ens.replicas.size(); ++i) {
        const auto& r = ens.replicas[i];
        cr.field(static_cast<std::uint64_t>(i)).field(r.seed);
        if (r.crash) cr.field(r.crash->t_c_numeric); else cr.empty();
        if (r.crash_max_drop) cr.field(r.crash_max_drop->t_c_numeric); else cr.empty();
        if (r.crash) cr.field(r.crash->drop_size); else cr.empty();
        cr.end_row();
    }
    cr.close();
}

inline void write_sweep(const SweepResult& s, const std::string& prefix) {
    CsvWriter w(output_path(prefix, files::sweep), "param,tc_mean,tc_std,tc_analytic,drop_mean,censored_count");
    for (const auto& p : s.points) {
        w.field(p.param).field(p.tc_mean).field(p.tc_std).field(p.tc_analytic).field(p.drop_mean)
            .field(static_cast<std::uint64_t>(p.censored_count));
        w.end_row();
    }
    w.close();

    CsvWriter d(output_path(prefix, files::sweep_detectors), "param,replica,tc_zero_cross,tc_max_drop");
    for (const auto& p : s.points)
        for (std::size_t i = 0; i < p.tc_zero_cross.size(); ++i) {
            d.field(p.param).field(static_cast<std::uint64_t>(i));
            if (p.tc_zero_cross[i]) d.field(*p.tc_zero_cross[i]); else d.empty();
            if (p.tc_max_drop[i]) d.field(*p.tc_max_drop[i]); else d.empty();
            d.end_row();
        }
    d.close();
}

inline void write_comparison(const MeanfieldComparison& c, const std::string& prefix) {
    CsvWriter w(output_path(prefix, files::comparison), "t,fn_sim,fn_pred,abs_err");
    for (const auto& r : c.rows) {
        w.field(r.t).field(r.fn_sim).field(r.fn_pred).field(r.abs_err);
        w.end_row();
    }
    w.close();
    CsvWriter s(output_path(prefix, files::comparison_summary),
                "tc_numeric_mean,tc_analytic,tc_rel_error,mean_abs_error,censored_count");
    s.field(c.tc_numeric_mean).field(c.tc_analytic).field(c.tc_rel_error).field(c.mean_abs_error)
        .field(static_cast<std::uint64_t>(c.censored));
    s.end_row();
    s.close();
}

} // namespace decaynet
