#pragma once

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "graph.hpp"
#include "indicators.hpp"
#include "meanfield.hpp"

namespace decaynet::cli {

enum ExitCode : int { ok = 0, config_error = 1, runtime_error = 2 };

struct Invocation {
    std::string subcommand;
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out = "out/";
    bool quiet = false;
};

namespace detail {

inline ExperimentConfig load(const Invocation& inv, std::ostream& err) {
    config::Entries file;
    if (!inv.config_path.empty()) file = config::parse_file(inv.config_path);
    std::vector<std::pair<std::string, std::string>> sets;
    for (const auto& s : inv.overrides) sets.push_back(config::parse_assignment(s));
    ExperimentConfig c = config::build(file, sets);
    c.seed = inv.seed.value_or(0);
    c.out_prefix = inv.out;
    c.progress = inv.quiet ? nullptr : &err;
    return c;
}

inline void require_seed(const Invocation& inv) {
    if (!inv.seed) throw ParameterError("--seed", "required for stochastic subcommands");
}

inline int generate(const Invocation& inv, std::ostream& out, std::ostream& err) {
    require_seed(inv);
    auto c = load(inv, err);
    c.graph.seed = *inv.seed;
    const auto topo = decaynet::generate(c.graph);
    const auto path = output_path(c.out_prefix, files::edges);
    write_edge_list(topo, path);
    out << "nodes = " << topo.node_count() << "\nlinks = " << topo.link_count()
        << "\nmean_degree = " << format_decimal(topo.mean_degree()) << "\nwrote " << path.string() << '\n';
    return ok;
}

inline int simulate(const Invocation& inv, std::ostream& out, std::ostream& err) {
    require_seed(inv);
    const auto c = load(inv, err);
    validate(c);
    switch (c.scenario) {
    case Scenario::timeseries: {
        const auto ens = run_ensemble(c);
        write_ensemble(ens, c.out_prefix);
        break;
    }
    case Scenario::phase_flip: {
        const auto ens = phase_flip_scenario(c);
        write_ensemble(ens, c.out_prefix);
        for (std::size_t i = 0; i < ens.replicas.size(); ++i)
            out << "replica " << i << " final-quartile f_n = " << format_decimal(final_quartile_mean(ens.replicas[i].series)) << '\n';
        break;
    }
    case Scenario::meanfield_compare: {
        const auto ens = run_ensemble(c);
        write_ensemble(ens, c.out_prefix);
        const auto cmp = compare_with_meanfield(c, ens);
        write_comparison(cmp, c.out_prefix);
        out << "tc_numeric_mean = " << format_decimal(cmp.tc_numeric_mean) << "\ntc_analytic = "
            << format_decimal(cmp.tc_analytic) << "\ntc_rel_error = " << format_decimal(cmp.tc_rel_error)
            << "\nmean_abs_error = " << format_decimal(cmp.mean_abs_error) << '\n';
        break;
    }
    default:
        throw ParameterError("scenario.name", "'" + std::string(to_string(c.scenario))
                                                  + "' is not run by simulate (use sweep or phase-diagram)");
    }
    out << "wrote outputs under " << c.out_prefix << '\n';
    return ok;
}

inline int indicators(const Invocation& inv, std::ostream& out, std::ostream& err) {
    require_seed(inv);
    const auto c = load(inv, err);
    validate(c);
    GraphSpec g = c.graph;
    const auto seed = replica_seed(c.seed, 0);
    g.seed = derive_seed(seed, 100);
    auto topo = std::make_shared<const Topology>(decaynet::generate(g));
    SimState state(topo, c.params, derive_seed(seed, 200));

    std::vector<ExcessSample> hist;
    const std::uint64_t hist_stride = 10ULL * c.params.tau;
    RunOptions ro;
    ro.max_steps = horizon(c);
    ro.record_stride = c.record_stride;
    ro.on_record = [&](const SimState& s) {
        if (s.time() % hist_stride == 0) hist.push_back(excess_stats(s));
    };
    const auto ts = run(state, ro);
    write_indicators_csv(ts, c.params.tau, output_path(c.out_prefix, files::indicators));
    write_histogram_csv(hist, output_path(c.out_prefix, files::histogram));
    if (const auto crash = detect_crash(ts, CrashMethod::excess_zero_cross, 10ULL * c.params.tau))
        out << "t_c_numeric = " << crash->t_c_numeric << "\ndrop_size = " << format_decimal(crash->drop_size) << '\n';
    else
        out << "t_c_numeric = none\n";
    return ok;
}

inline std::string lifetime_text(const meanfield::Lifetime& life) {
    if (!life.is_finite()) return "inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << life.steps();
    return os.str();
}

inline int meanfield_cmd(const Invocation& inv, std::ostream& out, std::ostream& err) {
    const auto c = load(inv, err);
    const auto mp = mf_params(c);
    const auto life = meanfield::t_c_analytic(c.params.th, c.params.p, c.params.q);
    out << "t_c = " << lifetime_text(life) << '\n';
    const auto fp = meanfield::solve_a(mp, c.params.p_link > 0.0);
    out << "a_low = " << format_decimal(fp.branch_low) << "\na_high = " << format_decimal(fp.branch_high)
        << "\nroots =";
    for (const auto& r : fp.roots) out << ' ' << format_decimal(r.value) << (r.stable ? "(stable)" : "(unstable)");
    out << '\n';

    const double end = life.is_finite() ? 3.0 * life.steps() : static_cast<double>(kDefaultHorizon);
    std::vector<double> times;
    constexpr int samples = 300;
    for (int i = 0; i <= samples; ++i) times.push_back(end * i / samples);
    const auto traj = fn_trajectory(mp, times, c.params.p_link > 0.0);
    const auto path = output_path(c.out_prefix, files::trajectory);
    meanfield::write_trajectory_csv(traj, path);
    return ok;
}

inline int sweep_cmd(const Invocation& inv, std::ostream& out, std::ostream& err) {
    require_seed(inv);
    const auto c = load(inv, err);
    if (c.scenario != Scenario::sweep_p && c.scenario != Scenario::sweep_q && c.scenario != Scenario::sweep_th)
        throw ParameterError("scenario.name", "sweep needs sweep_p, sweep_q or sweep_th");
    const auto res = sweep(c);
    write_sweep(res, c.out_prefix);
    for (const auto& p : res.points)
        out << "param = " << format_decimal(p.param) << "  tc_mean = " << format_decimal(p.tc_mean)
            << "  tc_analytic = " << format_decimal(p.tc_analytic) << "  censored = " << p.censored_count << '\n';
    return ok;
}

inline int phase_diagram_cmd(const Invocation& inv, std::ostream& out, std::ostream& err) {
    const auto c = load(inv, err);
    if (c.grid.points < 20) throw ParameterError("scenario.grid_points", "phase diagram needs >= 20 points per axis");
    meanfield::PhaseGridSpec spec;
    spec.k = c.graph.mean_degree;
    spec.m = static_cast<unsigned>(std::floor(c.params.th * spec.k + 1e-12));
    spec.tau = c.params.tau;
    spec.points_p1 = spec.points_p2 = spec.points_p3 = c.grid.points;
    const auto d = meanfield::phase_diagram(spec);
    meanfield::write_phase_diagram_csv(d, output_path(c.out_prefix, files::phase_diagram));
    std::size_t bistable = 0, spinodal = 0, degenerate = 0;
    for (const auto& cell : d.cells) {
        bistable += cell.n_roots == 3;
        spinodal += cell.spinodal;
        degenerate += cell.degenerate;
    }
    out << "cells = " << d.cells.size() << "\nbistable = " << bistable << "\nspinodal = " << spinodal
        << "\ndegenerate = " << degenerate << '\n';
    return ok;
}

} // namespace detail

/// Entry point of the command-line tool. Exit status: 0 success, 1 config or
/// validation error, 2 runtime or convergence error.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Decaying dynamical networks under persistent random attack"};
    app.footer("\n" + config::key_reference());
    app.require_subcommand(1);

    Invocation inv;
    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const Invocation&, std::ostream&, std::ostream&);
    };
    const Sub subs[] = {
        {"generate", "generate the initial topology and write its edge list", detail::generate},
        {"simulate", "run the configured scenario (timeseries, phase_flip, meanfield_compare)", detail::simulate},
        {"indicators", "simulate one replica and write the early-warning indicators", detail::indicators},
        {"meanfield", "solve the mean-field equations and print the analytic lifetime", detail::meanfield_cmd},
        {"sweep", "lifetime sweep over p, q or th", detail::sweep_cmd},
        {"phase-diagram", "q = 1 root-count grid over (p1, r, p_link)", detail::phase_diagram_cmd},
    };
    for (const auto& s : subs) {
        auto* sc = app.add_subcommand(s.name, s.help);
        sc->add_option("--config", inv.config_path, "flat dotted-key config file");
        sc->add_option("--set", inv.overrides, "override: key=value (repeatable)")->take_all()->allow_extra_args(false);
        sc->add_option("--seed", inv.seed, "master seed (required for stochastic subcommands)");
        sc->add_option("--out", inv.out, "output path prefix")->capture_default_str();
        sc->add_flag("--quiet", inv.quiet, "suppress progress on standard error");
        sc->footer("\n" + config::key_reference());
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return config_error;
    }

    for (const auto& s : subs) {
        if (!app.got_subcommand(s.name)) continue;
        inv.subcommand = s.name;
        try {
            return s.fn(inv, out, err);
        } catch (const ParameterError& e) {
            err << "error: " << e.what() << '\n';
            return config_error;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return runtime_error;
        }
    }
    return config_error;
}

} // namespace decaynet::cli
