// Acceptance suite: one PASS/FAIL line per criterion, tolerances as specified.
// Usage: acceptance [criterion ...]   (no arguments runs everything)

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "decaynet/cli.hpp"
#include "decaynet/experiment.hpp"

using namespace decaynet;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240617;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

ExperimentConfig fig4() {
    ExperimentConfig c;
    c.graph.kind = GraphKind::er;
    c.graph.n = 10000;
    c.graph.mean_degree = 10;
    c.params.p = 0.003;
    c.params.q = 0.99;
    c.params.r = 0.8;
    c.params.th = 0.5;
    c.params.tau = 50;
    c.replicas = 10;
    c.seed = kSeed;
    c.threads = 0;
    return c;
}

EnsembleResult crash_ensemble(const ExperimentConfig& c) {
    EnsembleOptions opt;
    opt.max_steps = horizon(c);
    opt.stop = StopRule::crash_detected;
    return run_ensemble(c, opt);
}

std::vector<double> crash_times(const EnsembleResult& e, std::size_t* censored = nullptr) {
    std::vector<double> t;
    std::size_t cens = 0;
    for (const auto& r : e.replicas) {
        if (r.crash)
            t.push_back(static_cast<double>(r.crash->t_c_numeric));
        else
            ++cens;
    }
    if (censored) *censored = cens;
    return t;
}

double mean_of(const std::vector<double>& v) { return sample_moments(v).mean; }

const EnsembleResult& fig4_ensemble() {
    static const EnsembleResult e = crash_ensemble(fig4());
    return e;
}

// Values of `series` at records whose time lies in [lo, hi].
std::vector<double> window(const TimeSeries& ts, const std::vector<double>& series, double lo, double hi) {
    std::vector<double> out;
    for (std::size_t i = 0; i < series.size() && i < ts.size(); ++i) {
        const auto t = static_cast<double>(ts.steps[i].t);
        if (t >= lo && t <= hi) out.push_back(series[i]);
    }
    return out;
}

Outcome c1() {
    auto c = fig4();
    GraphSpec g = c.graph;
    const auto seed = replica_seed(c.seed, 0);
    g.seed = derive_seed(seed, 100);
    const auto start = std::chrono::steady_clock::now();
    SimState s(std::make_shared<const Topology>(generate(g)), c.params, derive_seed(seed, 200));
    std::vector<double> t, y;
    for (std::uint64_t step = 0; step <= 11000; ++step) {
        const auto rec = step == 0 ? s.record() : s.step();
        t.push_back(static_cast<double>(rec.t));
        y.push_back(std::log(static_cast<double>(rec.n_alive) / static_cast<double>(s.initial_node_count())));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double rate = -ls_slope(t, y);
    const double target = (1 - c.params.q) * c.params.p;
    const double rel = std::fabs(rate - target) / target;
    return {rel <= 0.05 && secs < 300,
            "fitted rate " + num(rate) + " vs (1-q)p = " + num(target) + ", rel err " + num(100 * rel, 3) +
                "% (tol 5%), replica runtime " + num(secs, 3) + " s (target < 300 s)"};
}

Outcome c2() {
    std::size_t censored = 0;
    const auto tcs = crash_times(fig4_ensemble(), &censored);
    const double analytic = meanfield::t_c_analytic(0.5, 0.003, 0.99).steps();
    if (tcs.empty()) return {false, "no replica crashed"};
    const double m = mean_of(tcs);
    const double rel = (m - analytic) / analytic;
    return {std::fabs(rel) <= 0.15 && censored == 0,
            "mean zero-crossing t_c " + num(m, 6) + " over " + std::to_string(tcs.size()) + " replicas (" +
                std::to_string(censored) + " censored) vs analytic " + num(analytic, 6) + ", rel dev " +
                num(100 * rel, 3) + "% (tol 15%)"};
}

Outcome c3() {
    ExperimentConfig c = fig4();
    c.graph.mean_degree = 6;
    c.params.q = 0.0;
    c.scenario = Scenario::sweep_p;
    c.grid = {0.01, 0.05, 5};
    const auto res = sweep(c);
    std::vector<double> prod;
    std::string cells;
    std::size_t censored = 0;
    for (const auto& p : res.points) {
        censored += p.censored_count;
        prod.push_back(p.tc_mean * p.param);
        cells += " " + num(p.param, 2) + ":" + num(p.tc_mean * p.param, 3);
    }
    const auto m = sample_moments(prod);
    const double cv = std::sqrt(m.variance) / m.mean;
    return {cv <= 0.20 && censored == 0 && std::isfinite(cv),
            "t_c*p per p =" + cells + "; CV " + num(100 * cv, 3) + "% (tol 20%), censored " + std::to_string(censored)};
}

Outcome c4() {
    ExperimentConfig er = fig4();
    er.params.p = 0.001;
    er.params.q = 0.995;
    ExperimentConfig ba = er;
    ba.graph.kind = GraphKind::ba;
    std::size_t cens_er = 0, cens_ba = 0;
    const auto t_er = crash_times(crash_ensemble(er), &cens_er);
    const auto t_ba = crash_times(crash_ensemble(ba), &cens_ba);
    const double m_er = t_er.empty() ? NAN : mean_of(t_er), m_ba = t_ba.empty() ? NAN : mean_of(t_ba);
    return {m_ba - m_er > 0 && cens_er == 0,
            "mean t_c BA " + num(m_ba, 6) + " (" + std::to_string(cens_ba) + " censored) - ER " + num(m_er, 6) + " (" +
                std::to_string(cens_er) + " censored) = " + num(m_ba - m_er, 5) + " (must be > 0)"};
}

Outcome c5() {
    ExperimentConfig c = fig4();
    c.params.th = 0.7;
    std::vector<double> drops, gaps;
    std::string table;
    for (double r : {0.2, 0.3, 0.4, 0.5, 0.6}) {
        c.params.r = r;
        const auto pt = summarize_point(r, c.params, crash_ensemble(c).replicas);
        const double gap = std::fabs(c.params.th - r);
        drops.push_back(pt.drop_mean);
        gaps.push_back(gap);
        table += " r=" + num(r, 2) + ":drop " + num(pt.drop_mean, 3) + "/|Th-r| " + num(gap, 2) + "(dev " +
                 num(100 * (pt.drop_mean - gap) / gap, 3) + "%)";
    }
    const double rho = spearman(drops, gaps);
    return {rho >= 0.9, "Spearman " + num(rho, 3) + " (need >= 0.9);" + table};
}

// Per-replica early-warning test: max of `stat` over [t_c - 10 tau, t_c]
// against `factor` times its median over [0, t_c / 2].
Outcome early_warning(const char* what, double factor,
                      const std::function<std::vector<double>(const TimeSeries&)>& stat) {
    const double tau = 50;
    int hits = 0, crashed = 0;
    std::string per;
    for (const auto& r : fig4_ensemble().replicas) {
        if (!r.crash) {
            per += " -";
            continue;
        }
        ++crashed;
        const double tc = static_cast<double>(r.crash->t_c_numeric);
        const auto series = stat(r.series);
        const auto late = window(r.series, series, tc - 10 * tau, tc);
        const auto base = window(r.series, series, 0, tc / 2);
        if (late.empty() || base.empty()) {
            per += " ?";
            continue;
        }
        const double peak = *std::max_element(late.begin(), late.end());
        const double med = median(base);
        const bool hit = peak > factor * med;
        hits += hit;
        per += " " + num(peak / med, 3);
    }
    return {hits >= 8, std::to_string(hits) + "/10 replicas with window max > " + num(factor, 2) + "x baseline median (" +
                           what + ", ratios:" + per + ") (need >= 8, crashed " + std::to_string(crashed) + ")"};
}

Outcome c6() {
    return early_warning("excess kurtosis", 1.0, [](const TimeSeries& ts) {
        std::vector<double> k;
        for (const auto& m : ts.excess) k.push_back(m.kurtosis);
        return k;
    });
}

Outcome c7() {
    return early_warning("forward moving std of f_n, window tau", 2.0, [](const TimeSeries& ts) {
        // Forward anchor: values[i] covers records [i, i + tau), defined from position 0.
        return moving_std(ts.f_n(), 50, WindowAnchor::forward).values;
    });
}

Outcome c8() {
    const auto start = std::chrono::steady_clock::now();
    double worst_enum = 0, worst_beta = 0, worst_alg = 0;
    for (unsigned k = 0; k <= 20; ++k)
        for (int ai = 0; ai <= 10; ++ai) {
            const double a = ai / 10.0;
            std::vector<double> by_active(k + 1, 0.0);
            for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
                double prob = 1.0;
                for (unsigned b = 0; b < k; ++b) prob *= (mask >> b & 1u) ? (1.0 - a) : a;
                by_active[static_cast<unsigned>(std::popcount(mask))] += prob;
            }
            double cdf = 0;
            for (unsigned m = 0; m <= k; ++m) {
                cdf += by_active[m];
                worst_enum = std::max(worst_enum, std::fabs(meanfield::damage_prob_sum(k, m, a) - cdf));
                if (k > 0)
                    worst_beta = std::max(worst_beta, std::fabs(meanfield::damage_prob_beta(k, m, a) -
                                                                meanfield::damage_prob_sum(k, m, a)));
            }
        }
    for (double th = 0.05; th <= 1.0; th += 0.05)
        for (double p : {1e-5, 1e-3, 0.003, 0.1})
            for (double q : {0.0, 0.5, 0.99, 0.9999}) {
                const double tc = meanfield::t_c_analytic(th, p, q).steps();
                const double ratio = std::exp(-(1 - q) * p * tc);
                worst_alg = std::max(worst_alg, std::fabs(ratio - th) / th);
            }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {worst_enum <= 1e-12 && worst_beta <= 1e-12 && worst_alg <= 1e-9,
            "max |E - enumeration| " + num(worst_enum, 3) + ", max |beta - sum| " + num(worst_beta, 3) +
                " (tol 1e-12); max rel |k(t_c)/k - Th| " + num(worst_alg, 3) + " (tol 1e-9); " + num(secs, 3) + " s"};
}

Outcome c9() {
    meanfield::PhaseGridSpec spec;
    spec.k = 10;
    spec.m = 5;
    spec.tau = 50;
    const auto start = std::chrono::steady_clock::now();
    const auto d = meanfield::phase_diagram(spec);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::size_t region = 0, three = 0, boundary = 0, flagged_boundary = 0, false_flags = 0;
    for (std::size_t i = 0; i < d.n1; ++i)
        for (std::size_t j = 0; j < d.n2; ++j)
            for (std::size_t l = 0; l < d.n3; ++l) {
                const auto& c = d.at(i, j, l);
                three += c.n_roots == 3;
                if (c.n_roots == 3 && c.outer_stable && std::fabs(c.a_high - c.a_low) > 0.1) ++region;
                bool edge = false;
                auto check = [&](std::size_t a, std::size_t b, std::size_t e) { edge |= d.at(a, b, e).n_roots != c.n_roots; };
                if (i > 0) check(i - 1, j, l);
                if (i + 1 < d.n1) check(i + 1, j, l);
                if (j > 0) check(i, j - 1, l);
                if (j + 1 < d.n2) check(i, j + 1, l);
                if (l > 0) check(i, j, l - 1);
                if (l + 1 < d.n3) check(i, j, l + 1);
                if (edge && c.n_roots == 3) {
                    ++boundary;
                    flagged_boundary += c.spinodal;
                }
                false_flags += c.spinodal != edge;
            }
    return {region > 0 && boundary > 0 && flagged_boundary == boundary && false_flags == 0 && secs < 60,
            std::to_string(region) + " bistable cells (3 roots, outer stable, gap > 0.1) of " +
                std::to_string(three) + " with 3 roots; " + std::to_string(flagged_boundary) + "/" +
                std::to_string(boundary) + " region boundary cells flagged spinodal, " + std::to_string(false_flags) +
                " misflagged; 20^3 grid in " + num(secs, 3) + " s (target < 60 s)"};
}

Outcome c10() {
    ExperimentConfig c = fig4();
    c.params.p_birth = 3e-5;
    c.replicas = 3;
    EnsembleOptions opt;
    opt.max_steps = 10000;
    const auto ens = run_ensemble(c, opt);
    double worst = 0;
    for (const auto& r : ens.replicas)
        for (const auto& s : r.series.steps)
            worst = std::max(worst, std::fabs(static_cast<double>(s.n_alive) - 1e4) / 1e4);
    return {worst <= 0.05, "max |n_alive - N0|/N0 over t <= 10^4, 3 replicas: " + num(100 * worst, 3) + "% (tol 5%)"};
}

struct FlipRuns {
    std::map<double, EnsembleResult> by_q;
};

const FlipRuns& flip_runs() {
    static const FlipRuns runs = [] {
        FlipRuns f;
        ExperimentConfig c;
        c.graph.kind = GraphKind::ba;
        c.graph.n = 1000;
        c.graph.mean_degree = 3;
        c.params.p = 0.004;
        c.params.r = 0.8;
        c.params.th = 0.5;
        c.params.tau = 50;
        c.replicas = 5;
        c.record_stride = 10;
        c.max_steps = kPhaseFlipMinSteps;
        c.seed = kSeed;
        for (double q : {0.999, 0.9999, 0.999995}) {
            c.params.q = q;
            f.by_q.emplace(q, phase_flip_scenario(c));
        }
        return f;
    }();
    return runs;
}

Outcome c11() {
    std::vector<double> fq;
    std::string text;
    for (const auto& [q, ens] : flip_runs().by_q) {
        double s = 0;
        for (const auto& r : ens.replicas) s += final_quartile_mean(r.series);
        fq.push_back(s / static_cast<double>(ens.replicas.size()));
        text += " q=" + num(q, 7) + ":" + num(fq.back(), 4);
    }
    return {fq[0] < fq[1] && fq[1] < fq[2],
            "final-quartile mean f_n (5 replicas, 5e4 steps)" + text + " (must increase with q)"};
}

Outcome c12() {
    ExperimentConfig c = fig4();
    c.params.p_link = 0.003;
    std::size_t cens_link = 0, cens_base = 0;
    const auto t_link = crash_times(crash_ensemble(c), &cens_link);
    const auto t_base = crash_times(fig4_ensemble(), &cens_base);
    const double m_link = t_link.empty() ? NAN : mean_of(t_link), m_base = t_base.empty() ? NAN : mean_of(t_base);

    meanfield::MFParams mp = mf_params(fig4());
    const double a0 = meanfield::solve_a(mp, true).branch_low;
    mp.p_link = 0.003;
    const double a1 = meanfield::solve_a(mp, true).branch_low;
    return {m_link < m_base && cens_link == 0 && a1 >= a0,
            "mean t_c with links " + num(m_link, 6) + " vs baseline " + num(m_base, 6) + "; fixed point a(p_l=0.003) " +
                num(a1, 10) + " >= a(p_l=0) " + num(a0, 10)};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = ss.str();
    }
    return files;
}

Outcome c13() {
    const auto root = fs::temp_directory_path() / "decaynet_acceptance_determinism";
    fs::remove_all(root);
    const std::string common = "graph.n = 400\ngraph.mean_degree = 6\ndynamics.p = 0.01\ndynamics.q = 0.9\n"
                               "dynamics.tau = 5\nsim.replicas = 2\n";
    struct Case {
        std::string name, command, extra;
    };
    const std::vector<Case> cases = {
        {"generate", "generate", "graph.kind = ba\n"},
        {"timeseries", "simulate", "sim.max_steps = 400\n"},
        {"phase_flip", "simulate", "scenario.name = phase_flip\ngraph.kind = ba\ngraph.mean_degree = 3\nsim.replicas = 1\n"
                                   "sim.record_stride = 50\ndynamics.q = 0.999\ndynamics.p = 0.004\n"},
        {"meanfield_compare", "simulate", "scenario.name = meanfield_compare\ngraph.kind = regular\nsim.max_steps = 600\n"},
        {"indicators", "indicators", "sim.max_steps = 300\n"},
        {"sweep_p", "sweep", "scenario.name = sweep_p\nscenario.grid_start = 0.01\nscenario.grid_stop = 0.03\n"
                             "scenario.grid_points = 3\n"},
        {"sweep_q", "sweep", "scenario.name = sweep_q\nscenario.grid_start = 0.5\nscenario.grid_stop = 0.9\n"
                             "scenario.grid_points = 2\n"},
        {"sweep_th", "sweep", "scenario.name = sweep_th\nscenario.grid_start = 0.3\nscenario.grid_stop = 0.6\n"
                              "scenario.grid_points = 2\n"},
        {"meanfield", "meanfield", ""},
        {"phase_diagram", "phase-diagram", "scenario.grid_points = 20\n"},
    };
    std::size_t compared = 0;
    std::vector<std::string> bad;
    for (const auto& cs : cases) {
        const auto dir = root / cs.name;
        fs::create_directories(dir);
        const auto cfg = dir / "run.cfg";
        std::ofstream(cfg) << common << cs.extra;
        for (const char* run : {"a", "b"}) {
            const std::string out = (dir / run).string() + "/";
            const std::string cfg_s = cfg.string();
            std::vector<const char*> argv = {"decaynet", cs.command.c_str(), "--config", cfg_s.c_str(), "--seed", "7",
                                             "--quiet", "--out", out.c_str()};
            std::ostringstream o, e;
            if (cli::parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), o, e) != 0) {
                bad.push_back(cs.name + " (exit: " + e.str() + ")");
                break;
            }
        }
        if (!fs::exists(dir / "b")) continue;
        const auto a = read_tree(dir / "a"), b = read_tree(dir / "b");
        if (a.empty() || a != b) bad.push_back(cs.name);
        compared += a.size();
    }
    std::string list;
    for (const auto& b : bad) list += " " + b;
    return {bad.empty(), std::to_string(cases.size()) + " scenarios, " + std::to_string(compared) +
                             " CSV/edge files compared byte for byte" + (bad.empty() ? "" : "; differing:" + list)};
}

// --- Spec examples that are not acceptance criteria; reported, not gated. ---

Outcome e_regular_lifetime() {
    ExperimentConfig c = fig4();
    c.graph.kind = GraphKind::regular;
    c.replicas = 5;
    std::size_t cens = 0;
    const auto t = crash_times(crash_ensemble(c), &cens);
    const double rel = t.empty() ? NAN : (mean_of(t) - 23104.9) / 23104.9;
    return {std::fabs(rel) <= 0.15, "random regular k=10, Fig. 4 parameters: mean t_c " +
                                        (t.empty() ? std::string("none") : num(mean_of(t), 6)) + ", rel dev " +
                                        num(100 * rel, 3) + "% (tol 15%)"};
}

Outcome e_regular_tracks_better() {
    double mae[2];
    int idx = 0;
    for (auto kind : {GraphKind::er, GraphKind::regular}) {
        ExperimentConfig c = fig4();
        c.graph.kind = kind;
        c.replicas = 5;
        c.max_steps = 12000;
        c.record_stride = 10;
        mae[idx++] = meanfield_compare(c).mean_abs_error;
    }
    return {mae[1] < mae[0], "mean |f_n sim - f_n pred| over 12000 steps: regular " + num(mae[1], 4) + " vs ER " +
                                 num(mae[0], 4) + " (regular must be smaller)"};
}

Outcome e_threshold_ratio() {
    ExperimentConfig c = fig4();
    c.scenario = Scenario::sweep_th;
    c.grid = {0.2, 0.5, 2};
    c.replicas = 5;
    const auto res = sweep(c);
    const double ratio = res.points[0].tc_mean / res.points[1].tc_mean;
    const double expected = std::log(0.2) / std::log(0.5);
    const double rel = (ratio - expected) / expected;
    return {std::fabs(rel) <= 0.25, "t_c(Th=0.2)/t_c(Th=0.5) = " + num(ratio, 4) + " vs " + num(expected, 4) +
                                        ", rel dev " + num(100 * rel, 3) + "% (tol 25%)"};
}

Outcome e_envelope_rate() {
    const auto& ens = flip_runs().by_q.at(0.9999);
    std::vector<double> rates;
    for (const auto& r : ens.replicas) {
        const std::size_t block = 250; // records, i.e. 2500 steps at stride 10
        std::vector<double> t, y;
        // The first block holds the all-active start and is skipped.
        for (std::size_t b = block; b + block <= r.series.size(); b += block) {
            double peak = 0;
            for (std::size_t i = b; i < b + block; ++i) peak = std::max(peak, r.series.steps[i].f_n);
            t.push_back(static_cast<double>(r.series.steps[b + block / 2].t));
            y.push_back(std::log(peak));
        }
        rates.push_back(-ls_slope(t, y));
    }
    const double rate = mean_of(rates), target = (1 - 0.9999) * 0.004;
    const double rel = (rate - target) / target;
    return {std::fabs(rel) <= 0.30, "flip-envelope decay rate " + num(rate, 4) + " vs (1-q)p " + num(target, 4) +
                                        ", rel dev " + num(100 * rel, 3) + "% (tol 30%)"};
}

Outcome e_abrupt_collapse() {
    ExperimentConfig c = fig4();
    c.params.p = 0.001;
    c.params.q = 0.995;
    c.replicas = 3;
    const auto ens = crash_ensemble(c);
    std::string text;
    bool ok = true;
    for (const auto& r : ens.replicas) {
        ok &= r.crash && r.crash->drop_size > 0.2;
        text += " " + (r.crash ? "t_c " + std::to_string(r.crash->t_c_numeric) + " drop " + num(r.crash->drop_size, 3)
                               : std::string("none"));
    }
    return {ok, "Fig. 1 parameters, f_n drop over the 10 tau plateau:" + text + " (need a crash with drop > 0.2)"};
}

Outcome e_magnitude_vs_threshold() {
    ExperimentConfig c = fig4();
    c.params.r = 0.2;
    c.replicas = 5;
    std::vector<double> drops, gaps;
    std::string table;
    for (double th : {0.3, 0.4, 0.5, 0.6, 0.7}) {
        c.params.th = th;
        const auto pt = summarize_point(th, c.params, crash_ensemble(c).replicas);
        drops.push_back(pt.drop_mean);
        gaps.push_back(std::fabs(th - c.params.r));
        table += " Th=" + num(th, 2) + ":drop " + num(pt.drop_mean, 3);
    }
    const double rho = spearman(drops, gaps);
    return {rho >= 0.9, "r = 0.2, Th varied: Spearman(drop, |Th-r|) " + num(rho, 3) + " (need >= 0.9);" + table};
}

struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Entry> criteria = {
        {1, "exponential decay of living nodes", c1},
        {2, "lifetime formula vs indicator II zero crossing", c2},
        {3, "hyperbolic t_c(p) law at q = 0", c3},
        {4, "BA more robust than ER", c4},
        {5, "crash magnitude vs |Th - r|", c5},
        {6, "kurtosis early warning", c6},
        {7, "indicator I rise before crash", c7},
        {8, "mean-field internals", c8},
        {9, "hysteresis region and spinodals", c9},
        {10, "birth-balanced stability", c10},
        {11, "phase flipping decays faster for smaller q", c11},
        {12, "link failures shorten the lifetime", c12},
        {13, "determinism of scenario outputs", c13},
    };
    const std::vector<Entry> examples = {
        {101, "regular graph lifetime within 15% of analytic", e_regular_lifetime},
        {102, "regular tracks the mean-field f_n better than ER", e_regular_tracks_better},
        {103, "threshold 0.5 -> 0.2 lifetime ratio", e_threshold_ratio},
        {104, "flip-envelope decay rate at q = 0.9999", e_envelope_rate},
        {105, "abrupt collapse at Fig. 1 parameters", e_abrupt_collapse},
        {106, "crash magnitude vs |Th - r| with Th varied", e_magnitude_vs_threshold},
    };

    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto selected = [&](int id) { return only.empty() || only.count(id); };

    int failed = 0, passed = 0, ex_failed = 0;
    auto run = [&](const Entry& e, bool gated) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", gated ? "criterion" : "example", e.id,
                    e.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (gated) (o.pass ? passed : failed)++;
        else ex_failed += !o.pass;
    };

    for (const auto& e : criteria)
        if (selected(e.id)) run(e, true);
    if (only.empty() || std::any_of(only.begin(), only.end(), [](int i) { return i > 100; })) {
        std::printf("-- spec examples (reported, not gated) --\n");
        for (const auto& e : examples)
            if (selected(e.id)) run(e, false);
    }
    std::printf("criteria: %d passed, %d failed; examples failing: %d\n", passed, failed, ex_failed);
    return failed == 0 ? 0 : 1;
}
