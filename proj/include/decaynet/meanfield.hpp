#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "csv.hpp"
#include "errors.hpp"

namespace decaynet::meanfield {

/// Probability that at most m of k neighbors are active when each one is
/// independently inactive with probability a:
///   sum_{j=0}^{m} C(k, j) (1-a)^j a^(k-j).
inline double damage_prob_sum(unsigned k, unsigned m, double a) {
    if (m > k) throw DomainError("damage probability needs m <= k");
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("damage probability needs a in [0, 1]");
    if (m == k) return 1.0;
    if (a == 0.0) return 0.0;
    if (a == 1.0) return 1.0;
    // term_j = C(k,j) (1-a)^j a^(k-j); consecutive ratio (k-j)/(j+1) * (1-a)/a.
    const double odds = (1.0 - a) / a;
    double term = std::pow(a, static_cast<double>(k));
    if (term > 0.0) {
        double sum = term;
        for (unsigned j = 0; j < m; ++j) {
            term *= static_cast<double>(k - j) / static_cast<double>(j + 1) * odds;
            sum += term;
        }
        return std::min(sum, 1.0);
    }
    // a^k underflowed; fall back to log-space terms.
    double sum = 0.0;
    const double la = std::log(a), lb = std::log1p(-a);
    for (unsigned j = 0; j <= m; ++j) {
        const double lc = std::lgamma(k + 1.0) - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0);
        sum += std::exp(lc + j * lb + (k - j) * la);
    }
    return std::min(sum, 1.0);
}

/// Real-k continuation of the binomial lower tail: I_a(k - m, m + 1).
inline double damage_prob_beta(double k, unsigned m, double a) {
    if (!(k >= static_cast<double>(m))) throw DomainError("damage probability needs m <= k");
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("damage probability needs a in [0, 1]");
    if (k == static_cast<double>(m)) return 1.0;
    if (a == 0.0) return 0.0;
    if (a == 1.0) return 1.0;
    return boost::math::ibeta(k - static_cast<double>(m), static_cast<double>(m) + 1.0, a);
}

enum class DegreeMode {
    continuous, ///< beta continuation for non-integral k
    rounded,    ///< round k to the nearest integer and sum
};

inline double damage_prob(double k, unsigned m, double a, DegreeMode mode = DegreeMode::continuous) {
    if (mode == DegreeMode::rounded || k == std::floor(k)) {
        const double kr = std::round(k);
        if (kr < 0.0) throw DomainError("degree must be non-negative");
        return damage_prob_sum(static_cast<unsigned>(kr), m, a);
    }
    return damage_prob_beta(k, m, a);
}

/// Mean-field parameters; `k` is the representative (homogeneous) degree.
struct MFParams {
    double p = 0.0;
    double r = 0.0;
    double q = 1.0;
    std::uint32_t tau = 1;
    double th = 0.5;
    double p_link = 0.0;
    double k = 10.0;
    /// Overrides floor(th * k); used to hold m at its initial value while k decays.
    std::optional<unsigned> threshold_count;

    unsigned m() const {
        return threshold_count.value_or(static_cast<unsigned>(std::floor(th * k + 1e-12)));
    }
};

inline void validate(const MFParams& mp) {
    auto unit = [](const char* key, double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw ParameterError(key, "must be in [0, 1], got " + format_decimal(v));
    };
    unit("dynamics.p", mp.p);
    unit("dynamics.r", mp.r);
    unit("dynamics.q", mp.q);
    unit("dynamics.p_link", mp.p_link);
    if (!(mp.th >= 0.0 && mp.th <= 1.0)) throw ParameterError("dynamics.th", "must be in [0, 1]");
    if (!(mp.k > 0.0) || !std::isfinite(mp.k)) throw ParameterError("graph.mean_degree", "must be > 0");
}

struct SolverOptions {
    double tolerance = 1e-10;
    std::uint64_t max_iterations = 100000;
    std::size_t scan_points = 10000;
    double fd_step = 1e-6;
    double damping = 1.0; ///< a <- a + damping * (G(a) - a)
    DegreeMode mode = DegreeMode::continuous;
};

/// Self-consistency map G(a) = p + r (1 - p) E(k, m, a'), with a' = a
/// or, when link failures are included, a' = a + p_link - a p_link.
class SelfConsistency {
public:
    SelfConsistency(const MFParams& mp, bool with_links, DegreeMode mode = DegreeMode::continuous)
        : mp_(mp), m_(mp.m()), with_links_(with_links), mode_(mode) {
        validate(mp_);
        if (static_cast<double>(m_) > mp_.k) throw DomainError("threshold count exceeds degree");
    }

    double operator()(double a) const {
        const double eff = with_links_ ? a + mp_.p_link - a * mp_.p_link : a;
        return mp_.p + mp_.r * (1.0 - mp_.p) * damage_prob(mp_.k, m_, std::clamp(eff, 0.0, 1.0), mode_);
    }

    unsigned m() const noexcept { return m_; }

private:
    MFParams mp_;
    unsigned m_;
    bool with_links_;
    DegreeMode mode_;
};

struct Root {
    double value = 0.0;
    bool stable = false;
};

struct FixedPointResult {
    std::vector<Root> roots;  ///< ascending
    double branch_low = 0.0;  ///< iteration limit from a = 0
    double branch_high = 0.0; ///< iteration limit from a = 1
    std::uint64_t iterations = 0;
    double residual = 0.0;    ///< largest |a - G(a)| over reported values
};

struct IterationResult {
    double value;
    std::uint64_t iterations;
    double residual;
};

/// Damped fixed-point iteration. Throws ConvergenceError past the iteration cap.
inline IterationResult iterate(const SelfConsistency& g, double start, const SolverOptions& opt = {}) {
    double a = start;
    for (std::uint64_t it = 1; it <= opt.max_iterations; ++it) {
        const double step = g(a) - a;
        a = std::clamp(a + opt.damping * step, 0.0, 1.0);
        if (std::fabs(step) <= opt.tolerance) return {a, it, std::fabs(g(a) - a)};
    }
    throw ConvergenceError("fixed-point iteration did not converge", std::fabs(g(a) - a));
}

inline double derivative(const SelfConsistency& g, double a, double h) {
    const double lo = std::max(0.0, a - h), hi = std::min(1.0, a + h);
    return (g(hi) - g(lo)) / (hi - lo);
}

/// All roots of a - G(a) on [0, 1] via a sign scan refined by bisection.
inline std::vector<Root> scan_roots(const SelfConsistency& g, const SolverOptions& opt = {}) {
    const std::size_t n = std::max<std::size_t>(opt.scan_points, 2);
    auto f = [&](double a) { return a - g(a); };
    auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };

    std::vector<Root> roots;
    auto add = [&](double a) {
        roots.push_back({a, std::fabs(derivative(g, a, opt.fd_step)) < 1.0});
    };
    double prev_a = 0.0;
    double prev_f = f(0.0);
    if (sign(prev_f) == 0) add(0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        const double a = static_cast<double>(i) / static_cast<double>(n);
        const double fa = f(a);
        const int s0 = sign(prev_f), s1 = sign(fa);
        if (s1 == 0) {
            add(a);
        } else if (s0 != 0 && s0 != s1) {
            double lo = prev_a, hi = a;
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (sign(f(mid)) == s0)
                    lo = mid;
                else
                    hi = mid;
            }
            add(0.5 * (lo + hi));
        }
        prev_a = a;
        prev_f = fa;
    }
    return roots;
}

inline FixedPointResult solve_a(const MFParams& mp, bool with_links, const SolverOptions& opt = {}) {
    const SelfConsistency g(mp, with_links, opt.mode);
    FixedPointResult res;
    const auto low = iterate(g, 0.0, opt);
    const auto high = iterate(g, 1.0, opt);
    res.branch_low = low.value;
    res.branch_high = high.value;
    res.iterations = low.iterations + high.iterations;
    res.roots = scan_roots(g, opt);
    res.residual = std::max(low.residual, high.residual);
    for (const auto& r : res.roots) res.residual = std::max(res.residual, std::fabs(r.value - g(r.value)));
    return res;
}

/// Low (fully functional start) branch only.
inline double low_branch(const MFParams& mp, bool with_links, const SolverOptions& opt = {}) {
    return iterate(SelfConsistency(mp, with_links, opt.mode), 0.0, opt).value;
}

struct Prediction {
    double t = 0.0;
    double k_t = 0.0; ///< decayed degree k exp(-(1-q) p t)
    double a_t = 0.0;
    double f_n = 0.0; ///< (1 - a_t) exp(-(1-q) p t)
};

/// Predicted active fraction at time t. The threshold count stays at
/// floor(th * k) while k(t) decays; once k(t) <= m every neighborhood is
/// critical and E = 1.
inline Prediction fn_prediction(const MFParams& mp, double t, bool with_links = false, const SolverOptions& opt = {}) {
    if (!(t >= 0.0)) throw DomainError("time must be non-negative");
    validate(mp);
    const double decay = std::exp(-(1.0 - mp.q) * mp.p * t);
    Prediction out;
    out.t = t;
    out.k_t = mp.k * decay;
    const unsigned m = mp.m();
    if (out.k_t <= static_cast<double>(m)) {
        out.a_t = mp.p + mp.r * (1.0 - mp.p);
    } else {
        MFParams at = mp;
        at.k = out.k_t;
        at.threshold_count = m;
        out.a_t = low_branch(at, with_links, opt);
    }
    out.f_n = (1.0 - out.a_t) * decay;
    return out;
}

/// Analytic lifetime; empty when the network never crashes (p = 0 or q = 1).
class Lifetime {
public:
    static Lifetime infinite() { return Lifetime(); }
    static Lifetime finite(double steps) { return Lifetime(steps); }

    bool is_finite() const noexcept { return steps_.has_value(); }
    double steps() const {
        if (!steps_) throw DomainError("infinite lifetime has no step count");
        return *steps_;
    }
    /// +inf for the infinite outcome.
    double value_or_inf() const noexcept { return steps_.value_or(std::numeric_limits<double>::infinity()); }

private:
    Lifetime() = default;
    explicit Lifetime(double s) : steps_(s) {}
    std::optional<double> steps_;
};

/// t_c = -ln(th) / (p (1 - q)).
inline Lifetime t_c_analytic(double th, double p, double q) {
    if (!(th > 0.0 && th <= 1.0)) throw DomainError("threshold must be in (0, 1]");
    if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0)) throw DomainError("p and q must be in [0, 1]");
    if (p == 0.0 || q == 1.0) return Lifetime::infinite();
    return Lifetime::finite(-std::log(th) / (p * (1.0 - q)));
}

// --- Phase diagram over (p1, p2 = r, p3 = p_link) with q = 1 ---

struct PhaseGridSpec {
    double k = 10.0;
    unsigned m = 5;
    std::uint32_t tau = 50;
    std::size_t points_p1 = 20;
    std::size_t points_p2 = 20;
    std::size_t points_p3 = 20;
    SolverOptions solver{};
};

struct PhaseCell {
    double p1 = 0, p2 = 0, p3 = 0;
    int n_roots = 0;
    double a_low = 0, a_high = 0;
    bool outer_stable = false;
    bool spinodal = false;   ///< a face neighbor has a different root count
    bool degenerate = false; ///< solver failed or root count outside {1, 3}
};

struct PhaseDiagram {
    std::size_t n1 = 0, n2 = 0, n3 = 0;
    std::vector<PhaseCell> cells; ///< index (i * n2 + j) * n3 + l

    const PhaseCell& at(std::size_t i, std::size_t j, std::size_t l) const { return cells[(i * n2 + j) * n3 + l]; }
};

/// Per-step internal failure probability whose tau-step survival gives p1.
inline double p_from_p1(double p1, std::uint32_t tau) {
    if (p1 >= 1.0) return 1.0;
    return std::min(1.0, -std::log1p(-p1) / static_cast<double>(tau));
}

inline PhaseCell evaluate_cell(double k, unsigned m, std::uint32_t tau, double p1, double p2, double p3,
                               const SolverOptions& solver) {
    PhaseCell c;
    c.p1 = p1;
    c.p2 = p2;
    c.p3 = p3;
    MFParams mp;
    mp.p = p_from_p1(p1, tau);
    mp.r = p2;
    mp.q = 1.0;
    mp.tau = tau;
    mp.p_link = p3;
    mp.k = k;
    mp.threshold_count = m;
    const SelfConsistency g(mp, true, solver.mode);
    const auto roots = scan_roots(g, solver);
    c.n_roots = static_cast<int>(roots.size());
    try {
        c.a_low = iterate(g, 0.0, solver).value;
        c.a_high = iterate(g, 1.0, solver).value;
    } catch (const ConvergenceError&) {
        c.degenerate = true;
        if (!roots.empty()) {
            c.a_low = roots.front().value;
            c.a_high = roots.back().value;
        }
    }
    if (c.n_roots != 1 && c.n_roots != 3) c.degenerate = true;
    c.outer_stable = !roots.empty() && roots.front().stable && roots.back().stable;
    return c;
}

inline PhaseDiagram phase_diagram(const PhaseGridSpec& spec, unsigned threads = 0) {
    if (spec.points_p1 < 2 || spec.points_p2 < 2 || spec.points_p3 < 2)
        throw ParameterError("scenario.grid_points", "phase grid needs at least 2 points per axis");
    if (spec.m > spec.k) throw DomainError("threshold count exceeds degree");
    PhaseDiagram d;
    d.n1 = spec.points_p1;
    d.n2 = spec.points_p2;
    d.n3 = spec.points_p3;
    d.cells.resize(d.n1 * d.n2 * d.n3);
    auto axis = [](std::size_t i, std::size_t n) { return static_cast<double>(i) / static_cast<double>(n - 1); };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t idx; (idx = next.fetch_add(1)) < d.cells.size();) {
            const std::size_t l = idx % d.n3, j = (idx / d.n3) % d.n2, i = idx / (d.n2 * d.n3);
            d.cells[idx] = evaluate_cell(spec.k, spec.m, spec.tau, axis(i, d.n1), axis(j, d.n2), axis(l, d.n3), spec.solver);
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    auto idx = [&](std::size_t i, std::size_t j, std::size_t l) { return (i * d.n2 + j) * d.n3 + l; };
    for (std::size_t i = 0; i < d.n1; ++i)
        for (std::size_t j = 0; j < d.n2; ++j)
            for (std::size_t l = 0; l < d.n3; ++l) {
                auto& c = d.cells[idx(i, j, l)];
                auto differs = [&](std::size_t i2, std::size_t j2, std::size_t l2) {
                    return d.cells[idx(i2, j2, l2)].n_roots != c.n_roots;
                };
                c.spinodal = (i > 0 && differs(i - 1, j, l)) || (i + 1 < d.n1 && differs(i + 1, j, l))
                             || (j > 0 && differs(i, j - 1, l)) || (j + 1 < d.n2 && differs(i, j + 1, l))
                             || (l > 0 && differs(i, j, l - 1)) || (l + 1 < d.n3 && differs(i, j, l + 1));
            }
    return d;
}

inline void write_phase_diagram_csv(const PhaseDiagram& d, const std::filesystem::path& path) {
    CsvWriter w(path, "p1,p2,p3,n_roots,a_low,a_high");
    for (const auto& c : d.cells) {
        w.field(c.p1).field(c.p2).field(c.p3).field(c.n_roots).field(c.a_low).field(c.a_high);
        w.end_row();
    }
    w.close();
}

inline void write_trajectory_csv(const std::vector<Prediction>& traj, const std::filesystem::path& path) {
    CsvWriter w(path, "t,k_t,a_t,fn_pred");
    for (const auto& p : traj) {
        w.field(p.t).field(p.k_t).field(p.a_t).field(p.f_n);
        w.end_row();
    }
    w.close();
}

} // namespace decaynet::meanfield
