#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "csv.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "stats.hpp"

namespace decaynet {

/// Fixed-bin histogram of the per-node excess over [-th, 1 - th].
struct ExcessHistogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::size_t> counts;

    double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }

    std::size_t total() const {
        std::size_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }
};

inline constexpr std::size_t kExcessBins = 50;

inline ExcessHistogram excess_histogram(std::span<const double> values, double th, std::size_t bins = kExcessBins) {
    ExcessHistogram h;
    h.lo = -th;
    h.hi = 1.0 - th;
    h.counts.assign(bins, 0);
    const double w = h.bin_width();
    for (double e : values) {
        auto b = static_cast<std::ptrdiff_t>(std::floor((e - h.lo) / w));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

/// Snapshot of the per-node excess e_i = (active neighbors / k_i(0)) - th.
/// Its mean is indicator II.
struct ExcessSample {
    std::uint64_t t = 0;
    std::vector<double> values;
    Moments summary;
    ExcessHistogram histogram;
};

/// Over every living node.
inline ExcessSample excess_stats(const SimState& state) {
    ExcessSample s;
    s.t = state.time();
    state.excess_values(s.values);
    if (s.values.empty()) throw EmptyPopulationError("no living node at t = " + std::to_string(s.t));
    s.summary = sample_moments(s.values);
    s.histogram = excess_histogram(s.values, state.params().th);
    return s;
}

enum class WindowAnchor {
    forward,  ///< value at t covers [t, t + window)
    backward, ///< value at t covers (t - window, t]
};

/// Values of a windowed statistic; values[i] belongs to series position first + i.
struct WindowedSeries {
    std::size_t first = 0;
    std::vector<double> values;

    /// Value at series position `pos`, if defined there.
    std::optional<double> at(std::size_t pos) const {
        if (pos < first || pos - first >= values.size()) return std::nullopt;
        return values[pos - first];
    }
};

/// Indicator I: moving sample standard deviation over `window` positions.
/// The forward anchor leaves the last window - 1 positions undefined, the
/// backward anchor the first window - 1.
inline WindowedSeries moving_std(std::span<const double> series, std::size_t window,
                                 WindowAnchor anchor = WindowAnchor::forward) {
    if (window < 2) throw SizeError("moving window must be >= 2");
    if (series.size() < window) throw SizeError("series shorter than moving window");
    WindowedSeries out;
    out.first = anchor == WindowAnchor::forward ? 0 : window - 1;
    out.values.resize(series.size() - window + 1);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = sample_std(series.subspan(i, window));
    return out;
}

enum class CrashMethod {
    excess_zero_cross, ///< first record with indicator II <= 0
    max_drop,          ///< largest single-record decrease of f_n
};

inline std::string_view to_string(CrashMethod m) {
    return m == CrashMethod::excess_zero_cross ? "excess_zero_cross" : "max_drop";
}

struct CrashReport {
    std::uint64_t t_c_numeric = 0;
    CrashMethod method = CrashMethod::excess_zero_cross;
    /// f_n just before the crash minus the minimum of f_n over the plateau window.
    double drop_size = 0.0;
};

inline std::optional<std::size_t> first_non_positive(std::span<const double> series) {
    for (std::size_t i = 0; i < series.size(); ++i)
        if (series[i] <= 0.0) return i;
    return std::nullopt;
}

/// Index i maximizing series[i-1] - series[i], if any decrease exists.
inline std::optional<std::size_t> largest_drop(std::span<const double> series) {
    std::optional<std::size_t> best;
    double best_drop = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double d = series[i - 1] - series[i];
        if (d > best_drop) {
            best_drop = d;
            best = i;
        }
    }
    return best;
}

/// Crash detection on a recorded trajectory. `plateau_steps` is the length of
/// the post-crash window, in simulation steps, used for the drop size.
/// Returns nullopt when no crash is found.
inline std::optional<CrashReport> detect_crash(const TimeSeries& ts, CrashMethod method, std::uint64_t plateau_steps) {
    if (ts.size() == 0) throw SizeError("empty time series");
    const auto fn = ts.f_n();
    std::optional<std::size_t> idx;
    if (method == CrashMethod::excess_zero_cross) {
        idx = first_non_positive(ts.excess_mean());
    } else {
        idx = largest_drop(fn);
    }
    if (!idx) return std::nullopt;

    CrashReport rep;
    rep.method = method;
    rep.t_c_numeric = ts.steps[*idx].t;
    const double before = fn[*idx > 0 ? *idx - 1 : 0];
    double low = fn[*idx];
    for (std::size_t i = *idx; i < ts.size() && ts.steps[i].t <= rep.t_c_numeric + plateau_steps; ++i)
        low = std::min(low, fn[i]);
    rep.drop_size = std::clamp(before - low, 0.0, 1.0);
    return rep;
}

/// Writes `t,ind1,ind2,var,skew,kurt`; ind1 is the forward moving std with the
/// given window and is left empty where undefined.
inline void write_indicators_csv(const TimeSeries& ts, std::size_t window, const std::filesystem::path& path) {
    const auto fn = ts.f_n();
    WindowedSeries ind1;
    if (fn.size() >= window && window >= 2) ind1 = moving_std(fn, window);
    CsvWriter w(path, "t,ind1,ind2,var,skew,kurt");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        w.field(ts.steps[i].t);
        if (const auto v = ind1.at(i))
            w.field(*v);
        else
            w.empty();
        const auto& m = ts.excess[i];
        w.field(m.mean).field(m.variance).field(m.skewness).field(m.kurtosis);
        w.end_row();
    }
    w.close();
}

inline void write_histogram_csv(std::span<const ExcessSample> samples, const std::filesystem::path& path) {
    CsvWriter w(path, "t,bin_lo,bin_hi,count");
    for (const auto& s : samples) {
        const auto& h = s.histogram;
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            w.field(s.t)
                .field(h.lo + h.bin_width() * static_cast<double>(b))
                .field(h.lo + h.bin_width() * static_cast<double>(b + 1))
                .field(static_cast<std::uint64_t>(h.counts[b]));
            w.end_row();
        }
    }
    w.close();
}

} // namespace decaynet
