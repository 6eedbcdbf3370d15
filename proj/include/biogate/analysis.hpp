#pragma once

// Logic-level classification, truth-table extraction and propagation delays
// over completed traces.

#include "biogate/common.hpp"
#include "biogate/dsl.hpp"
#include "biogate/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace biogate {

struct LogicThresholds {
    double low_max_v = 0.050;
    double high_min_v = 0.460;

    void check() const {
        if (!(low_max_v > 0.0 && low_max_v < high_min_v)) throw InvalidInput("logic thresholds need 0 < low_max < high_min");
    }
};

enum class LogicLevel { low, medium, high, indeterminate };

constexpr std::string_view to_string(LogicLevel level) noexcept {
    switch (level) {
        case LogicLevel::low: return "LOW";
        case LogicLevel::medium: return "MEDIUM";
        case LogicLevel::high: return "HIGH";
        case LogicLevel::indeterminate: return "INDETERMINATE";
    }
    return "?";
}

/// Magnitude based, so negative outputs of the three-input gate classify
/// like their positive counterparts. NaN is indeterminate.
inline LogicLevel classify_level(double v, const LogicThresholds& th = {}) {
    th.check();
    if (std::isnan(v)) return LogicLevel::indeterminate;
    const double m = std::fabs(v);
    if (m <= th.low_max_v) return LogicLevel::low;
    if (m >= th.high_min_v) return LogicLevel::high;
    return LogicLevel::medium;
}

using InputTuple = std::vector<int>;

inline std::string tuple_string(const InputTuple& t) {
    std::string s;
    for (int b : t) s += b ? '1' : '0';
    return s;
}

struct TruthTableSpec {
    std::vector<std::string> input_coils;  ///< tuple order
    std::string output_series;             ///< e.g. "PQ.voltage"
    double settle = 120.0;                 ///< s skipped after each condition change
    /// When set, only the last `tail` seconds of each condition are averaged
    /// (still never earlier than start + settle).
    std::optional<double> tail;
    LogicThresholds thresholds;
};

struct ConditionWindow {
    InputTuple inputs;
    double start = 0.0;  ///< condition start
    double end = 0.0;    ///< condition end (exclusive)
    double mean_v = no_value;
    double sd_v = no_value;
    std::size_t samples = 0;
    LogicLevel level = LogicLevel::indeterminate;
};

struct TruthRow {
    InputTuple inputs;
    double mean_v = no_value;  ///< over all samples of all windows
    double sd_v = no_value;
    std::size_t windows = 0;
    LogicLevel level = LogicLevel::indeterminate;
};

struct MeasuredDelay {
    std::string edge;
    std::optional<double> seconds;  ///< empty: no crossing before the trace ended
};

struct LogicReport {
    std::vector<ConditionWindow> windows;  ///< chronological
    std::vector<TruthRow> rows;            ///< sorted by input tuple
    std::vector<MeasuredDelay> delays;

    const TruthRow* row(const InputTuple& inputs) const {
        for (const auto& r : rows)
            if (r.inputs == inputs) return &r;
        return nullptr;
    }
};

namespace detail {

struct Moments {
    double mean = no_value;
    double sd = no_value;
    std::size_t n = 0;
};

inline Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.n = xs.size();
    if (xs.empty()) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    return m;
}

}  // namespace detail

/// Splits the run into conditions wherever the tuple of input coil states
/// (current > 0) changes, then averages the output over each condition's
/// window. Coil currents are taken as zero until their first event.
inline LogicReport extract_truth_table(const TraceSet& traces, const Schedule& schedule, const TruthTableSpec& spec) {
    spec.thresholds.check();
    if (!(spec.settle >= 0.0)) throw InvalidInput("settle must be non-negative");
    LogicReport report;
    if (traces.empty()) return report;
    const Series& out = traces.at(spec.output_series);

    const double dt = traces.time.size() > 1 ? traces.time[1] - traces.time[0] : traces.meta.dt;
    const double trace_end = traces.time.back() + dt;

    struct Change {
        double at;
        InputTuple inputs;
    };
    std::vector<Change> changes;
    InputTuple state(spec.input_coils.size(), 0);
    changes.push_back({traces.time.front(), state});
    for (const auto& e : schedule.events) {
        if (e.field != "current") continue;
        const auto it = std::find(spec.input_coils.begin(), spec.input_coils.end(), e.target);
        if (it == spec.input_coils.end()) continue;
        state[static_cast<std::size_t>(it - spec.input_coils.begin())] = e.value > 0.0 ? 1 : 0;
        if (e.at <= changes.back().at) changes.back().inputs = state;
        else if (state != changes.back().inputs) changes.push_back({e.at, state});
    }

    std::map<InputTuple, std::vector<double>> pooled;
    std::map<InputTuple, std::size_t> window_count;
    for (std::size_t c = 0; c < changes.size(); ++c) {
        ConditionWindow w;
        w.inputs = changes[c].inputs;
        w.start = changes[c].at;
        w.end = c + 1 < changes.size() ? changes[c + 1].at : trace_end;
        if (w.start >= trace_end) break;
        double from = w.start + spec.settle;
        if (spec.tail) from = std::max(from, w.end - *spec.tail);
        std::vector<double> xs;
        if (from < w.end) {
            for (std::size_t i = traces.index_at(from); i < traces.time.size() && traces.time[i] < w.end - 1e-9; ++i)
                if (!std::isnan(out.values[i])) xs.push_back(out.values[i]);
        }
        const auto m = detail::moments(xs);
        w.mean_v = m.mean;
        w.sd_v = m.sd;
        w.samples = m.n;
        w.level = m.n == 0 ? LogicLevel::indeterminate : classify_level(m.mean, spec.thresholds);
        if (m.n > 0) {
            auto& pool = pooled[w.inputs];
            pool.insert(pool.end(), xs.begin(), xs.end());
            ++window_count[w.inputs];
        } else {
            pooled[w.inputs];
        }
        report.windows.push_back(std::move(w));
    }
    for (const auto& [inputs, xs] : pooled) {
        const auto m = detail::moments(xs);
        TruthRow r;
        r.inputs = inputs;
        r.mean_v = m.mean;
        r.sd_v = m.sd;
        r.windows = window_count[inputs];
        r.level = m.n == 0 ? LogicLevel::indeterminate : classify_level(m.mean, spec.thresholds);
        report.rows.push_back(std::move(r));
    }
    return report;
}

enum class Crossing { rising, falling };

/// First time >= t_event from which `holds` stays true for `debounce`
/// seconds, minus t_event. Empty when no such run starts before the trace
/// ends.
inline std::optional<double> propagation_delay(const std::vector<double>& time, const std::vector<double>& values,
                                               double t_event, const std::function<bool(double)>& holds,
                                               double debounce = 5.0) {
    if (time.size() != values.size()) throw InvalidInput("propagation_delay: time and value lengths differ");
    if (!(debounce >= 0.0)) throw InvalidInput("propagation_delay: debounce must be non-negative");
    if (time.empty() || t_event < time.front() - 1e-9 || t_event > time.back() + 1e-9)
        throw InvalidInput("propagation_delay: t_event lies outside the trace");
    double run_start = std::nan("");
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (time[i] < t_event - 1e-9) continue;
        const bool ok = !std::isnan(values[i]) && holds(values[i]);
        if (!ok) {
            run_start = std::nan("");
            continue;
        }
        if (std::isnan(run_start)) run_start = time[i];
        if (time[i] - run_start >= debounce - 1e-9) return run_start - t_event;
    }
    return std::nullopt;
}

/// Crossing of a fixed threshold: rising means value > threshold, falling
/// means value < threshold.
inline std::optional<double> propagation_delay(const std::vector<double>& time, const std::vector<double>& values,
                                               double t_event, double threshold, Crossing direction,
                                               double debounce = 5.0) {
    if (direction == Crossing::rising)
        return propagation_delay(time, values, t_event, [threshold](double v) { return v > threshold; }, debounce);
    return propagation_delay(time, values, t_event, [threshold](double v) { return v < threshold; }, debounce);
}

struct DelayProbe {
    std::string edge;    ///< description, e.g. "Reset->Set"
    std::string series;  ///< "<probe>.<field>"
    double t_event = 0.0;
    double threshold = 0.0;
    Crossing direction = Crossing::rising;
    double debounce = 5.0;
};

inline std::vector<MeasuredDelay> measure_delays(const TraceSet& traces, const std::vector<DelayProbe>& probes) {
    std::vector<MeasuredDelay> out;
    for (const auto& p : probes) {
        const Series& s = traces.at(p.series);
        out.push_back({p.edge, propagation_delay(traces.time, s.values, p.t_event, p.threshold, p.direction, p.debounce)});
    }
    return out;
}

inline void write_truth_table_csv(const LogicReport& report, std::ostream& out) {
    out << "inputs,mean_mv,sd_mv,windows,level\n";
    char buf[64];
    for (const auto& r : report.rows) {
        out << tuple_string(r.inputs) << ',';
        std::snprintf(buf, sizeof buf, "%.1f,%.1f", r.mean_v * 1e3, r.sd_v * 1e3);
        out << (std::isnan(r.mean_v) ? std::string("nan,nan") : std::string(buf)) << ',' << r.windows << ','
            << to_string(r.level) << '\n';
    }
}

inline void write_delays(const std::vector<MeasuredDelay>& delays, std::ostream& out) {
    for (const auto& d : delays) {
        out << d.edge << ": ";
        if (d.seconds) out << format_number(*d.seconds) << " s\n";
        else out << "no-crossing\n";
    }
}

}  // namespace biogate
