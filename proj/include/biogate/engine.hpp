#pragma once

// Fixed-timestep executor and the CSV trace format.
//
// Sample 0 records the initial state. For every later sample k at t = k*dt:
//   1. thermal, biological and resistance updates over (t - dt, t], using the
//      coil currents in force since the previous sample
//   2. schedule events with at <= t
//   3. network evaluation; coil currents follow the relay states of sample k-1
//   4. recording (probe voltages are clipped here and nowhere else)

#include "biogate/common.hpp"
#include "biogate/device.hpp"
#include "biogate/dsl.hpp"
#include "biogate/network.hpp"
#include "biogate/units.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace biogate {

/// File system failure; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RecordField { voltage, resistance, temperature, relay, coil_current };

constexpr std::string_view to_string(RecordField f) noexcept {
    switch (f) {
        case RecordField::voltage: return "voltage";
        case RecordField::resistance: return "resistance";
        case RecordField::temperature: return "temperature";
        case RecordField::relay: return "relay";
        case RecordField::coil_current: return "coil_current";
    }
    return "?";
}

inline std::optional<RecordField> parse_record_field(std::string_view name) {
    for (auto f : {RecordField::voltage, RecordField::resistance, RecordField::temperature, RecordField::relay,
                   RecordField::coil_current})
        if (to_string(f) == name) return f;
    return std::nullopt;
}

struct SimConfig {
    double dt = 1.0;        ///< s
    double duration = 0.0;  ///< s
    std::uint64_t seed = 0;
    bool zero_noise = false;
    std::vector<RecordField> record_fields{RecordField::voltage};

    void check() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
        if (!(duration >= dt) || !std::isfinite(duration)) throw InvalidInput("duration must be at least dt");
        if (duration / dt > 1.0e8) throw InvalidInput("duration / dt exceeds 1e8 samples");
        if (record_fields.empty()) throw InvalidInput("at least one record field is required");
        for (std::size_t i = 0; i < record_fields.size(); ++i)
            for (std::size_t j = i + 1; j < record_fields.size(); ++j)
                if (record_fields[i] == record_fields[j]) throw InvalidInput("record fields must be distinct");
    }

    std::size_t sample_count() const { return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1; }
};

struct Series {
    std::string name;  ///< "<probe>.<field>"
    std::vector<double> values;
};

struct TraceMeta {
    std::uint64_t seed = 0;
    double dt = 1.0;
    double duration = 0.0;
    bool zero_noise = false;
    std::string netlist_hash;
    std::string schedule_hash;

    bool operator==(const TraceMeta&) const = default;
};

struct TraceSet {
    std::vector<double> time;
    std::vector<Series> series;
    TraceMeta meta;

    bool empty() const { return time.empty(); }

    const Series* find(std::string_view name) const {
        for (const auto& s : series)
            if (s.name == name) return &s;
        return nullptr;
    }

    const Series& at(std::string_view name) const {
        if (const auto* s = find(name)) return *s;
        throw InvalidInput("no series named '" + std::string(name) + "'");
    }

    /// Index of the first sample with time >= t (time.size() if none).
    std::size_t index_at(double t) const {
        return static_cast<std::size_t>(std::lower_bound(time.begin(), time.end(), t - 1e-9) - time.begin());
    }
};

class Simulator {
public:
    Simulator(Netlist netlist, Schedule schedule, SimConfig config)
        : netlist_(std::move(netlist)), schedule_(std::move(schedule)), config_(std::move(config)) {
        config_.check();
        if (!netlist_.resolved()) {
            const auto errors = validate(netlist_);
            if (!errors.empty()) throw StructuralError("netlist is invalid: " + format_error(errors.front()));
        }
        if (const auto errors = check_schedule(netlist_, schedule_); !errors.empty())
            throw StructuralError("schedule is invalid: " + format_error(errors.front()));
        std::stable_sort(schedule_.events.begin(), schedule_.events.end(),
                         [](const StimulusEvent& a, const StimulusEvent& b) { return a.at < b.at; });

        const std::size_t count = netlist_.components.size();
        profiles_.resize(count);
        htubes_.resize(count);
        thermal_.resize(count);
        rngs_.resize(count);
        resistance_.assign(count, no_value);
        for (std::size_t i = 0; i < count; ++i) {
            const Component& c = netlist_.components[i];
            if (c.kind() != ComponentKind::htube) continue;
            HTubeProfile p = c.as<HTubeSpec>().profile;
            if (config_.zero_noise) p = p.without_noise();
            profiles_[i] = p;
            htubes_[i] = make_htube(p);
            thermal_[i] = ThermalState{coil_params(i).ambient_temp, 0.0};
            rngs_[i] = device_stream(config_.seed, c.id);
            htube_indices_.push_back(i);
        }
        for (std::size_t i = 0; i < count; ++i)
            if (netlist_.components[i].kind() == ComponentKind::probe) probe_indices_.push_back(i);

        traces_.meta = TraceMeta{config_.seed, config_.dt, config_.duration, config_.zero_noise, netlist_hash(netlist_),
                                 schedule_hash(schedule_)};
        const std::size_t n = config_.sample_count();
        traces_.time.reserve(n);
        for (std::size_t p : probe_indices_)
            for (RecordField f : config_.record_fields) {
                traces_.series.push_back({netlist_.components[p].id + "." + std::string(to_string(f)), {}});
                traces_.series.back().values.reserve(n);
            }
    }

    std::size_t sample_count() const { return config_.sample_count(); }
    std::size_t samples_taken() const { return k_; }
    bool done() const { return k_ >= sample_count(); }
    /// Time of the most recent sample.
    double time() const { return k_ == 0 ? 0.0 : static_cast<double>(k_ - 1) * config_.dt; }

    const Netlist& netlist() const { return netlist_; }
    const SimConfig& config() const { return config_; }
    const NetworkState& network() const { return net_; }
    const HTubeState& htube(std::size_t index) const { return htubes_.at(index); }
    const ThermalState& thermal(std::size_t index) const { return thermal_.at(index); }
    double resistance(std::size_t index) const { return resistance_.at(index); }
    const TraceSet& traces() const { return traces_; }

    /// Advances to and records the next sample.
    void step() {
        if (done()) throw InvalidInput("simulation already finished");
        const double t = static_cast<double>(k_) * config_.dt;
        if (k_ == 0) {
            for (std::size_t i : htube_indices_) resistance_[i] = resistance_sample(htubes_[i], profiles_[i], config_.dt, rngs_[i]);
        } else {
            advance_devices();
        }
        while (next_event_ < schedule_.events.size() && schedule_.events[next_event_].at <= t + 1e-9) {
            apply_event(netlist_, schedule_.events[next_event_]);
            ++next_event_;
        }
        const std::vector<std::uint8_t> prev = std::move(net_.asserted);
        net_ = evaluate_network(netlist_, resistance_, prev);
        record(t);
        ++k_;
    }

    TraceSet run() {
        while (!done()) step();
        return traces_;
    }

private:
    CoilParams coil_params(std::size_t htube) const {
        const std::size_t coil = netlist_.coil_of_htube[htube];
        return coil == no_index ? CoilParams{} : netlist_.components[coil].as<CoilSpec>().params;
    }

    void advance_devices() {
        for (std::size_t i : htube_indices_) {
            const std::size_t coil = netlist_.coil_of_htube[i];
            const double current = coil == no_index ? 0.0 : net_.coil_current[coil];
            thermal_[i] = thermal_step(thermal_[i], current, config_.dt, coil_params(i));
            htubes_[i] = bio_step(htubes_[i], profiles_[i], thermal_[i].temp, config_.dt, rngs_[i]);
            resistance_[i] = resistance_sample(htubes_[i], profiles_[i], config_.dt, rngs_[i]);
        }
    }

    // htube associated with a probed node, or no_index.
    std::size_t htube_of(std::size_t node) const {
        const Component& c = netlist_.components[node];
        switch (c.kind()) {
            case ComponentKind::htube: return node;
            case ComponentKind::divider:
            case ComponentKind::coil: return netlist_.links[node].at(0);
            default: return no_index;
        }
    }

    std::size_t coil_of(std::size_t node) const {
        const Component& c = netlist_.components[node];
        switch (c.kind()) {
            case ComponentKind::coil: return node;
            case ComponentKind::relay: return netlist_.links[node].at(1);
            default: {
                const std::size_t h = htube_of(node);
                return h == no_index ? no_index : netlist_.coil_of_htube[h];
            }
        }
    }

    double field_value(std::size_t probe, RecordField f) const {
        const std::size_t node = netlist_.links[probe].at(0);
        const auto kind = netlist_.components[node].kind();
        switch (f) {
            case RecordField::voltage: {
                const double v = net_.voltage[node];
                if (std::isnan(v)) return v;
                const double clip = netlist_.components[probe].as<ProbeSpec>().clip_v;
                return std::clamp(v, -clip, clip);
            }
            case RecordField::resistance: {
                const std::size_t h = htube_of(node);
                return h == no_index ? no_value : resistance_[h];
            }
            case RecordField::temperature: {
                const std::size_t h = htube_of(node);
                return h == no_index ? no_value : thermal_[h].temp;
            }
            case RecordField::relay:
                if (kind == ComponentKind::relay || kind == ComponentKind::comparator) return net_.asserted[node] ? 1.0 : 0.0;
                return no_value;
            case RecordField::coil_current: {
                const std::size_t c = coil_of(node);
                return c == no_index ? no_value : net_.coil_current[c];
            }
        }
        return no_value;
    }

    void record(double t) {
        traces_.time.push_back(t);
        std::size_t s = 0;
        for (std::size_t p : probe_indices_)
            for (RecordField f : config_.record_fields) traces_.series[s++].values.push_back(field_value(p, f));
    }

    Netlist netlist_;
    Schedule schedule_;
    SimConfig config_;
    std::vector<HTubeProfile> profiles_;
    std::vector<HTubeState> htubes_;
    std::vector<ThermalState> thermal_;
    std::vector<Rng> rngs_;
    std::vector<double> resistance_;
    std::vector<std::size_t> htube_indices_;
    std::vector<std::size_t> probe_indices_;
    NetworkState net_;
    TraceSet traces_;
    std::size_t k_ = 0;
    std::size_t next_event_ = 0;
};

/// Runs a whole simulation. Deterministic in (netlist, schedule, config).
inline TraceSet run(const Netlist& netlist, const Schedule& schedule, const SimConfig& config) {
    return Simulator(netlist, schedule, config).run();
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Six significant digits, "%.6g".
inline std::string format_sample(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void export_csv(const TraceSet& traces, std::ostream& out) {
    if (traces.empty()) throw InvalidInput("export_csv: trace set is empty");
    out << "# biogate trace\n";
    out << "# seed=" << traces.meta.seed << "\n";
    out << "# dt=" << format_number(traces.meta.dt) << "\n";
    out << "# duration=" << format_number(traces.meta.duration) << "\n";
    out << "# zero_noise=" << (traces.meta.zero_noise ? "true" : "false") << "\n";
    out << "# netlist_hash=" << traces.meta.netlist_hash << "\n";
    out << "# schedule_hash=" << traces.meta.schedule_hash << "\n";
    out << "t_s";
    for (const auto& s : traces.series) out << ',' << s.name;
    out << '\n';
    std::string row;
    for (std::size_t i = 0; i < traces.time.size(); ++i) {
        row = format_number(traces.time[i]);
        for (const auto& s : traces.series) {
            row += ',';
            row += format_sample(s.values[i]);
        }
        row += '\n';
        out << row;
    }
}

inline void export_csv(const TraceSet& traces, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
    export_csv(traces, out);
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline TraceSet import_csv(std::istream& in) {
    TraceSet traces;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    const auto fail = [&](const std::string& msg) {
        throw InvalidInput("csv line " + std::to_string(line_no) + ": " + msg);
    };
    const auto number = [&](std::string_view cell) {
        if (cell == "nan") return no_value;
        const Quantity q = parse_quantity(cell, Dimension::none);
        if (q.status != QuantityStatus::ok) fail("bad number '" + std::string(cell) + "'");
        return q.value;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const std::string body = line.substr(2);
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = body.substr(0, eq);
            const std::string value = body.substr(eq + 1);
            if (key == "seed") traces.meta.seed = std::stoull(value);
            else if (key == "dt") traces.meta.dt = number(value);
            else if (key == "duration") traces.meta.duration = number(value);
            else if (key == "zero_noise") traces.meta.zero_noise = value == "true";
            else if (key == "netlist_hash") traces.meta.netlist_hash = value;
            else if (key == "schedule_hash") traces.meta.schedule_hash = value;
            continue;
        }
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!header_seen) {
            if (cells.front() != "t_s") fail("expected header starting with t_s");
            for (std::size_t c = 1; c < cells.size(); ++c) traces.series.push_back({std::string(cells[c]), {}});
            header_seen = true;
            continue;
        }
        if (cells.size() != traces.series.size() + 1) fail("expected " + std::to_string(traces.series.size() + 1) + " cells");
        traces.time.push_back(number(cells[0]));
        for (std::size_t c = 1; c < cells.size(); ++c) traces.series[c - 1].values.push_back(number(cells[c]));
    }
    if (!header_seen) throw InvalidInput("csv: missing header row");
    return traces;
}

inline TraceSet import_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading: " + std::strerror(errno));
    return import_csv(in);
}

}  // namespace biogate
