#pragma once

// biogate-sim command line. Kept in a header so tests can drive it with
// in-memory streams.
//
// Exit codes: 0 success, 1 parse or validation error, 2 runtime or I/O error.

#include "biogate/analysis.hpp"
#include "biogate/dsl.hpp"
#include "biogate/engine.hpp"
#include "biogate/scenarios.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace biogate::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_invalid = 1;
inline constexpr int exit_runtime = 2;

inline constexpr const char* default_out_dir = "biogate_out";

namespace detail {

struct CliFailure {
    int code;
    std::string message;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::filesystem::path prepare_out_dir(const std::string& flag) {
    std::filesystem::path dir = flag;
    if (dir.empty()) {
        const char* env = std::getenv("BIOGATE_OUT");
        dir = (env != nullptr && *env != '\0') ? env : default_out_dir;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

// Prints diagnostics and reports whether there were any.
inline bool report(const std::vector<ParseError>& errors, std::ostream& err) {
    for (const auto& e : errors) err << format_error(e) << '\n';
    return !errors.empty();
}

struct RunOptions {
    std::optional<std::uint64_t> seed;
    double dt = 1.0;
    std::optional<double> duration;
    bool zero_noise = false;
    std::string out;
    std::vector<std::string> fields;
};

inline void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--seed", o.seed, "Run seed (generated and printed when omitted)");
    cmd->add_option("--dt", o.dt, "Timestep in seconds")->capture_default_str();
    cmd->add_option("--duration", o.duration, "Simulated time in seconds");
    cmd->add_flag("--zero-noise", o.zero_noise, "Collapse every random draw to its central value");
    cmd->add_option("--out", o.out, "Output directory (default: $BIOGATE_OUT or ./biogate_out)");
    cmd->add_option("--fields", o.fields, "Recorded probe fields: voltage, resistance, temperature, relay, coil_current")
        ->delimiter(',');
}

inline SimConfig make_config(const RunOptions& o, double default_duration, std::ostream& out) {
    SimConfig config;
    config.dt = o.dt;
    if (o.seed) {
        config.seed = *o.seed;
    } else {
        std::random_device rd;
        config.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        out << "seed: " << config.seed << '\n';
    }
    config.duration = o.duration.value_or(default_duration);
    config.zero_noise = o.zero_noise;
    if (!o.fields.empty()) {
        config.record_fields.clear();
        for (const auto& f : o.fields) {
            auto rf = parse_record_field(f);
            if (!rf) throw CliFailure{exit_invalid, "unknown record field '" + f + "'"};
            config.record_fields.push_back(*rf);
        }
    }
    try {
        config.check();
    } catch (const InvalidInput& e) {
        throw CliFailure{exit_invalid, e.what()};
    }
    return config;
}

inline double last_event_time(const Schedule& s) { return s.events.empty() ? 0.0 : s.events.back().at; }

inline std::optional<Netlist> load_netlist(const std::string& path, std::ostream& err) {
    auto result = parse_netlist(read_file(path), path);
    if (report(result.errors, err)) return std::nullopt;
    return std::move(result.value);
}

inline std::optional<Schedule> load_schedule(const std::string& path, std::ostream& err) {
    auto result = parse_schedule(read_file(path), path);
    if (report(result.errors, err)) return std::nullopt;
    return std::move(result.value);
}

inline void write_traces(const std::filesystem::path& dir, const TraceSet& traces, std::ostream& out) {
    const auto path = dir / "traces.csv";
    export_csv(traces, path);
    out << "wrote " << path.string() << '\n';
}

inline std::string format_report(const LogicReport& report) {
    std::ostringstream s;
    write_truth_table_csv(report, s);
    return s.str();
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulator for hybrid slime-mould / electronic logic gates", "biogate-sim"};
    app.require_subcommand(1, 1);

    detail::RunOptions run_opts;
    std::string netlist_path, schedule_path;
    auto* run_cmd = app.add_subcommand("run", "Simulate a netlist under a stimulus schedule");
    run_cmd->add_option("netlist", netlist_path, "Netlist file (.bgn)")->required();
    run_cmd->add_option("schedule", schedule_path, "Schedule file (.bgs)")->required();
    detail::add_run_options(run_cmd, run_opts);

    detail::RunOptions sc_opts;
    std::string scenario_name;
    auto* sc_cmd = app.add_subcommand("scenario", "Run one of the canonical experiments");
    sc_cmd->add_option("name", scenario_name, "two_way_nand, three_way_nand, and_and, nand_nand or sr_latch")->required();
    detail::add_run_options(sc_cmd, sc_opts);

    std::string tt_traces, tt_schedule, tt_output;
    std::vector<std::string> tt_inputs;
    double tt_settle = 120.0;
    std::optional<double> tt_tail;
    auto* tt_cmd = app.add_subcommand("truth-table", "Extract a truth table from a trace CSV");
    tt_cmd->add_option("traces", tt_traces, "Trace CSV")->required();
    tt_cmd->add_option("schedule", tt_schedule, "Schedule used for the run (.bgs)")->required();
    tt_cmd->add_option("--inputs", tt_inputs, "Input coil ids, in tuple order")->delimiter(',')->required();
    tt_cmd->add_option("--output", tt_output, "Output series, e.g. PQ.voltage")->required();
    tt_cmd->add_option("--settle", tt_settle, "Seconds skipped after each condition change")->capture_default_str();
    tt_cmd->add_option("--tail", tt_tail, "Average only the last N seconds of each condition");

    std::string dl_traces, dl_series, dl_threshold = "10mV", dl_direction = "rising";
    double dl_at = 0.0, dl_debounce = 5.0;
    auto* dl_cmd = app.add_subcommand("delays", "Measure a propagation delay in a trace CSV");
    dl_cmd->add_option("traces", dl_traces, "Trace CSV")->required();
    dl_cmd->add_option("--series", dl_series, "Series name, e.g. PQ.voltage")->required();
    dl_cmd->add_option("--at", dl_at, "Event time in seconds")->required();
    dl_cmd->add_option("--threshold", dl_threshold, "Crossing threshold (e.g. 10mV)")->capture_default_str();
    dl_cmd->add_option("--direction", dl_direction, "rising or falling")
        ->check(CLI::IsMember({"rising", "falling"}))
        ->capture_default_str();
    dl_cmd->add_option("--debounce", dl_debounce, "Seconds the crossing must persist")->capture_default_str();

    std::string val_netlist;
    std::optional<std::string> val_schedule;
    auto* val_cmd = app.add_subcommand("validate", "Check a netlist (and optionally a schedule)");
    val_cmd->add_option("netlist", val_netlist, "Netlist file (.bgn)")->required();
    val_cmd->add_option("schedule", val_schedule, "Schedule file (.bgs)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_invalid;
    }

    try {
        if (*run_cmd) {
            auto netlist = detail::load_netlist(netlist_path, err);
            auto schedule = detail::load_schedule(schedule_path, err);
            if (!netlist || !schedule) return exit_invalid;
            if (detail::report(check_schedule(*netlist, *schedule), err)) return exit_invalid;
            const double fallback = std::max(detail::last_event_time(*schedule) + 600.0, run_opts.dt);
            const SimConfig config = detail::make_config(run_opts, fallback, out);
            const auto dir = detail::prepare_out_dir(run_opts.out);
            const TraceSet traces = run(*netlist, *schedule, config);
            detail::write_traces(dir, traces, out);
            return exit_ok;
        }
        if (*sc_cmd) {
            Scenario s;
            try {
                s = scenario(scenario_name);
            } catch (const InvalidInput& e) {
                err << "error: " << e.what() << '\n';
                return exit_invalid;
            }
            const SimConfig config = detail::make_config(sc_opts, s.config.duration, out);
            const auto dir = detail::prepare_out_dir(sc_opts.out);
            detail::write_file(dir / (s.name + ".bgn"), s.netlist_text);
            detail::write_file(dir / (s.name + ".bgs"), s.schedule_text);
            const TraceSet traces = run(s.netlist, s.schedule, config);
            detail::write_traces(dir, traces, out);
            if (s.truth_table) {
                const auto report = extract_truth_table(traces, s.schedule, *s.truth_table);
                const std::string table = detail::format_report(report);
                detail::write_file(dir / "truth_table.csv", table);
                out << "wrote " << (dir / "truth_table.csv").string() << '\n' << table;
            }
            if (!s.delays.empty()) {
                std::ostringstream text;
                write_delays(measure_delays(traces, s.delays), text);
                detail::write_file(dir / "delays.txt", text.str());
                out << "wrote " << (dir / "delays.txt").string() << '\n' << text.str();
            }
            return exit_ok;
        }
        if (*tt_cmd) {
            auto schedule = detail::load_schedule(tt_schedule, err);
            if (!schedule) return exit_invalid;
            TraceSet traces;
            try {
                traces = import_csv(std::filesystem::path(tt_traces));
            } catch (const InvalidInput& e) {
                err << tt_traces << ": error: " << e.what() << '\n';
                return exit_invalid;
            }
            TruthTableSpec spec{tt_inputs, tt_output, tt_settle, tt_tail, {}};
            if (traces.find(tt_output) == nullptr) {
                err << "error: no series named '" << tt_output << "'\n";
                return exit_invalid;
            }
            write_truth_table_csv(extract_truth_table(traces, *schedule, spec), out);
            return exit_ok;
        }
        if (*dl_cmd) {
            TraceSet traces;
            try {
                traces = import_csv(std::filesystem::path(dl_traces));
            } catch (const InvalidInput& e) {
                err << dl_traces << ": error: " << e.what() << '\n';
                return exit_invalid;
            }
            Quantity threshold = parse_quantity(dl_threshold, Dimension::volts);
            if (threshold.status != QuantityStatus::ok) threshold = parse_quantity(dl_threshold, Dimension::none);
            if (threshold.status != QuantityStatus::ok) {
                err << "error: bad threshold '" << dl_threshold << "'\n";
                return exit_invalid;
            }
            const Series* series = traces.find(dl_series);
            if (series == nullptr) {
                err << "error: no series named '" << dl_series << "'\n";
                return exit_invalid;
            }
            const Crossing dir = dl_direction == "rising" ? Crossing::rising : Crossing::falling;
            std::optional<double> delay;
            try {
                delay = propagation_delay(traces.time, series->values, dl_at, threshold.value, dir, dl_debounce);
            } catch (const InvalidInput& e) {
                err << "error: " << e.what() << '\n';
                return exit_invalid;
            }
            write_delays({{dl_series + " " + dl_direction + " after " + format_number(dl_at) + " s", delay}}, out);
            return exit_ok;
        }
        if (*val_cmd) {
            auto netlist = detail::load_netlist(val_netlist, err);
            bool ok = netlist.has_value();
            if (val_schedule) {
                auto schedule = detail::load_schedule(*val_schedule, err);
                ok = ok && schedule.has_value();
                if (ok && detail::report(check_schedule(*netlist, *schedule), err)) ok = false;
            }
            if (!ok) return exit_invalid;
            out << val_netlist << ": ok (" << netlist->components.size() << " components)\n";
            return exit_ok;
        }
    } catch (const detail::CliFailure& f) {
        err << "error: " << f.message << '\n';
        return f.code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_invalid;
}

}  // namespace biogate::cli
