#pragma once

// Netlist (.bgn) and stimulus schedule (.bgs) text formats.
//
// Both are line oriented; '#' starts a comment, blank lines are ignored, LF
// and CRLF are accepted. The normative grammar is docs/grammar.ebnf.
//
//   htube A profile=default
//   coil CA htube=A
//   divider DA htube=A rfixed=10Mohm vsrc=-2.25V
//   probe PA node=DA
//
//   at 600s set CA.current 0.8A

#include "biogate/common.hpp"
#include "biogate/device.hpp"
#include "biogate/network.hpp"
#include "biogate/units.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace biogate {

enum class ErrorKind { syntax, unknown_keyword, bad_unit, duplicate_id, unresolved_ref, analog_cycle, out_of_range };

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::syntax: return "SYNTAX";
        case ErrorKind::unknown_keyword: return "UNKNOWN_KEYWORD";
        case ErrorKind::bad_unit: return "BAD_UNIT";
        case ErrorKind::duplicate_id: return "DUPLICATE_ID";
        case ErrorKind::unresolved_ref: return "UNRESOLVED_REF";
        case ErrorKind::analog_cycle: return "ANALOG_CYCLE";
        case ErrorKind::out_of_range: return "OUT_OF_RANGE";
    }
    return "?";
}

struct ParseError {
    SourceSpan span;
    ErrorKind kind = ErrorKind::syntax;
    std::string message;
};

/// "file:line:col: error[KIND]: message"
inline std::string format_error(const ParseError& e) {
    return e.span.file + ":" + std::to_string(e.span.line) + ":" + std::to_string(e.span.column) + ": error[" +
           std::string(to_string(e.kind)) + "]: " + e.message;
}

/// Either a value or at least one error, never both.
template <class T>
struct ParseResult {
    std::optional<T> value;
    std::vector<ParseError> errors;

    bool ok() const { return value.has_value(); }
};

struct StimulusEvent {
    double at = 0.0;  ///< s
    std::string target;
    std::string field;
    double value = 0.0;  ///< SI
    SourceSpan span;

    bool operator==(const StimulusEvent& o) const {
        return at == o.at && target == o.target && field == o.field && value == o.value;
    }
};

/// Events sorted by time; ties keep file order.
struct Schedule {
    std::vector<StimulusEvent> events;
    bool operator==(const Schedule&) const = default;
};

namespace detail {

struct Token {
    std::string_view text;
    int column = 1;
};

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

inline std::vector<Token> tokenize(std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        tokens.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return tokens;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    const auto head = static_cast<unsigned char>(s.front());
    if (!(std::isalpha(head) || head == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char ch) {
        const auto c = static_cast<unsigned char>(ch);
        return std::isalnum(c) || c == '_';
    });
}

struct KeyFailure {
    ErrorKind kind;
    std::string message;
};

using KeyResult = std::optional<KeyFailure>;

inline KeyResult read_quantity(std::string_view key, std::string_view value, Dimension dim, double& out) {
    const Quantity q = parse_quantity(value, dim);
    if (q.status == QuantityStatus::bad_number)
        return KeyFailure{ErrorKind::syntax, "expected a number for '" + std::string(key) + "', got '" + std::string(value) + "'"};
    if (q.status == QuantityStatus::bad_unit) {
        const std::string expected = dim == Dimension::none ? "no unit" : "unit '" + std::string(unit_symbol(dim)) + "'";
        return KeyFailure{ErrorKind::bad_unit,
                          "malformed unit in '" + std::string(value) + "' for '" + std::string(key) + "' (expected " + expected + ")"};
    }
    out = q.value;
    return std::nullopt;
}

inline KeyResult read_ref(std::string_view key, std::string_view value, std::string& out) {
    if (!is_identifier(value))
        return KeyFailure{ErrorKind::syntax, "'" + std::string(key) + "' expects a component id, got '" + std::string(value) + "'"};
    out = std::string(value);
    return std::nullopt;
}

inline KeyResult read_ref_list(std::string_view key, std::string_view value, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = value.find(',', start);
        const std::string_view item = value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        std::string id;
        if (auto f = read_ref(key, item, id)) return f;
        out.push_back(std::move(id));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return std::nullopt;
}

inline KeyResult require(bool ok, std::string message) {
    if (ok) return std::nullopt;
    return KeyFailure{ErrorKind::out_of_range, std::move(message)};
}

struct ProfileField {
    std::string_view key;
    Dimension dim;
    double HTubeProfile::*member;
};

inline constexpr std::array<ProfileField, 16> profile_fields{{
    {"r_rest", Dimension::ohms, &HTubeProfile::r_rest_mean},
    {"r_rest_sd", Dimension::ohms, &HTubeProfile::r_rest_sd},
    {"r_stim_low", Dimension::ohms, &HTubeProfile::r_stim_low},
    {"r_stim_high", Dimension::ohms, &HTubeProfile::r_stim_high},
    {"r_burst_max", Dimension::ohms, &HTubeProfile::r_burst_max},
    {"burst_prob", Dimension::none, &HTubeProfile::burst_prob_per_s},
    {"threshold_temp", Dimension::celsius, &HTubeProfile::response_threshold_temp},
    {"latency", Dimension::seconds, &HTubeProfile::response_latency_mean},
    {"latency_sd", Dimension::seconds, &HTubeProfile::response_latency_sd},
    {"reform_ref_hold", Dimension::seconds, &HTubeProfile::reform_ref_hold},
    {"reform_ref_duration", Dimension::seconds, &HTubeProfile::reform_ref_duration},
    {"reform_target", Dimension::ohms, &HTubeProfile::reform_target_r},
    {"rest_recovery_tau", Dimension::seconds, &HTubeProfile::rest_recovery_tau},
    {"damage_temp", Dimension::celsius, &HTubeProfile::damage_temp},
    {"fatigue_onset", Dimension::seconds, &HTubeProfile::fatigue_onset},
    {"fatigue_slowdown", Dimension::none, &HTubeProfile::fatigue_slowdown},
}};

inline KeyResult unknown_key(ComponentKind kind, std::string_view key) {
    return KeyFailure{ErrorKind::unknown_keyword,
                      "unknown key '" + std::string(key) + "' for " + std::string(to_string(kind))};
}

inline KeyResult apply_key(Component& c, std::string_view key, std::string_view value) {
    switch (c.kind()) {
        case ComponentKind::htube: {
            auto& s = c.as<HTubeSpec>();
            if (key == "profile") {
                if (value != "default") return KeyFailure{ErrorKind::unknown_keyword, "unknown profile '" + std::string(value) + "'"};
                s.preset = std::string(value);
                return std::nullopt;
            }
            if (key == "entrained") {
                if (value == "yes" || value == "true") s.profile.entrained = true;
                else if (value == "no" || value == "false") s.profile.entrained = false;
                else return KeyFailure{ErrorKind::syntax, "entrained expects yes or no"};
                return std::nullopt;
            }
            for (const auto& f : profile_fields)
                if (key == f.key) return read_quantity(key, value, f.dim, s.profile.*(f.member));
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::source: {
            auto& s = c.as<SourceSpec>();
            if (key == "volts") return read_quantity(key, value, Dimension::volts, s.volts);
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::divider: {
            auto& s = c.as<DividerSpec>();
            if (key == "htube") return read_ref(key, value, s.htube);
            if (key == "rfixed") {
                if (auto f = read_quantity(key, value, Dimension::ohms, s.r_fixed)) return f;
                return require(s.r_fixed > 0.0, "rfixed must be positive");
            }
            if (key == "vsrc") return read_quantity(key, value, Dimension::volts, s.v_src);
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::buffer: {
            auto& s = c.as<BufferSpec>();
            if (key == "input") return read_ref(key, value, s.input);
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::sumamp: {
            auto& s = c.as<SumAmpSpec>();
            if (key == "inputs") return read_ref_list(key, value, s.inputs);
            if (key == "gain") return read_quantity(key, value, Dimension::none, s.gain);
            if (key == "offset") return read_quantity(key, value, Dimension::volts, s.offset_v);
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::comparator: {
            auto& s = c.as<ComparatorSpec>();
            if (key == "input") return read_ref(key, value, s.input);
            if (key == "threshold") return read_quantity(key, value, Dimension::volts, s.threshold_v);
            if (key == "assert") {
                if (value == "below") s.when = AssertWhen::below;
                else if (value == "above") s.when = AssertWhen::above;
                else return KeyFailure{ErrorKind::syntax, "assert expects below or above"};
                return std::nullopt;
            }
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::relay: {
            auto& s = c.as<RelaySpec>();
            if (key == "comparator") return read_ref(key, value, s.comparator);
            if (key == "coil") return read_ref(key, value, s.coil);
            if (key == "mode") {
                if (value == "NO") s.contact = Contact::normally_open;
                else if (value == "NC") s.contact = Contact::normally_closed;
                else return KeyFailure{ErrorKind::syntax, "mode expects NO or NC"};
                return std::nullopt;
            }
            if (key == "supply") {
                if (auto f = read_quantity(key, value, Dimension::amperes, s.supply_current)) return f;
                return require(s.supply_current >= 0.0, "supply must be non-negative");
            }
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::coil: {
            auto& s = c.as<CoilSpec>();
            if (key == "htube") return read_ref(key, value, s.htube);
            if (key == "current") {
                if (auto f = read_quantity(key, value, Dimension::amperes, s.current)) return f;
                return require(s.current >= 0.0, "current must be non-negative");
            }
            if (key == "ambient") return read_quantity(key, value, Dimension::celsius, s.params.ambient_temp);
            if (key == "k") return read_quantity(key, value, Dimension::none, s.params.heat_coeff_k);
            if (key == "tau") return read_quantity(key, value, Dimension::seconds, s.params.thermal_time_constant);
            return unknown_key(c.kind(), key);
        }
        case ComponentKind::probe: {
            auto& s = c.as<ProbeSpec>();
            if (key == "node") return read_ref(key, value, s.node);
            if (key == "clip") {
                if (auto f = read_quantity(key, value, Dimension::volts, s.clip_v)) return f;
                return require(s.clip_v > 0.0, "clip must be positive");
            }
            return unknown_key(c.kind(), key);
        }
    }
    return unknown_key(c.kind(), key);
}

inline std::vector<std::string_view> required_keys(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::divider: return {"htube"};
        case ComponentKind::buffer: return {"input"};
        case ComponentKind::sumamp: return {"inputs"};
        case ComponentKind::comparator: return {"input"};
        case ComponentKind::relay: return {"comparator", "coil"};
        case ComponentKind::coil: return {"htube"};
        case ComponentKind::probe: return {"node"};
        default: return {};
    }
}

inline std::optional<ComponentSpec> default_spec(std::string_view kind) {
    if (kind == "htube") return HTubeSpec{};
    if (kind == "source") return SourceSpec{};
    if (kind == "divider") return DividerSpec{};
    if (kind == "buffer") return BufferSpec{};
    if (kind == "sumamp") return SumAmpSpec{};
    if (kind == "comparator") return ComparatorSpec{};
    if (kind == "relay") return RelaySpec{};
    if (kind == "coil") return CoilSpec{};
    if (kind == "probe") return ProbeSpec{};
    return std::nullopt;
}

struct FieldInfo {
    std::string_view name;
    Dimension dim;
    ComponentKind target;
};

inline constexpr std::array<FieldInfo, 5> schedule_fields{{
    {"current", Dimension::amperes, ComponentKind::coil},
    {"supply", Dimension::amperes, ComponentKind::relay},
    {"volts", Dimension::volts, ComponentKind::source},
    {"vsrc", Dimension::volts, ComponentKind::divider},
    {"threshold", Dimension::volts, ComponentKind::comparator},
}};

inline const FieldInfo* find_field(std::string_view name) {
    for (const auto& f : schedule_fields)
        if (f.name == name) return &f;
    return nullptr;
}

}  // namespace detail

/// Syntax-level parse: every line becomes a component with defaults filled
/// in. References are not resolved; see validate().
inline ParseResult<Netlist> parse_components(std::string_view text, const std::string& file = "<netlist>") {
    ParseResult<Netlist> result;
    Netlist netlist;
    const auto lines = detail::split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto tokens = detail::tokenize(lines[ln]);
        if (tokens.empty()) continue;
        const int line_no = static_cast<int>(ln) + 1;
        const auto at = [&](int col) { return SourceSpan{file, line_no, col}; };
        const auto fail = [&](int col, ErrorKind kind, std::string msg) {
            result.errors.push_back({at(col), kind, std::move(msg)});
        };

        auto spec = detail::default_spec(tokens[0].text);
        if (!spec) {
            fail(tokens[0].column, ErrorKind::unknown_keyword, "unknown component kind '" + std::string(tokens[0].text) + "'");
            continue;
        }
        if (tokens.size() < 2) {
            fail(tokens[0].column, ErrorKind::syntax, "expected a component id after '" + std::string(tokens[0].text) + "'");
            continue;
        }
        if (!detail::is_identifier(tokens[1].text)) {
            fail(tokens[1].column, ErrorKind::syntax, "invalid component id '" + std::string(tokens[1].text) + "'");
            continue;
        }

        Component c{std::string(tokens[1].text), std::move(*spec), at(tokens[0].column), {}};
        bool line_ok = true;
        for (std::size_t t = 2; t < tokens.size(); ++t) {
            const auto& tok = tokens[t];
            const auto eq = tok.text.find('=');
            if (eq == std::string_view::npos || eq == 0 || eq + 1 == tok.text.size()) {
                fail(tok.column, ErrorKind::syntax, "expected key=value, got '" + std::string(tok.text) + "'");
                line_ok = false;
                break;
            }
            const std::string key(tok.text.substr(0, eq));
            const std::string_view value = tok.text.substr(eq + 1);
            if (c.key_spans.count(key) != 0) {
                fail(tok.column, ErrorKind::syntax, "duplicate key '" + key + "'");
                line_ok = false;
                break;
            }
            c.key_spans[key] = at(tok.column);
            if (auto failure = detail::apply_key(c, key, value)) {
                fail(tok.column, failure->kind, failure->message);
                line_ok = false;
                break;
            }
        }
        if (!line_ok) continue;

        for (std::string_view key : detail::required_keys(c.kind())) {
            if (c.key_spans.count(std::string(key)) == 0) {
                fail(tokens[0].column, ErrorKind::syntax,
                     std::string(to_string(c.kind())) + " '" + c.id + "' is missing required key '" + std::string(key) + "'");
                line_ok = false;
            }
        }
        if (!line_ok) continue;

        try {
            if (c.kind() == ComponentKind::htube) c.as<HTubeSpec>().profile.check();
            if (c.kind() == ComponentKind::coil) c.as<CoilSpec>().params.check();
        } catch (const InvalidInput& e) {
            fail(tokens[1].column, ErrorKind::out_of_range, e.what());
            continue;
        }
        netlist.components.push_back(std::move(c));
    }
    if (result.errors.empty()) result.value = std::move(netlist);
    return result;
}

/// Resolves references and computes the analog evaluation order. On success
/// the netlist is ready for evaluate_network(); on failure it is left
/// unresolved. Never throws.
inline std::vector<ParseError> validate(Netlist& n) {
    std::vector<ParseError> errors;
    const std::size_t count = n.components.size();
    n.links.clear();
    n.analog_order.clear();
    n.coil_of_htube.clear();
    n.relay_of_coil.clear();

    std::map<std::string, std::size_t> first_seen;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& c = n.components[i];
        auto [it, inserted] = first_seen.emplace(c.id, i);
        if (!inserted) {
            const auto& prev = n.components[it->second].span;
            errors.push_back({c.span, ErrorKind::duplicate_id,
                              "duplicate id '" + c.id + "' (first defined at line " + std::to_string(prev.line) + ")"});
        }
    }

    const auto expected = [](ComponentKind owner, const std::string& key, ComponentKind target) -> std::optional<std::string> {
        const bool ok = [&] {
            if (key == "htube") return target == ComponentKind::htube;
            if (key == "input" || key == "inputs") return produces_voltage(target);
            if (key == "comparator") return target == ComponentKind::comparator;
            if (key == "coil") return target == ComponentKind::coil;
            if (key == "node") return target != ComponentKind::probe;
            return false;
        }();
        if (ok) return std::nullopt;
        if (key == "input" || key == "inputs") return std::string("a voltage node (source, divider, buffer or sumamp)");
        if (key == "node") return std::string("a non-probe component");
        (void)owner;
        return key == "htube" ? std::string("an htube") : "a " + key;
    };

    std::vector<std::vector<std::size_t>> links(count);
    bool refs_ok = true;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& c = n.components[i];
        for (const auto& [key, name] : references(c)) {
            const auto it = first_seen.find(name);
            if (it == first_seen.end()) {
                errors.push_back({c.span_of(key), ErrorKind::unresolved_ref,
                                  std::string(to_string(c.kind())) + " '" + c.id + "': '" + name + "' is not defined"});
                refs_ok = false;
                links[i].push_back(no_index);
                continue;
            }
            const auto target = n.components[it->second].kind();
            if (auto want = expected(c.kind(), key, target)) {
                errors.push_back({c.span_of(key), ErrorKind::unresolved_ref,
                                  std::string(to_string(c.kind())) + " '" + c.id + "': '" + name + "' is a " +
                                      std::string(to_string(target)) + ", expected " + *want});
                refs_ok = false;
            }
            links[i].push_back(it->second);
        }
        if (c.kind() == ComponentKind::sumamp && c.as<SumAmpSpec>().inputs.size() < 2) {
            errors.push_back({c.span_of("inputs"), ErrorKind::out_of_range,
                              "sumamp '" + c.id + "' needs at least 2 inputs, has " +
                                  std::to_string(c.as<SumAmpSpec>().inputs.size())});
        }
    }

    std::vector<std::size_t> coil_of_htube(count, no_index);
    std::vector<std::size_t> relay_of_coil(count, no_index);
    if (refs_ok) {
        for (std::size_t i = 0; i < count; ++i) {
            const auto& c = n.components[i];
            if (c.kind() == ComponentKind::coil) {
                const std::size_t h = links[i].at(0);
                if (coil_of_htube[h] != no_index)
                    errors.push_back({c.span_of("htube"), ErrorKind::out_of_range,
                                      "htube '" + n.components[h].id + "' is already heated by coil '" +
                                          n.components[coil_of_htube[h]].id + "'"});
                else
                    coil_of_htube[h] = i;
            } else if (c.kind() == ComponentKind::relay) {
                const std::size_t k = links[i].at(1);
                if (relay_of_coil[k] != no_index)
                    errors.push_back({c.span_of("coil"), ErrorKind::out_of_range,
                                      "coil '" + n.components[k].id + "' is already driven by relay '" +
                                          n.components[relay_of_coil[k]].id + "'"});
                else
                    relay_of_coil[k] = i;
            }
        }
    }

    if (refs_ok) {
        n.links = links;
        const auto order = compute_analog_order(n);
        if (!order.ok()) {
            std::string members;
            for (std::size_t i : order.cyclic) members += (members.empty() ? "" : ", ") + n.components[i].id;
            errors.push_back({n.components[order.cyclic.front()].span, ErrorKind::analog_cycle,
                              "analog loop without a relay through: " + members});
        } else {
            n.analog_order = order.order;
        }
    }

    if (!errors.empty()) {
        n.links.clear();
        n.analog_order.clear();
        std::stable_sort(errors.begin(), errors.end(), [](const ParseError& a, const ParseError& b) {
            return std::pair(a.span.line, a.span.column) < std::pair(b.span.line, b.span.column);
        });
        return errors;
    }
    n.coil_of_htube = std::move(coil_of_htube);
    n.relay_of_coil = std::move(relay_of_coil);
    return errors;
}

/// parse_components() followed by validate().
inline ParseResult<Netlist> parse_netlist(std::string_view text, const std::string& file = "<netlist>") {
    auto result = parse_components(text, file);
    if (!result.ok()) return result;
    auto errors = validate(*result.value);
    if (!errors.empty()) {
        result.value.reset();
        result.errors = std::move(errors);
    }
    return result;
}

/// Canonical text form; parse_netlist(print_netlist(n)) == n.
inline std::string print_netlist(const Netlist& n) {
    const auto q = [](double v, Dimension d) { return format_quantity(v, d); };
    const auto join = [](const std::vector<std::string>& ids) {
        std::string out;
        for (const auto& id : ids) out += (out.empty() ? "" : ",") + id;
        return out;
    };
    std::string out;
    for (const auto& c : n.components) {
        std::string line = std::string(to_string(c.kind())) + " " + c.id;
        std::visit(
            [&](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, HTubeSpec>) {
                    line += " profile=" + s.preset;
                    const HTubeProfile base;
                    if (s.profile.entrained != base.entrained) line += s.profile.entrained ? " entrained=yes" : " entrained=no";
                    for (const auto& f : detail::profile_fields)
                        if (s.profile.*(f.member) != base.*(f.member))
                            line += " " + std::string(f.key) + "=" + q(s.profile.*(f.member), f.dim);
                } else if constexpr (std::is_same_v<S, SourceSpec>) {
                    line += " volts=" + q(s.volts, Dimension::volts);
                } else if constexpr (std::is_same_v<S, DividerSpec>) {
                    line += " htube=" + s.htube + " rfixed=" + q(s.r_fixed, Dimension::ohms) + " vsrc=" + q(s.v_src, Dimension::volts);
                } else if constexpr (std::is_same_v<S, BufferSpec>) {
                    line += " input=" + s.input;
                } else if constexpr (std::is_same_v<S, SumAmpSpec>) {
                    line += " inputs=" + join(s.inputs) + " gain=" + q(s.gain, Dimension::none) + " offset=" + q(s.offset_v, Dimension::volts);
                } else if constexpr (std::is_same_v<S, ComparatorSpec>) {
                    line += " input=" + s.input + " threshold=" + q(s.threshold_v, Dimension::volts) +
                            (s.when == AssertWhen::below ? " assert=below" : " assert=above");
                } else if constexpr (std::is_same_v<S, RelaySpec>) {
                    line += " comparator=" + s.comparator + (s.contact == Contact::normally_open ? " mode=NO" : " mode=NC") +
                            " coil=" + s.coil + " supply=" + q(s.supply_current, Dimension::amperes);
                } else if constexpr (std::is_same_v<S, CoilSpec>) {
                    line += " htube=" + s.htube + " current=" + q(s.current, Dimension::amperes) + " ambient=" +
                            q(s.params.ambient_temp, Dimension::celsius) + " k=" + q(s.params.heat_coeff_k, Dimension::none) +
                            " tau=" + q(s.params.thermal_time_constant, Dimension::seconds);
                } else if constexpr (std::is_same_v<S, ProbeSpec>) {
                    line += " node=" + s.node + " clip=" + q(s.clip_v, Dimension::volts);
                }
            },
            c.spec);
        out += line + "\n";
    }
    return out;
}

inline std::string netlist_hash(const Netlist& n) { return hex64(fnv1a(print_netlist(n))); }

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

inline ParseResult<Schedule> parse_schedule(std::string_view text, const std::string& file = "<schedule>") {
    ParseResult<Schedule> result;
    Schedule schedule;
    const auto lines = detail::split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto tokens = detail::tokenize(lines[ln]);
        if (tokens.empty()) continue;
        const int line_no = static_cast<int>(ln) + 1;
        const auto fail = [&](int col, ErrorKind kind, std::string msg) {
            result.errors.push_back({SourceSpan{file, line_no, col}, kind, std::move(msg)});
        };

        if (tokens[0].text != "at") {
            fail(tokens[0].column, ErrorKind::syntax, "expected 'at <time> set <target>.<field> <value>'");
            continue;
        }
        if (tokens.size() < 5) {
            fail(tokens.back().column, ErrorKind::syntax, "incomplete event; expected 'at <time> set <target>.<field> <value>'");
            continue;
        }
        StimulusEvent ev;
        ev.span = SourceSpan{file, line_no, tokens[0].column};

        const Quantity when = parse_quantity(tokens[1].text, Dimension::seconds);
        if (when.status == QuantityStatus::bad_number) {
            fail(tokens[1].column, ErrorKind::syntax, "expected a time, got '" + std::string(tokens[1].text) + "'");
            continue;
        }
        if (when.status == QuantityStatus::bad_unit) {
            fail(tokens[1].column, ErrorKind::bad_unit, "malformed time unit in '" + std::string(tokens[1].text) + "' (expected s)");
            continue;
        }
        if (when.value < 0.0) {
            fail(tokens[1].column, ErrorKind::out_of_range, "event time must be non-negative");
            continue;
        }
        ev.at = when.value;

        if (tokens[2].text != "set") {
            fail(tokens[2].column, ErrorKind::syntax, "expected 'set', got '" + std::string(tokens[2].text) + "'");
            continue;
        }
        const auto dot = tokens[3].text.find('.');
        if (dot == std::string_view::npos || !detail::is_identifier(tokens[3].text.substr(0, dot)) ||
            !detail::is_identifier(tokens[3].text.substr(dot + 1))) {
            fail(tokens[3].column, ErrorKind::syntax, "expected <target>.<field>, got '" + std::string(tokens[3].text) + "'");
            continue;
        }
        ev.target = std::string(tokens[3].text.substr(0, dot));
        ev.field = std::string(tokens[3].text.substr(dot + 1));
        const auto* field = detail::find_field(ev.field);
        if (field == nullptr) {
            fail(tokens[3].column + static_cast<int>(dot) + 1, ErrorKind::unknown_keyword, "unknown field '" + ev.field + "'");
            continue;
        }
        const Quantity value = parse_quantity(tokens[4].text, field->dim);
        if (value.status != QuantityStatus::ok) {
            const bool number = value.status == QuantityStatus::bad_unit ||
                                parse_quantity(tokens[4].text, Dimension::none).status != QuantityStatus::bad_number;
            fail(tokens[4].column, number ? ErrorKind::bad_unit : ErrorKind::syntax,
                 number ? "malformed unit in '" + std::string(tokens[4].text) + "' (expected " +
                              std::string(unit_symbol(field->dim)) + ")"
                        : "expected a value, got '" + std::string(tokens[4].text) + "'");
            continue;
        }
        if (tokens.size() > 5) {
            fail(tokens[5].column, ErrorKind::syntax, "unexpected trailing token '" + std::string(tokens[5].text) + "'");
            continue;
        }
        if (field->dim == Dimension::amperes && value.value < 0.0) {
            fail(tokens[4].column, ErrorKind::out_of_range, "current must be non-negative");
            continue;
        }
        ev.value = value.value;
        schedule.events.push_back(std::move(ev));
    }
    std::stable_sort(schedule.events.begin(), schedule.events.end(),
                     [](const StimulusEvent& a, const StimulusEvent& b) { return a.at < b.at; });
    if (result.errors.empty()) result.value = std::move(schedule);
    return result;
}

inline std::string print_schedule(const Schedule& s) {
    std::string out;
    for (const auto& e : s.events) {
        const auto* field = detail::find_field(e.field);
        out += "at " + format_quantity(e.at, Dimension::seconds) + " set " + e.target + "." + e.field + " " +
               format_quantity(e.value, field ? field->dim : Dimension::none) + "\n";
    }
    return out;
}

inline std::string schedule_hash(const Schedule& s) { return hex64(fnv1a(print_schedule(s))); }

/// Checks that every event names an existing component of the right kind.
/// Coils driven by a relay take their current from the relay, so scheduling
/// their current directly is rejected.
inline std::vector<ParseError> check_schedule(const Netlist& n, const Schedule& s) {
    std::vector<ParseError> errors;
    for (const auto& e : s.events) {
        const std::size_t idx = n.find(e.target);
        if (idx == no_index) {
            errors.push_back({e.span, ErrorKind::unresolved_ref, "event target '" + e.target + "' is not in the netlist"});
            continue;
        }
        const auto* field = detail::find_field(e.field);
        const auto kind = n.components[idx].kind();
        if (field == nullptr || field->target != kind) {
            errors.push_back({e.span, ErrorKind::unresolved_ref,
                              "'" + e.target + "' is a " + std::string(to_string(kind)) + " and has no field '" + e.field + "'"});
            continue;
        }
        if (kind == ComponentKind::coil && n.relay_of_coil.size() == n.components.size() &&
            n.relay_of_coil[idx] != no_index) {
            errors.push_back({e.span, ErrorKind::unresolved_ref,
                              "coil '" + e.target + "' is driven by relay '" + n.components[n.relay_of_coil[idx]].id +
                                  "'; schedule the relay supply instead"});
        }
    }
    return errors;
}

/// Applies one event to a resolved netlist. Throws StructuralError when the
/// target is missing (check_schedule() rules this out).
inline void apply_event(Netlist& n, const StimulusEvent& e) {
    const std::size_t idx = n.find(e.target);
    if (idx == no_index) throw StructuralError("event target '" + e.target + "' is not in the netlist");
    Component& c = n.components[idx];
    if (e.field == "current" && c.kind() == ComponentKind::coil) c.as<CoilSpec>().current = e.value;
    else if (e.field == "supply" && c.kind() == ComponentKind::relay) c.as<RelaySpec>().supply_current = e.value;
    else if (e.field == "volts" && c.kind() == ComponentKind::source) c.as<SourceSpec>().volts = e.value;
    else if (e.field == "vsrc" && c.kind() == ComponentKind::divider) c.as<DividerSpec>().v_src = e.value;
    else if (e.field == "threshold" && c.kind() == ComponentKind::comparator) c.as<ComparatorSpec>().threshold_v = e.value;
    else throw StructuralError("'" + e.target + "' has no schedulable field '" + e.field + "'");
}

}  // namespace biogate
