#pragma once

// Electronic periphery of the hybrid gates: potential dividers, unity-gain
// buffers, inverting summing amplifiers, comparators, relays and heater coils.

#include "biogate/common.hpp"
#include "biogate/device.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <type_traits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace biogate {

struct SourceSpan {
    std::string file;
    int line = 1;    ///< 1-based
    int column = 1;  ///< 1-based

    bool operator==(const SourceSpan&) const = default;
};

// ---------------------------------------------------------------------------
// Primitive element laws
// ---------------------------------------------------------------------------

inline double divider_voltage(double r_htube, double r_fixed, double v_src) {
    if (!(r_fixed > 0.0)) throw InvalidInput("divider: r_fixed must be positive");
    if (!(r_htube >= 0.0)) throw InvalidInput("divider: H-tube resistance must be non-negative");
    return v_src * r_fixed / (r_fixed + r_htube);
}

inline double summing_amp(std::span<const double> inputs, double gain, double offset_v) {
    if (inputs.size() < 2) throw InvalidInput("summing amplifier needs at least two inputs");
    double sum = 0.0;
    for (double v : inputs) sum += v;
    return gain * sum + offset_v;
}

enum class AssertWhen { below, above };

/// Boundary is inclusive in both modes.
constexpr bool comparator_eval(double v, double threshold_v, AssertWhen mode) noexcept {
    return mode == AssertWhen::below ? v <= threshold_v : v >= threshold_v;
}

enum class Contact { normally_open, normally_closed };

inline double relay_drive(bool asserted, Contact contact, double supply_current) {
    if (!(supply_current >= 0.0)) throw InvalidInput("relay supply current must be non-negative");
    const bool closed = contact == Contact::normally_open ? asserted : !asserted;
    return closed ? supply_current : 0.0;
}

// ---------------------------------------------------------------------------
// Components
// ---------------------------------------------------------------------------

enum class ComponentKind { htube, source, divider, buffer, sumamp, comparator, relay, coil, probe };

constexpr std::string_view to_string(ComponentKind kind) noexcept {
    switch (kind) {
        case ComponentKind::htube: return "htube";
        case ComponentKind::source: return "source";
        case ComponentKind::divider: return "divider";
        case ComponentKind::buffer: return "buffer";
        case ComponentKind::sumamp: return "sumamp";
        case ComponentKind::comparator: return "comparator";
        case ComponentKind::relay: return "relay";
        case ComponentKind::coil: return "coil";
        case ComponentKind::probe: return "probe";
    }
    return "?";
}

struct HTubeSpec {
    std::string preset = "default";
    HTubeProfile profile;
    bool operator==(const HTubeSpec&) const = default;
};

struct SourceSpec {
    double volts = 0.0;
    bool operator==(const SourceSpec&) const = default;
};

struct DividerSpec {
    std::string htube;
    double r_fixed = 1.0e7;
    double v_src = -2.25;
    bool operator==(const DividerSpec&) const = default;
};

struct BufferSpec {
    std::string input;
    bool operator==(const BufferSpec&) const = default;
};

struct SumAmpSpec {
    std::vector<std::string> inputs;
    double gain = -0.5;
    double offset_v = 0.0;
    bool operator==(const SumAmpSpec&) const = default;
};

struct ComparatorSpec {
    std::string input;
    double threshold_v = 0.010;
    AssertWhen when = AssertWhen::below;
    bool operator==(const ComparatorSpec&) const = default;
};

struct RelaySpec {
    std::string comparator;
    Contact contact = Contact::normally_open;
    std::string coil;
    double supply_current = 0.8;
    bool operator==(const RelaySpec&) const = default;
};

struct CoilSpec {
    std::string htube;
    double current = 0.0;  ///< scheduled current; ignored when a relay drives the coil
    CoilParams params;
    bool operator==(const CoilSpec&) const = default;
};

struct ProbeSpec {
    std::string node;
    double clip_v = 2.25;
    bool operator==(const ProbeSpec&) const = default;
};

// Alternative order matches ComponentKind.
using ComponentSpec = std::variant<HTubeSpec, SourceSpec, DividerSpec, BufferSpec, SumAmpSpec, ComparatorSpec,
                                   RelaySpec, CoilSpec, ProbeSpec>;

struct Component {
    std::string id;
    ComponentSpec spec;
    SourceSpan span;                             ///< position of the kind keyword
    std::map<std::string, SourceSpan> key_spans;  ///< position of each key=value token

    ComponentKind kind() const noexcept { return static_cast<ComponentKind>(spec.index()); }

    template <class Spec>
    const Spec& as() const { return std::get<Spec>(spec); }
    template <class Spec>
    Spec& as() { return std::get<Spec>(spec); }

    SourceSpan span_of(const std::string& key) const {
        auto it = key_spans.find(key);
        return it == key_spans.end() ? span : it->second;
    }

    /// Structural equality: positions are ignored.
    bool operator==(const Component& other) const { return id == other.id && spec == other.spec; }
};

constexpr bool produces_voltage(ComponentKind kind) noexcept {
    return kind == ComponentKind::source || kind == ComponentKind::divider || kind == ComponentKind::buffer ||
           kind == ComponentKind::sumamp;
}

constexpr bool is_analog(ComponentKind kind) noexcept {
    return produces_voltage(kind) || kind == ComponentKind::comparator;
}

inline constexpr std::size_t no_index = std::numeric_limits<std::size_t>::max();

struct Netlist {
    std::vector<Component> components;

    // Filled by resolve_links() / validation; empty on a freshly parsed netlist.
    std::vector<std::vector<std::size_t>> links;  ///< resolved references, per component
    std::vector<std::size_t> analog_order;        ///< topological order of the analog subgraph
    std::vector<std::size_t> coil_of_htube;       ///< per component; no_index if unheated or not an htube
    std::vector<std::size_t> relay_of_coil;       ///< per component; no_index if not relay-driven

    std::size_t find(std::string_view id) const {
        for (std::size_t i = 0; i < components.size(); ++i)
            if (components[i].id == id) return i;
        return no_index;
    }

    bool resolved() const { return links.size() == components.size() && !components.empty(); }

    bool operator==(const Netlist& other) const { return components == other.components; }
};

/// Names referenced by a component, in key order (e.g. relay: comparator, coil).
inline std::vector<std::pair<std::string, std::string>> references(const Component& c) {
    std::vector<std::pair<std::string, std::string>> refs;
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, DividerSpec>) refs.emplace_back("htube", s.htube);
            else if constexpr (std::is_same_v<S, BufferSpec>) refs.emplace_back("input", s.input);
            else if constexpr (std::is_same_v<S, SumAmpSpec>) {
                for (const auto& in : s.inputs) refs.emplace_back("inputs", in);
            } else if constexpr (std::is_same_v<S, ComparatorSpec>) refs.emplace_back("input", s.input);
            else if constexpr (std::is_same_v<S, RelaySpec>) {
                refs.emplace_back("comparator", s.comparator);
                refs.emplace_back("coil", s.coil);
            } else if constexpr (std::is_same_v<S, CoilSpec>) refs.emplace_back("htube", s.htube);
            else if constexpr (std::is_same_v<S, ProbeSpec>) refs.emplace_back("node", s.node);
        },
        c.spec);
    return refs;
}

struct AnalogOrder {
    std::vector<std::size_t> order;
    std::vector<std::size_t> cyclic;  ///< analog components left unsorted by a cycle
    bool ok() const { return cyclic.empty(); }
};

/// Kahn's algorithm over the analog subgraph (input -> consumer edges among
/// sources, dividers, buffers, sumamps and comparators). Relay and coil edges
/// are delayed by one step and never take part. Ties break on file order.
/// Requires `links`.
inline AnalogOrder compute_analog_order(const Netlist& n) {
    const std::size_t count = n.components.size();
    std::vector<std::size_t> indegree(count, 0);
    std::vector<std::vector<std::size_t>> consumers(count);
    std::size_t analog_total = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const auto kind = n.components[i].kind();
        if (!is_analog(kind)) continue;
        ++analog_total;
        if (kind == ComponentKind::divider) continue;  // fed by an htube, not by the analog graph
        for (std::size_t src : n.links[i]) {
            if (src == no_index || !is_analog(n.components[src].kind())) continue;
            consumers[src].push_back(i);
            ++indegree[i];
        }
    }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < count; ++i)
        if (is_analog(n.components[i].kind()) && indegree[i] == 0) ready.insert(i);

    AnalogOrder result;
    while (!ready.empty()) {
        const std::size_t i = *ready.begin();
        ready.erase(ready.begin());
        result.order.push_back(i);
        for (std::size_t c : consumers[i])
            if (--indegree[c] == 0) ready.insert(c);
    }
    if (result.order.size() != analog_total) {
        for (std::size_t i = 0; i < count; ++i)
            if (is_analog(n.components[i].kind()) && indegree[i] > 0) result.cyclic.push_back(i);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Network evaluation
// ---------------------------------------------------------------------------

inline constexpr double no_value = std::numeric_limits<double>::quiet_NaN();

struct NetworkState {
    std::vector<double> voltage;        ///< per component; NaN where there is no output node
    std::vector<std::uint8_t> asserted;  ///< comparators and relays, computed this step
    std::vector<double> coil_current;   ///< per component; applied over the next interval
};

/// Evaluates the analog network for one step. `resistance` is indexed by
/// component (only htube entries are read). Coil currents come from
/// `prev_asserted`, the relay states of the previous step, so feedback loops
/// through relays never depend on this step's own outputs. An empty
/// `prev_asserted` means every relay starts released.
inline NetworkState evaluate_network(const Netlist& n, std::span<const double> resistance,
                                     std::span<const std::uint8_t> prev_asserted) {
    const std::size_t count = n.components.size();
    if (!n.resolved() || n.coil_of_htube.size() != count || n.relay_of_coil.size() != count)
        throw StructuralError("evaluate_network: netlist has not been validated");
    if (resistance.size() != count) throw StructuralError("evaluate_network: resistance vector size mismatch");
    if (!prev_asserted.empty() && prev_asserted.size() != count)
        throw StructuralError("evaluate_network: relay state vector size mismatch");

    NetworkState st;
    st.voltage.assign(count, no_value);
    st.asserted.assign(count, 0);
    st.coil_current.assign(count, no_value);

    const auto was_asserted = [&](std::size_t i) { return !prev_asserted.empty() && prev_asserted[i] != 0; };
    const auto input = [&](std::size_t src) {
        const double v = st.voltage[src];
        if (std::isnan(v)) throw StructuralError("evaluate_network: '" + n.components[src].id + "' has no voltage yet");
        return v;
    };

    for (std::size_t i = 0; i < count; ++i) {
        const Component& c = n.components[i];
        if (c.kind() != ComponentKind::coil) continue;
        const std::size_t relay = n.relay_of_coil[i];
        if (relay == no_index) {
            st.coil_current[i] = c.as<CoilSpec>().current;
        } else {
            const auto& r = n.components[relay].as<RelaySpec>();
            st.coil_current[i] = relay_drive(was_asserted(relay), r.contact, r.supply_current);
        }
    }

    std::vector<double> scratch;
    for (std::size_t i : n.analog_order) {
        const Component& c = n.components[i];
        const auto& links = n.links[i];
        switch (c.kind()) {
            case ComponentKind::source:
                st.voltage[i] = c.as<SourceSpec>().volts;
                break;
            case ComponentKind::divider: {
                const auto& d = c.as<DividerSpec>();
                st.voltage[i] = divider_voltage(resistance[links.at(0)], d.r_fixed, d.v_src);
                break;
            }
            case ComponentKind::buffer:
                st.voltage[i] = input(links.at(0));
                break;
            case ComponentKind::sumamp: {
                const auto& s = c.as<SumAmpSpec>();
                scratch.clear();
                for (std::size_t src : links) scratch.push_back(input(src));
                st.voltage[i] = summing_amp(scratch, s.gain, s.offset_v);
                break;
            }
            case ComponentKind::comparator: {
                const auto& k = c.as<ComparatorSpec>();
                st.asserted[i] = comparator_eval(input(links.at(0)), k.threshold_v, k.when) ? 1 : 0;
                break;
            }
            default:
                throw StructuralError("evaluate_network: non-analog component in evaluation order");
        }
    }

    for (std::size_t i = 0; i < count; ++i)
        if (n.components[i].kind() == ComponentKind::relay) st.asserted[i] = st.asserted[n.links[i].at(0)];
    return st;
}

}  // namespace biogate
