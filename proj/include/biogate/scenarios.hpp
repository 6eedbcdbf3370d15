#pragma once

// The five canonical experiments. The texts below are kept byte-identical to
// scenarios/*.bgn and scenarios/*.bgs (checked by the test suite).

#include "biogate/analysis.hpp"
#include "biogate/dsl.hpp"
#include "biogate/engine.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biogate {

namespace corpus {

inline constexpr std::string_view two_way_nand_bgn = R"(# Two-input analogue NAND gate.
# Each H-tube sits in a potential divider; the summing amplifier output is high
# unless both tubes are heat-stimulated.
htube A profile=default
htube B profile=default
coil CA htube=A
coil CB htube=B
divider DA htube=A rfixed=10Mohm vsrc=-2.25V
divider DB htube=B rfixed=10Mohm vsrc=-2.25V
sumamp Q inputs=DA,DB gain=-0.5 offset=0V
probe PQ node=Q
probe PA node=DA
probe PB node=DB
)";

inline constexpr std::string_view two_way_nand_bgs = R"(# Five 18 min duty cycles: 10 min rest, then 8 min under the input condition.
# cycle 1 <1,1>
at 600s set CA.current 0.8A
at 600s set CB.current 0.8A
at 1080s set CA.current 0A
at 1080s set CB.current 0A
# cycle 2 <0,1>
at 1680s set CB.current 0.8A
at 2160s set CB.current 0A
# cycle 3 <1,1>
at 2760s set CA.current 0.8A
at 2760s set CB.current 0.8A
at 3240s set CA.current 0A
at 3240s set CB.current 0A
# cycle 4 <1,0>
at 3840s set CA.current 0.8A
at 4320s set CA.current 0A
# cycle 5 <1,1>
at 4920s set CA.current 0.8A
at 4920s set CB.current 0.8A
at 5400s set CA.current 0A
at 5400s set CB.current 0A
)";

inline constexpr std::string_view three_way_nand_bgn = R"(# Three-input analogue NAND gate: two cascaded summing amplifiers.
# Q = 0.25 (DA + DB) - 0.5 DC - 31 mV
# The three organisms differ in resting, stimulated and reformed resistance.
htube A profile=default r_rest=31.6Mohm r_rest_sd=1Mohm reform_target=50Mohm rest_recovery_tau=300s
htube B profile=default r_rest=16.4Mohm r_rest_sd=0.5Mohm r_stim_low=1.6Gohm r_stim_high=2.6Gohm reform_target=26Mohm rest_recovery_tau=300s
htube C profile=default r_rest=10.9Mohm r_rest_sd=0.35Mohm reform_target=17.5Mohm rest_recovery_tau=300s
coil CA htube=A
coil CB htube=B
coil CC htube=C
divider DA htube=A rfixed=10Mohm vsrc=-2.25V
divider DB htube=B rfixed=10Mohm vsrc=-2.25V
divider DC htube=C rfixed=10Mohm vsrc=-2.25V
sumamp S1 inputs=DA,DB gain=-0.5 offset=0V
sumamp Q inputs=S1,DC gain=-0.5 offset=-31mV
probe PQ node=Q
probe PA node=DA
probe PB node=DB
probe PC node=DC
)";

inline constexpr std::string_view three_way_nand_bgs = R"(# Truth-table rows in the order 000 001 010 100 110 011 101 111, three times.
# Each row: 8 min under the condition, then 30 min rest.
# replicate 1
at 2280s set CC.current 0.8A
at 2760s set CC.current 0A
at 4560s set CB.current 0.8A
at 5040s set CB.current 0A
at 6840s set CA.current 0.8A
at 7320s set CA.current 0A
at 9120s set CA.current 0.8A
at 9120s set CB.current 0.8A
at 9600s set CA.current 0A
at 9600s set CB.current 0A
at 11400s set CB.current 0.8A
at 11400s set CC.current 0.8A
at 11880s set CB.current 0A
at 11880s set CC.current 0A
at 13680s set CA.current 0.8A
at 13680s set CC.current 0.8A
at 14160s set CA.current 0A
at 14160s set CC.current 0A
at 15960s set CA.current 0.8A
at 15960s set CB.current 0.8A
at 15960s set CC.current 0.8A
at 16440s set CA.current 0A
at 16440s set CB.current 0A
at 16440s set CC.current 0A
# replicate 2
at 20520s set CC.current 0.8A
at 21000s set CC.current 0A
at 22800s set CB.current 0.8A
at 23280s set CB.current 0A
at 25080s set CA.current 0.8A
at 25560s set CA.current 0A
at 27360s set CA.current 0.8A
at 27360s set CB.current 0.8A
at 27840s set CA.current 0A
at 27840s set CB.current 0A
at 29640s set CB.current 0.8A
at 29640s set CC.current 0.8A
at 30120s set CB.current 0A
at 30120s set CC.current 0A
at 31920s set CA.current 0.8A
at 31920s set CC.current 0.8A
at 32400s set CA.current 0A
at 32400s set CC.current 0A
at 34200s set CA.current 0.8A
at 34200s set CB.current 0.8A
at 34200s set CC.current 0.8A
at 34680s set CA.current 0A
at 34680s set CB.current 0A
at 34680s set CC.current 0A
# replicate 3
at 38760s set CC.current 0.8A
at 39240s set CC.current 0A
at 41040s set CB.current 0.8A
at 41520s set CB.current 0A
at 43320s set CA.current 0.8A
at 43800s set CA.current 0A
at 45600s set CA.current 0.8A
at 45600s set CB.current 0.8A
at 46080s set CA.current 0A
at 46080s set CB.current 0A
at 47880s set CB.current 0.8A
at 47880s set CC.current 0.8A
at 48360s set CB.current 0A
at 48360s set CC.current 0A
at 50160s set CA.current 0.8A
at 50160s set CC.current 0.8A
at 50640s set CA.current 0A
at 50640s set CC.current 0A
at 52440s set CA.current 0.8A
at 52440s set CB.current 0.8A
at 52440s set CC.current 0.8A
at 52920s set CA.current 0A
at 52920s set CB.current 0A
at 52920s set CC.current 0A
)";

inline constexpr std::string_view and_and_bgn = R"(# Cascaded AND gates: ((A1.A2).B2) = (B1.B2) = Q.
# Gate 1 drives the heater of B1 through a normally open relay, so B1 is
# heated while Q1 is low.
htube A1 profile=default
htube A2 profile=default
htube B1 profile=default
htube B2 profile=default
coil CA1 htube=A1
coil CA2 htube=A2
coil CB1 htube=B1
coil CB2 htube=B2
divider DA1 htube=A1 rfixed=10Mohm vsrc=-2.25V
divider DA2 htube=A2 rfixed=10Mohm vsrc=-2.25V
divider DB1 htube=B1 rfixed=10Mohm vsrc=-2.25V
divider DB2 htube=B2 rfixed=10Mohm vsrc=-2.25V
sumamp Q1 inputs=DA1,DA2 gain=-0.5 offset=0V
comparator K1 input=Q1 threshold=10mV assert=below
relay R1 comparator=K1 mode=NO coil=CB1 supply=0.8A
sumamp Q2 inputs=DB1,DB2 gain=-0.5 offset=0V
probe PQ1 node=Q1
probe PQ2 node=Q2
probe PR1 node=R1
)";

inline constexpr std::string_view and_and_bgs = R"(# All inputs true, then all released at 480 s.
at 0s set CA1.current 0.8A
at 0s set CA2.current 0.8A
at 200s set CB2.current 0.8A
at 480s set CA1.current 0A
at 480s set CA2.current 0A
at 480s set CB2.current 0A
)";

inline constexpr std::string_view nand_nand_bgn = R"(# Cascaded NAND gates: ((A1.A2)'.B2)' = (B1.B2)' = Q'.
# Gate 1 drives the heater of B1 through a normally closed relay, so B1 is
# heated while Q1 is high.
htube A1 profile=default
htube A2 profile=default
htube B1 profile=default
htube B2 profile=default
coil CA1 htube=A1
coil CA2 htube=A2
coil CB1 htube=B1
coil CB2 htube=B2
divider DA1 htube=A1 rfixed=10Mohm vsrc=-2.25V
divider DA2 htube=A2 rfixed=10Mohm vsrc=-2.25V
divider DB1 htube=B1 rfixed=10Mohm vsrc=-2.25V
divider DB2 htube=B2 rfixed=10Mohm vsrc=-2.25V
sumamp Q1 inputs=DA1,DA2 gain=-0.5 offset=0V
comparator K1 input=Q1 threshold=10mV assert=below
relay R1 comparator=K1 mode=NC coil=CB1 supply=0.8A
sumamp Q2 inputs=DB1,DB2 gain=-0.5 offset=0V
probe PQ1 node=Q1
probe PQ2 node=Q2
probe PR1 node=R1
)";

inline constexpr std::string_view nand_nand_bgs = R"(# B2 held true throughout; A1 and A2 toggled together in 20 min phases.
at 0s set CB2.current 0.8A
at 1200s set CA1.current 0.8A
at 1200s set CA2.current 0.8A
at 2400s set CA1.current 0A
at 2400s set CA2.current 0A
at 3600s set CA1.current 0.8A
at 3600s set CA2.current 0.8A
at 4800s set CA1.current 0A
at 4800s set CA2.current 0A
)";

inline constexpr std::string_view sr_latch_bgn = R"(# Low SR latch from two cross-coupled NAND gates, (S.R) = (Q.Q').
# XQ and XQB are feedback H-tubes heated through normally closed relays, so
# each follows the logic value of its gate output.
htube S profile=default reform_ref_duration=300s
htube R profile=default reform_ref_duration=300s
htube XQ profile=default reform_ref_duration=150s
htube XQB profile=default reform_ref_duration=150s
coil CS htube=S
coil CR htube=R
coil CXQ htube=XQ
coil CXQB htube=XQB
divider DS htube=S rfixed=10Mohm vsrc=-2.25V
divider DR htube=R rfixed=10Mohm vsrc=-2.25V
divider DXQ htube=XQ rfixed=10Mohm vsrc=-2.25V
divider DXQB htube=XQB rfixed=10Mohm vsrc=-2.25V
sumamp Q inputs=DS,DXQB gain=-0.5 offset=0V
sumamp QB inputs=DR,DXQ gain=-0.5 offset=0V
comparator KQ input=Q threshold=10mV assert=below
comparator KQB input=QB threshold=10mV assert=below
relay RQ comparator=KQ mode=NC coil=CXQ supply=0.8A
relay RQB comparator=KQB mode=NC coil=CXQB supply=0.8A
probe PQ node=Q
probe PQB node=QB
)";

inline constexpr std::string_view sr_latch_bgs = R"(# (S,R) = (1,0), (1,1), (0,1), (1,1), (1,0); 10 min each.
at 0s set CS.current 0.8A
at 600s set CR.current 0.8A
at 1200s set CS.current 0A
at 1800s set CS.current 0.8A
at 2400s set CR.current 0A
)";

}  // namespace corpus

struct Scenario {
    std::string name;
    std::string netlist_text;
    std::string schedule_text;
    Netlist netlist;
    Schedule schedule;
    SimConfig config;
    std::optional<TruthTableSpec> truth_table;
    std::vector<DelayProbe> delays;

    TraceSet run() const { return biogate::run(netlist, schedule, config); }
};

inline constexpr std::array<std::string_view, 5> scenario_names{"two_way_nand", "three_way_nand", "and_and", "nand_nand",
                                                                "sr_latch"};

namespace detail {

inline Scenario build_scenario(std::string_view name, std::string_view bgn, std::string_view bgs, double duration) {
    Scenario s;
    s.name = std::string(name);
    s.netlist_text = std::string(bgn);
    s.schedule_text = std::string(bgs);
    auto n = parse_netlist(bgn, s.name + ".bgn");
    if (!n.ok()) throw StructuralError("built-in scenario netlist is invalid: " + format_error(n.errors.front()));
    auto sch = parse_schedule(bgs, s.name + ".bgs");
    if (!sch.ok()) throw StructuralError("built-in scenario schedule is invalid: " + format_error(sch.errors.front()));
    if (auto errors = check_schedule(*n.value, *sch.value); !errors.empty())
        throw StructuralError("built-in scenario schedule is invalid: " + format_error(errors.front()));
    s.netlist = std::move(*n.value);
    s.schedule = std::move(*sch.value);
    s.config.duration = duration;
    return s;
}

}  // namespace detail

/// Netlist, schedule and run configuration for one canonical experiment.
/// The duration covers every event plus one full reforming window.
inline Scenario scenario(std::string_view name) {
    if (name == "two_way_nand") {
        auto s = detail::build_scenario(name, corpus::two_way_nand_bgn, corpus::two_way_nand_bgs, 6000.0);
        s.truth_table = TruthTableSpec{{"CA", "CB"}, "PQ.voltage", 240.0, std::nullopt, {}};
        s.delays = {{"both inputs on -> Q low", "PQ.voltage", 600.0, 0.010, Crossing::falling, 5.0}};
        return s;
    }
    if (name == "three_way_nand") {
        auto s = detail::build_scenario(name, corpus::three_way_nand_bgn, corpus::three_way_nand_bgs, 54720.0);
        s.truth_table = TruthTableSpec{{"CA", "CB", "CC"}, "PQ.voltage", 240.0, 240.0, {}};
        s.delays = {{"all inputs on -> Q low", "PQ.voltage", 15960.0, 0.050, Crossing::falling, 5.0}};
        return s;
    }
    if (name == "and_and") {
        auto s = detail::build_scenario(name, corpus::and_and_bgn, corpus::and_and_bgs, 1500.0);
        s.delays = {{"inputs on -> Q low", "PQ2.voltage", 0.0, 0.010, Crossing::falling, 5.0},
                    {"inputs off -> Q high (overall)", "PQ2.voltage", 480.0, 0.010, Crossing::rising, 5.0},
                    {"inputs off -> Q1 high", "PQ1.voltage", 480.0, 0.010, Crossing::rising, 5.0}};
        return s;
    }
    if (name == "nand_nand") {
        auto s = detail::build_scenario(name, corpus::nand_nand_bgn, corpus::nand_nand_bgs, 5400.0);
        s.delays = {{"A on -> Q' high", "PQ2.voltage", 1200.0, 0.010, Crossing::rising, 5.0},
                    {"A off -> Q' low", "PQ2.voltage", 2400.0, 0.010, Crossing::falling, 5.0},
                    {"A on -> Q' high (second)", "PQ2.voltage", 3600.0, 0.010, Crossing::rising, 5.0},
                    {"A off -> Q' low (second)", "PQ2.voltage", 4800.0, 0.010, Crossing::falling, 5.0}};
        return s;
    }
    if (name == "sr_latch") {
        auto s = detail::build_scenario(name, corpus::sr_latch_bgn, corpus::sr_latch_bgs, 3600.0);
        s.delays = {{"Reset->Set", "PQ.voltage", 1200.0, 0.010, Crossing::rising, 5.0},
                    {"Set->Reset", "PQB.voltage", 2400.0, 0.010, Crossing::rising, 5.0}};
        return s;
    }
    throw InvalidInput("unknown scenario '" + std::string(name) + "'");
}

}  // namespace biogate
