#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

using namespace biogate;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr std::string_view single = R"(htube A
coil CA htube=A
divider DA htube=A
probe PA node=DA
)";

SimConfig config(double duration, std::uint64_t seed = 1, bool zero_noise = true) {
    SimConfig c;
    c.duration = duration;
    c.seed = seed;
    c.zero_noise = zero_noise;
    return c;
}

}  // namespace

TEST_CASE("initial sample is the resting divider voltage") {
    const auto traces = run(support::netlist(single), Schedule{}, config(1.0));
    REQUIRE(traces.time.size() == 2);
    CHECK(traces.time[0] == 0.0);
    CHECK_THAT(traces.at("PA.voltage").values[0], WithinAbs(-2.25 * 10.0 / (10.0 + 2.27), 1e-12));
}

TEST_CASE("time axis has floor(duration/dt)+1 samples") {
    const Netlist n = support::netlist(single);
    CHECK(run(n, Schedule{}, config(10.0)).time.size() == 11);
    auto c = config(10.0);
    c.dt = 0.3;
    const auto t = run(n, Schedule{}, c);
    CHECK(t.time.size() == static_cast<std::size_t>(std::floor(10.0 / 0.3)) + 1);
    CHECK_THAT(t.time.back(), WithinAbs(33 * 0.3, 1e-12));
}

TEST_CASE("config is validated") {
    const Netlist n = support::netlist(single);
    auto c = config(10.0);
    c.dt = 0.0;
    CHECK_THROWS_AS(run(n, Schedule{}, c), InvalidInput);
    c = config(0.5);
    CHECK_THROWS_AS(run(n, Schedule{}, c), InvalidInput);
    c = config(10.0);
    c.record_fields = {RecordField::voltage, RecordField::voltage};
    CHECK_THROWS_AS(run(n, Schedule{}, c), InvalidInput);
}

TEST_CASE("invalid netlist or schedule is a structural error") {
    auto parsed = parse_components("htube A\ncoil C htube=B\n", "x.bgn");
    REQUIRE(parsed.ok());
    CHECK_THROWS_AS(run(*parsed.value, Schedule{}, config(5.0)), StructuralError);
    CHECK_THROWS_AS(run(support::netlist(single), support::schedule("at 0s set ZZ.current 1A\n"), config(5.0)),
                    StructuralError);
}

TEST_CASE("response time at 0.8 A is threshold crossing plus latency") {
    const auto sch = support::schedule("at 0s set CA.current 0.8A\n");
    const auto t = run(support::netlist(single), sch, config(400.0));
    const auto& v = t.at("PA.voltage").values;
    std::size_t k = 0;
    while (k < v.size() && v[k] < -0.010) ++k;
    // ceil(-30 ln(1 - 8/17.92)) s to reach 30 degC, then 172 s counted from that step.
    const auto cross = static_cast<std::size_t>(std::ceil(-30.0 * std::log(1.0 - 8.0 / 17.92)));
    CHECK(k == cross + 171);
}

TEST_CASE("an event at T affects samples from T onward") {
    const auto n = support::netlist("source V volts=1V\nprobe P node=V\n");
    const auto t = run(n, support::schedule("at 10s set V.volts 2V\n"), config(20.0));
    const auto& v = t.at("P.voltage").values;
    CHECK(v[9] == 1.0);
    CHECK(v[10] == 2.0);
    CHECK(v[20] == 2.0);

    const auto coil = run(support::netlist(single), support::schedule("at 10s set CA.current 0.8A\n"), [] {
        auto c = config(20.0);
        c.record_fields = {RecordField::temperature, RecordField::coil_current};
        return c;
    }());
    CHECK(coil.at("PA.coil_current").values[9] == 0.0);
    CHECK(coil.at("PA.coil_current").values[10] == 0.8);
    CHECK(coil.at("PA.temperature").values[10] == 22.0);
    CHECK(coil.at("PA.temperature").values[11] > 22.0);
}

TEST_CASE("probe voltages are clipped only when recorded") {
    const auto n = support::netlist(R"(source V volts=3.1V
probe P node=V
sumamp Q inputs=V,V gain=-0.5
comparator K input=Q threshold=-3V assert=below
probe PK node=K
)");
    auto c = config(2.0);
    c.record_fields = {RecordField::voltage, RecordField::relay};
    Simulator sim(n, Schedule{}, c);
    sim.step();
    CHECK(sim.network().voltage[n.find("V")] == 3.1);
    // The comparator saw -3.1 V, which only exists before clipping.
    CHECK(sim.network().asserted[n.find("K")] == 1);
    const auto t = sim.run();
    CHECK(t.at("P.voltage").values[0] == 2.25);
    CHECK(t.at("PK.relay").values[0] == 1.0);
    const std::string text = support::csv(t);
    CHECK(text.find("\n0,2.25,nan,nan,1\n") != std::string::npos);
}

TEST_CASE("series count is probes times fields") {
    auto s = scenario("sr_latch");
    auto c = config(10.0);
    c.record_fields = {RecordField::voltage, RecordField::resistance, RecordField::temperature, RecordField::relay,
                       RecordField::coil_current};
    const auto t = run(s.netlist, s.schedule, c);
    CHECK(t.series.size() == 2 * 5);
    for (const auto& series : t.series) CHECK(series.values.size() == t.time.size());
}

TEST_CASE("runs are bit-identical under a fixed seed") {
    const auto s = scenario("two_way_nand");
    auto c = s.config;
    c.seed = 42;
    c.record_fields = {RecordField::voltage, RecordField::resistance};
    const std::string a = support::csv(run(s.netlist, s.schedule, c));
    const std::string b = support::csv(run(s.netlist, s.schedule, c));
    const std::string d = support::csv(run(s.netlist, s.schedule, c));
    CHECK(a == b);
    CHECK(a == d);
    c.seed = 43;
    CHECK(support::csv(run(s.netlist, s.schedule, c)) != a);
}

TEST_CASE("device noise does not depend on probes or line order") {
    const std::string base = "htube A\nhtube B\ncoil CA htube=A\ndivider DA htube=A\ndivider DB htube=B\nprobe PA node=DA\n";
    const std::string more = "htube B\nhtube A\ndivider DB htube=B\nprobe PB node=DB\ncoil CA htube=A\ndivider DA htube=A\nprobe PA node=DA\n";
    const auto sch = support::schedule("at 0s set CA.current 0.8A\n");
    auto c = config(600.0, 9, false);
    const auto a = run(support::netlist(base), sch, c);
    const auto b = run(support::netlist(more), sch, c);
    CHECK(a.at("PA.voltage").values == b.at("PA.voltage").values);
}

TEST_CASE("halving dt moves zero-noise transitions by at most one coarse step") {
    const auto s = scenario("sr_latch");
    auto coarse = s.config;
    coarse.zero_noise = true;
    auto fine = coarse;
    fine.dt = 0.5;
    const auto tc = run(s.netlist, s.schedule, coarse);
    const auto tf = run(s.netlist, s.schedule, fine);
    for (const auto& probe : s.delays) {
        INFO(probe.edge);
        const auto dc = propagation_delay(tc.time, tc.at(probe.series).values, probe.t_event, probe.threshold,
                                          probe.direction, probe.debounce);
        const auto df = propagation_delay(tf.time, tf.at(probe.series).values, probe.t_event, probe.threshold,
                                          probe.direction, probe.debounce);
        REQUIRE(dc);
        REQUIRE(df);
        CHECK(std::fabs(*dc - *df) <= coarse.dt);
    }
}

TEST_CASE("relay feedback only sees the previous step") {
    // An inverter ring through a relay: the comparator output heats its own
    // input tube. With a one-step delay the loop is well defined.
    const auto n = support::netlist(R"(source V volts=0.5V
htube A
coil CA htube=A
divider DA htube=A
sumamp Q inputs=DA,V gain=-0.5
comparator K input=Q threshold=0.1V assert=above
relay RL comparator=K mode=NO coil=CA
probe PK node=RL
probe PC node=CA
)");
    auto c = config(5.0);
    c.record_fields = {RecordField::relay, RecordField::coil_current};
    Simulator sim(n, Schedule{}, c);
    sim.step();
    // Q = -0.5 (-1.83 + 0.5) > 0.1 V: asserted now, coil still off.
    CHECK(sim.network().asserted[n.find("RL")] == 1);
    CHECK(sim.network().coil_current[n.find("CA")] == 0.0);
    sim.step();
    CHECK(sim.network().coil_current[n.find("CA")] == 0.8);
}

TEST_CASE("CSV layout") {
    const auto t = run(support::netlist(single), Schedule{}, config(2.0, 5));
    const std::string text = support::csv(t);
    std::istringstream in(text);
    std::string line;
    int preamble = 0, rows = 0;
    std::string header;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) ++preamble;
        else if (header.empty()) header = line;
        else ++rows;
    }
    CHECK(preamble >= 1);
    CHECK(text.find("# seed=5\n") != std::string::npos);
    CHECK(text.find("# netlist_hash=" + netlist_hash(support::netlist(single)) + "\n") != std::string::npos);
    CHECK(header == "t_s,PA.voltage");
    CHECK(rows == 3);
    CHECK(text.find("\n0,-1.83374\n") != std::string::npos);

    CHECK_THROWS_AS(support::csv(TraceSet{}), InvalidInput);
}

TEST_CASE("CSV round trip keeps six significant digits") {
    const auto s = scenario("two_way_nand");
    auto c = s.config;
    c.seed = 3;
    c.duration = 1500.0;
    c.record_fields = {RecordField::voltage, RecordField::resistance, RecordField::temperature};
    const auto original = run(s.netlist, s.schedule, c);
    std::istringstream in(support::csv(original));
    const auto back = import_csv(in);
    CHECK(back.meta == original.meta);
    REQUIRE(back.time == original.time);
    REQUIRE(back.series.size() == original.series.size());
    for (std::size_t i = 0; i < original.series.size(); ++i) {
        CHECK(back.series[i].name == original.series[i].name);
        for (std::size_t k = 0; k < original.time.size(); ++k) {
            const double a = original.series[i].values[k];
            const double b = back.series[i].values[k];
            // half a unit in the sixth significant digit
            if (std::isnan(a)) REQUIRE(std::isnan(b));
            else REQUIRE(std::fabs(a - b) <= 5e-6 * std::fabs(a));
        }
    }
    // Re-export is a fixed point.
    CHECK(support::csv(back) == support::csv(original));
}

TEST_CASE("CSV I/O failures name the path") {
    const auto t = run(support::netlist(single), Schedule{}, config(2.0));
    try {
        export_csv(t, std::filesystem::path("/nonexistent_dir/sub/traces.csv"));
        FAIL("expected an exception");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/nonexistent_dir/sub/traces.csv") != std::string::npos);
    }
    CHECK_THROWS_AS(import_csv(std::filesystem::path("/nonexistent_dir/x.csv")), IoError);
    std::istringstream bad("t_s,P.voltage\n0,abc\n");
    CHECK_THROWS_AS(import_csv(bad), InvalidInput);
}

TEST_CASE("recorded fields resolve through the probed node") {
    auto c = config(300.0);
    c.record_fields = {RecordField::resistance, RecordField::temperature, RecordField::coil_current};
    const auto t = run(support::netlist(single), support::schedule("at 0s set CA.current 0.8A\n"), c);
    CHECK(t.at("PA.resistance").values[0] == 2.27e6);
    CHECK(t.at("PA.resistance").values[300] == HTubeProfile{}.stimulated_mid());
    CHECK_THAT(t.at("PA.temperature").values[300], WithinRel(22.0 + 17.92 * (1.0 - std::exp(-10.0)), 1e-9));
    CHECK(t.at("PA.coil_current").values[5] == 0.8);
}
