#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

using namespace biogate;
using Catch::Matchers::WithinAbs;

TEST_CASE("divider uses the series law") {
    CHECK_THAT(divider_voltage(2.27e6, 1e7, -2.25), WithinAbs(-2.25 * 10.0 / 12.27, 1e-12));
    CHECK_THAT(divider_voltage(0.0, 1e7, -2.25), WithinAbs(-2.25, 1e-15));
    CHECK(std::fabs(divider_voltage(3e14, 1e7, -2.25)) < 1e-6);
    CHECK_THROWS_AS(divider_voltage(1e6, 0.0, -2.25), InvalidInput);
    CHECK_THROWS_AS(divider_voltage(-1.0, 1e7, -2.25), InvalidInput);
}

TEST_CASE("summing amplifier is an inverting adder") {
    const std::array<double, 2> two{-1.8, -0.002};
    CHECK_THAT(summing_amp(two, -0.5, 0.0), WithinAbs(0.901, 1e-12));
    const std::array<double, 3> three{0.1, 0.2, 0.3};
    CHECK_THAT(summing_amp(three, -0.5, -0.031), WithinAbs(-0.331, 1e-12));
    const std::array<double, 1> one{0.1};
    CHECK_THROWS_AS(summing_amp(one, -0.5, 0.0), InvalidInput);
}

TEST_CASE("comparator boundary is inclusive") {
    CHECK(comparator_eval(0.010, 0.010, AssertWhen::below));
    CHECK(comparator_eval(0.009, 0.010, AssertWhen::below));
    CHECK_FALSE(comparator_eval(0.011, 0.010, AssertWhen::below));
    CHECK(comparator_eval(0.010, 0.010, AssertWhen::above));
    CHECK_FALSE(comparator_eval(0.009, 0.010, AssertWhen::above));
}

TEST_CASE("relay contacts") {
    CHECK(relay_drive(true, Contact::normally_open, 0.8) == 0.8);
    CHECK(relay_drive(false, Contact::normally_open, 0.8) == 0.0);
    CHECK(relay_drive(true, Contact::normally_closed, 0.8) == 0.0);
    CHECK(relay_drive(false, Contact::normally_closed, 0.8) == 0.8);
    CHECK_THROWS_AS(relay_drive(true, Contact::normally_open, -0.1), InvalidInput);
}

namespace {

constexpr std::string_view gate = R"(htube A
htube B
coil CA htube=A
coil CB htube=B current=0.8A
divider DA htube=A
divider DB htube=B
sumamp Q inputs=DA,DB
comparator K input=Q threshold=10mV
relay RL comparator=K mode=NC coil=CA
probe P node=Q
)";

std::vector<double> resistances(const Netlist& n, double ra, double rb) {
    std::vector<double> r(n.components.size(), no_value);
    r[n.find("A")] = ra;
    r[n.find("B")] = rb;
    return r;
}

}  // namespace

TEST_CASE("network evaluation follows the topological order") {
    const Netlist n = support::netlist(gate);
    const auto st = evaluate_network(n, resistances(n, 2.27e6, 1e10), {});
    const double da = -2.25 * 1e7 / (1e7 + 2.27e6);
    const double db = -2.25 * 1e7 / (1e7 + 1e10);
    CHECK_THAT(st.voltage[n.find("DA")], WithinAbs(da, 1e-12));
    CHECK_THAT(st.voltage[n.find("Q")], WithinAbs(-0.5 * (da + db), 1e-12));
    CHECK(st.asserted[n.find("K")] == 0);
    CHECK(st.asserted[n.find("RL")] == 0);
    CHECK(std::isnan(st.voltage[n.find("K")]));
    CHECK(std::isnan(st.voltage[n.find("P")]));
}

TEST_CASE("coil currents follow the previous relay state") {
    const Netlist n = support::netlist(gate);
    const auto low = resistances(n, 1e10, 1e10);

    // No previous state: relay released, NC contact closed.
    auto first = evaluate_network(n, low, {});
    CHECK(first.coil_current[n.find("CA")] == 0.8);
    CHECK(first.coil_current[n.find("CB")] == 0.8);
    CHECK(first.asserted[n.find("RL")] == 1);

    // This step's assertion only reaches the coil on the next evaluation.
    auto second = evaluate_network(n, low, first.asserted);
    CHECK(second.coil_current[n.find("CA")] == 0.0);
}

TEST_CASE("evaluation rejects an unvalidated netlist") {
    auto parsed = parse_components(gate, "g.bgn");
    REQUIRE(parsed.ok());
    std::vector<double> r(parsed.value->components.size(), 1e6);
    CHECK_THROWS_AS(evaluate_network(*parsed.value, r, {}), StructuralError);

    const Netlist n = support::netlist(gate);
    std::vector<double> short_r(2, 1e6);
    CHECK_THROWS_AS(evaluate_network(n, short_r, {}), StructuralError);
}

TEST_CASE("analog order ignores relay and coil edges") {
    // Cross-coupled through relays: legal, and sorts without a cycle.
    const Netlist n = support::netlist(support::slurp(support::source_dir() / "scenarios/sr_latch.bgn"));
    const auto order = compute_analog_order(n);
    REQUIRE(order.ok());
    const auto pos = [&](std::string_view id) {
        const auto idx = n.find(id);
        return std::find(order.order.begin(), order.order.end(), idx) - order.order.begin();
    };
    CHECK(pos("DS") < pos("Q"));
    CHECK(pos("DXQB") < pos("Q"));
    CHECK(pos("Q") < pos("KQ"));
    CHECK(pos("QB") < pos("KQB"));
}
