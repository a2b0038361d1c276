#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "fanet/baselines.hpp"
#include "fanet/connectivity.hpp"
#include "fanet/metrics.hpp"
#include "fanet/mobility.hpp"
#include "fanet/netsim.hpp"

using namespace fanet;

namespace {

FormationTrack points_track(const std::vector<Vec3>& pts, double sim_end = 20.0) {
    return FormationTrack::from_static_positions(pts, sim_end);
}

struct Lab {
    RadioParams radio;
    MacParams mac;
    double prop(double d) const { return d / radio.propagation_speed; }
    // On-air time for a frame carrying `bytes` network-layer bytes.
    double at(int bytes) const { return (bytes + 34) * 8.0 / radio.data_rate_bps; }
};

long control_tx_count(const MetricsLedger& led) {
    long n = 0;
    for (const TxRecord& tx : led.transmissions())
        if (tx.cls == FrameClass::Control) ++n;
    return n;
}

std::vector<int> control_tx_bytes(const MetricsLedger& led) {
    std::vector<int> out;
    for (const TxRecord& tx : led.transmissions())
        if (tx.cls == FrameClass::Control) out.push_back(tx.bytes);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("on-demand: two connected nodes discover with one flood and one reply") {
    Lab lab;
    auto track = points_track({{0, 0, 0}, {1000, 0, 0}});
    Engine eng(track, lab.radio, lab.mac, 11, 0);
    AodvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(1.0, 0, 1, 1, 1000);
    eng.run(5.0);

    const auto& led = eng.ledger();
    CHECK(led.packet(1).outcome == PacketOutcome::Delivered);
    REQUIRE(agent.route_hops(0, 1).has_value());
    CHECK(*agent.route_hops(0, 1) == 1);
    CHECK(agent.floods_started() == 1);
    // Exactly one request broadcast (8 B) and one reply (6 B), 34 B overhead each.
    CHECK(control_tx_bytes(led) == std::vector<int>{40, 42});

    // request leg + reply leg + data leg, each DIFS + airtime + propagation
    const double d = 1000.0;
    const double expect = 1.0 + 3 * lab.mac.difs + lab.at(8) + lab.at(6) + lab.at(1008) +
                          3 * lab.prop(d);
    CHECK(led.packet(1).received_at == doctest::Approx(expect).epsilon(1e-12));
    CHECK(*overhead_efficiency(led) == doctest::Approx(1000.0 / 82.0).epsilon(1e-15));
}

TEST_CASE("on-demand: a four-node line discovers a three-hop route") {
    Lab lab;
    auto track = points_track({{0, 0, 0}, {3000, 0, 0}, {6000, 0, 0}, {9000, 0, 0}});
    Engine eng(track, lab.radio, lab.mac, 12, 0);
    AodvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(1.0, 0, 3, 7, 1000);
    eng.run(5.0);

    const auto& led = eng.ledger();
    CHECK(led.packet(7).outcome == PacketOutcome::Delivered);
    REQUIRE(agent.route_hops(0, 3).has_value());
    CHECK(*agent.route_hops(0, 3) == 3);
    REQUIRE(agent.route_hops(1, 3).has_value());  // installed while the reply travelled back
    CHECK(*agent.route_hops(1, 3) == 2);
    CHECK(agent.floods_started() == 1);
    // Flood: origin + two relays rebroadcast, destination answers instead.
    CHECK(control_tx_bytes(led) == std::vector<int>{40, 40, 40, 42, 42, 42});

    const double leg = lab.prop(3000.0);
    const double expect = 1.0 + 9 * lab.mac.difs + 3 * (lab.at(8) + lab.at(6) + lab.at(1008)) +
                          9 * leg;
    CHECK(led.packet(7).received_at == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("on-demand: an unreachable destination times out after three flood rounds") {
    Lab lab;
    auto track = points_track({{0, 0, 0}, {100000, 0, 0}});
    Engine eng(track, lab.radio, lab.mac, 13, 0);
    AodvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(1.0, 0, 1, 3, 1000);
    eng.run(10.0);

    const auto& led = eng.ledger();
    CHECK(led.packet(3).outcome == PacketOutcome::Lost);
    CHECK(led.count(PacketOutcome::Delivered) == 0);
    CHECK(agent.floods_started() == 1);
    CHECK(control_tx_bytes(led) == std::vector<int>{42, 42, 42});
    CHECK_FALSE(agent.route_hops(0, 1).has_value());
}

TEST_CASE("on-demand: the pending-packet buffer is bounded") {
    Lab lab;
    auto track = points_track({{0, 0, 0}, {100000, 0, 0}});
    Engine eng(track, lab.radio, lab.mac, 14, 0);
    AodvAgent agent;
    eng.set_agent(&agent);
    for (int i = 0; i < 70; ++i) eng.app_generate(1.0 + 0.001 * i, 0, 1, i, 500);
    eng.run(10.0);

    const auto& led = eng.ledger();
    CHECK(led.generated_count() == 70);
    CHECK(led.count(PacketOutcome::Lost) == 70);  // 6 rejected at the full queue, 64 on timeout
    CHECK(agent.floods_started() == 1);           // one discovery covers the whole backlog
}

TEST_CASE("on-demand: source-side link failure triggers rediscovery through a detour") {
    Lab lab;
    // 1 sits on the straight path; 3 is a detour relay within range of 0 and 2.
    auto track = points_track({{0, 0, 0}, {3000, 0, 0}, {6000, 0, 0}, {3000, 2500, 0}});
    Engine eng(track, lab.radio, lab.mac, 15, 0, {1}, 3.0);
    AodvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(1.0, 0, 2, 1, 1000);  // establishes the route through 1
    eng.app_generate(4.0, 0, 2, 2, 1000);  // hits the dead relay, repairs through 3
    eng.run(12.0);

    const auto& led = eng.ledger();
    CHECK(led.packet(1).outcome == PacketOutcome::Delivered);
    CHECK(led.packet(2).outcome == PacketOutcome::Delivered);
    CHECK(led.packet(2).received_at > 4.0);
    CHECK(agent.floods_started() == 2);
    REQUIRE(agent.route_hops(0, 2).has_value());
    CHECK(*agent.route_hops(0, 2) == 2);
    CHECK(packet_delivery_ratio(led) == 1.0);
}

TEST_CASE("on-demand: mid-route breakage reports back and the source repairs") {
    Lab lab;
    auto track = points_track(
        {{0, 0, 0}, {3000, 0, 0}, {6000, 0, 0}, {9000, 0, 0}, {6000, 2500, 0}});
    Engine eng(track, lab.radio, lab.mac, 16, 0, {2}, 3.0);
    AodvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(1.0, 0, 3, 1, 1000);  // route 0-1-2-3
    eng.app_generate(4.0, 0, 3, 2, 1000);  // breaks at 1->2, detours via 4
    eng.run(12.0);

    const auto& led = eng.ledger();
    CHECK(led.packet(1).outcome == PacketOutcome::Delivered);
    CHECK(led.packet(2).outcome == PacketOutcome::Delivered);
    CHECK(led.count(PacketOutcome::Lost) == 0);
    CHECK(led.packet(2).duplicate_deliveries == 0);
    CHECK(agent.floods_started() == 2);
    REQUIRE(agent.route_hops(0, 3).has_value());
    CHECK(*agent.route_hops(0, 3) == 3);  // 0-1-4-3 after the repair
}

TEST_CASE("on-demand: static connected topology delivers everything after one discovery") {
    Lab lab;
    auto track = points_track(
        {{0, 0, 0}, {3000, 0, 0}, {6000, 0, 0}, {9000, 0, 0}, {12000, 0, 0}});
    Engine eng(track, lab.radio, lab.mac, 17, 0);
    AodvAgent agent;
    eng.set_agent(&agent);
    for (int i = 0; i < 20; ++i) eng.app_generate(1.0 + 0.05 * i, 0, 4, i, 1000);
    eng.run(10.0);

    const auto& led = eng.ledger();
    CHECK(packet_delivery_ratio(led) == 1.0);
    CHECK(agent.floods_started() == 1);
    // One flood (4 request broadcasts) and one reply walking 4 legs home.
    CHECK(led.control_bytes_sent() == 4 * 42 + 4 * 40);
    CHECK(*overhead_efficiency(led) == doctest::Approx(20000.0 / 328.0).epsilon(1e-15));
}

TEST_CASE("proactive: two nodes learn exactly one remote entry each") {
    Lab lab;
    auto track = points_track({{0, 0, 0}, {1000, 0, 0}});
    Engine eng(track, lab.radio, lab.mac, 77, 0);
    DsdvAgent agent;
    eng.set_agent(&agent);
    eng.run(3.0);

    REQUIRE(agent.route_metric(0, 1).has_value());
    REQUIRE(agent.route_metric(1, 0).has_value());
    CHECK(*agent.route_metric(0, 1) == 1);
    CHECK(*agent.route_metric(1, 0) == 1);
    // Staggered first advertisements inside period one, then one per period:
    // three each by t=3. Only the very first frame in the run carries a single
    // entry (7 B); the later node already heard it, so every other one has two
    // (12 B).
    CHECK(control_tx_count(eng.ledger()) == 6);
    CHECK(control_tx_bytes(eng.ledger()) == std::vector<int>{41, 46, 46, 46, 46, 46});
}

TEST_CASE("proactive: a full mesh converges to single-hop routes within two periods") {
    Lab lab;
    auto track = points_track(
        {{0, 0, 0}, {1000, 0, 0}, {0, 1000, 0}, {1000, 1000, 0}});
    Engine eng(track, lab.radio, lab.mac, 78, 0);
    DsdvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(2.5, 0, 3, 1, 1000);
    eng.run(3.0);

    for (int u = 0; u < 4; ++u) {
        for (int v = 0; v < 4; ++v) {
            if (u == v) continue;
            REQUIRE(agent.route_metric(u, v).has_value());
            CHECK(*agent.route_metric(u, v) == 1);
        }
    }
    CHECK(eng.ledger().packet(1).outcome == PacketOutcome::Delivered);
    const double hop = lab.mac.difs + lab.at(1008) + lab.prop(std::sqrt(2.0) * 1000.0);
    CHECK(eng.ledger().packet(1).received_at == doctest::Approx(2.5 + hop).epsilon(1e-12));
}

TEST_CASE("proactive: multi-hop routes appear one period per hop") {
    Lab lab;
    auto track = points_track({{0, 0, 0}, {3000, 0, 0}, {6000, 0, 0}});
    Engine eng(track, lab.radio, lab.mac, 79, 0);
    DsdvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(0.05, 0, 2, 1, 1000);  // before any advertisement round
    eng.app_generate(2.5, 0, 2, 2, 1000);   // after the two-hop entry propagated
    eng.run(4.0);

    CHECK(eng.ledger().packet(1).outcome == PacketOutcome::Lost);
    CHECK(eng.ledger().packet(2).outcome == PacketOutcome::Delivered);
    REQUIRE(agent.route_metric(0, 2).has_value());
    CHECK(*agent.route_metric(0, 2) == 2);
}

TEST_CASE("proactive: a silenced node ages out of every table") {
    Lab lab;
    auto track = points_track({{0, 0, 0}, {1000, 0, 0}, {500, 800, 0}});
    Engine eng(track, lab.radio, lab.mac, 80, 0, {2}, 5.0);
    DsdvAgent agent;
    eng.set_agent(&agent);
    eng.app_generate(4.0, 0, 2, 1, 1000);   // still alive and routable
    eng.app_generate(10.0, 0, 2, 2, 1000);  // aged out by now
    eng.run(12.0);

    CHECK(eng.ledger().packet(1).outcome == PacketOutcome::Delivered);
    CHECK(eng.ledger().packet(2).outcome == PacketOutcome::Lost);
    CHECK_FALSE(agent.route_metric(0, 2).has_value());
    CHECK_FALSE(agent.route_metric(1, 2).has_value());
    CHECK(agent.route_metric(0, 1).has_value());  // the living pair keeps its routes
}

TEST_CASE("proactive: broadcast overhead is independent of offered traffic") {
    Lab lab;
    auto track = points_track(
        {{0, 0, 0}, {1000, 0, 0}, {0, 1000, 0}, {1000, 1000, 0}});

    Engine idle(track, lab.radio, lab.mac, 81, 0);
    DsdvAgent idle_agent;
    idle.set_agent(&idle_agent);
    idle.run(12.0);

    Engine busy(track, lab.radio, lab.mac, 81, 0);
    DsdvAgent busy_agent;
    busy.set_agent(&busy_agent);
    for (int i = 0; i < 30; ++i) busy.app_generate(2.0 + 0.1 * i, i % 4, 3 - i % 4, i, 1000);
    busy.run(12.0);

    CHECK(busy.ledger().control_bytes_sent() == idle.ledger().control_bytes_sent());
    CHECK(control_tx_count(busy.ledger()) == control_tx_count(idle.ledger()));
    CHECK(busy.ledger().count(PacketOutcome::Delivered) > 0);
}

TEST_CASE("baselines: identical seeds replay identical runs") {
    Lab lab;
    auto track = points_track(
        {{0, 0, 0}, {3000, 0, 0}, {6000, 0, 0}, {3000, 2500, 0}});

    auto run_once = [&](RoutingAgent& agent) {
        Engine eng(track, lab.radio, lab.mac, 99, 4, {1}, 3.0);
        eng.enable_trace();
        eng.set_agent(&agent);
        eng.app_generate(1.0, 0, 2, 1, 1000);
        eng.app_generate(4.0, 0, 2, 2, 1000);
        eng.run(12.0);
        std::vector<std::tuple<double, int, std::string, long>> rows;
        for (const TraceRow& r : eng.trace())
            rows.emplace_back(r.t, r.node, std::string(r.kind), r.packet_id);
        return rows;
    };

    AodvAgent a1, a2;
    CHECK(run_once(a1) == run_once(a2));
    DsdvAgent d1, d2;
    CHECK(run_once(d1) == run_once(d2));
}
