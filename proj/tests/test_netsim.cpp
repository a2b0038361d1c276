#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fanet/connectivity.hpp"
#include "fanet/mobility.hpp"
#include "fanet/netsim.hpp"

using namespace fanet;

namespace {

struct RxRec {
    double t;
    int node;
    int from;
    long pid;
};
struct MacRec {
    double t;
    int node;
    long pid;
    bool ok;
};
struct TimerRec {
    double t;
    int node;
    int timer_id;
    std::uint64_t tag;
};
struct GenRec {
    double t;
    int src;
    int dst;
    long pid;
};

// Scriptable agent: records every callback; optional hooks add behaviour.
class ScriptAgent : public RoutingAgent {
  public:
    std::function<void(Engine&)> do_start;
    std::function<void(Engine&, int, int, long, int)> do_generate;
    std::function<void(Engine&, int, const Frame&, int)> do_rx;
    std::function<void(Engine&, int, const Frame&, bool)> do_mac;

    std::vector<GenRec> gens;
    std::vector<RxRec> rx;
    std::vector<MacRec> mac;
    std::vector<TimerRec> timers;

    void start(Engine& eng) override {
        if (do_start) do_start(eng);
    }
    void on_app_generate(Engine& eng, int src, int dst, long pid, int bytes) override {
        gens.push_back({eng.now(), src, dst, pid});
        if (do_generate) do_generate(eng, src, dst, pid, bytes);
    }
    void on_frame_received(Engine& eng, int node, const Frame& frame, int from) override {
        rx.push_back({eng.now(), node, from, frame.trace_packet_id});
        if (do_rx) do_rx(eng, node, frame, from);
    }
    void on_mac_result(Engine& eng, int node, const Frame& frame, bool success) override {
        mac.push_back({eng.now(), node, frame.trace_packet_id, success});
        if (do_mac) do_mac(eng, node, frame, success);
    }
    void on_timer(Engine& eng, int node, int timer_id, std::uint64_t tag) override {
        timers.push_back({eng.now(), node, timer_id, tag});
    }
};

FormationTrack line_track(const std::vector<double>& xs, double sim_end = 100.0) {
    std::vector<Vec3> pos;
    for (double x : xs) pos.push_back({x, 0.0, 0.0});
    return FormationTrack::from_static_positions(pos, sim_end);
}

Frame data_frame(int src, int dst, int bytes, long pid = 1) {
    Frame f;
    f.src = src;
    f.dst = dst;
    f.bytes = bytes;
    f.cls = FrameClass::Data;
    f.trace_packet_id = pid;
    return f;
}

constexpr double kC = 2.99792458e8;

}  // namespace

TEST_CASE("event queue pops in (time, insertion) order") {
    auto track = line_track({0.0, 1000.0});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 42, 0);
    eng.set_agent(&agent);

    // Coarse time grid so ties are plentiful; tag is the insertion index.
    Rng rng(99);
    std::vector<std::pair<double, std::uint64_t>> input;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(rng.bounded(500)) * 0.01;
        input.push_back({t, static_cast<std::uint64_t>(i)});
        eng.schedule_timer(t, 0, 7, static_cast<std::uint64_t>(i));
    }
    eng.run(10.0);

    REQUIRE(agent.timers.size() == static_cast<std::size_t>(n));
    std::stable_sort(input.begin(), input.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    bool all_match = true;
    for (int i = 0; i < n; ++i) {
        if (agent.timers[static_cast<std::size_t>(i)].t != input[static_cast<std::size_t>(i)].first ||
            agent.timers[static_cast<std::size_t>(i)].tag != input[static_cast<std::size_t>(i)].second) {
            all_match = false;
            break;
        }
    }
    CHECK(all_match);
}

TEST_CASE("scheduling into the past is rejected") {
    auto track = line_track({0.0, 1000.0});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 1, 0);
    eng.set_agent(&agent);
    eng.schedule_timer(1.0, 0, 1, 0);
    eng.run(2.0);
    CHECK(eng.now() == 1.0);
    CHECK_THROWS_AS(eng.schedule_timer(0.5, 0, 1, 0), PastEvent);
    CHECK_NOTHROW(eng.schedule_timer(1.0, 0, 1, 0));  // same instant is fine
}

TEST_CASE("single sender on an idle channel: exact delivery timing") {
    const double d = 1000.0;
    auto track = line_track({0.0, d});
    ScriptAgent agent;
    MacParams mp;
    Engine eng(track, RadioParams{}, mp, 42, 0);
    eng.set_agent(&agent);

    // 1000 payload bytes + 8 header bytes; 34 more go on the air at the MAC.
    CHECK(eng.airtime(1008) == 0.00075781818181818177);

    agent.do_start = [&](Engine& e) { e.mac_send(0, data_frame(0, 1, 1008)); };
    eng.run(1.0);

    const double at = eng.airtime(1008);
    REQUIRE(agent.rx.size() == 1);
    CHECK(agent.rx[0].node == 1);
    CHECK(agent.rx[0].from == 0);
    CHECK(agent.rx[0].t == doctest::Approx(mp.difs + at + d / kC).epsilon(1e-15));
    // Sender learns of success one ACK flight later.
    REQUIRE(agent.mac.size() == 1);
    CHECK(agent.mac[0].ok);
    CHECK(agent.mac[0].t == doctest::Approx(mp.difs + at + 2.0 * d / kC).epsilon(1e-15));
    // Exactly one transmission, carrying link overhead.
    REQUIRE(eng.ledger().transmissions().size() == 1);
    CHECK(eng.ledger().transmissions()[0].bytes == 1042);
    CHECK(eng.ledger().transmissions()[0].node == 0);
}

TEST_CASE("reception needs range: boundary in, 1.01x out") {
    Engine probe(line_track({0.0, 1.0}), RadioParams{}, MacParams{}, 1, 0);
    const double range = probe.range();

    SUBCASE("receiver exactly at range hears the frame") {
        auto track = line_track({0.0, range});
        ScriptAgent agent;
        Engine eng(track, RadioParams{}, MacParams{}, 42, 0);
        eng.set_agent(&agent);
        agent.do_start = [&](Engine& e) { e.mac_send(0, data_frame(0, 1, 100)); };
        eng.run(1.0);
        CHECK(agent.rx.size() == 1);
        REQUIRE(agent.mac.size() == 1);
        CHECK(agent.mac[0].ok);
    }
    SUBCASE("receiver at 1.01x range never hears it; sender gives up") {
        auto track = line_track({0.0, range * 1.01});
        ScriptAgent agent;
        Engine eng(track, RadioParams{}, MacParams{}, 42, 0);
        eng.set_agent(&agent);
        agent.do_start = [&](Engine& e) { e.mac_send(0, data_frame(0, 1, 100)); };
        eng.run(5.0);
        CHECK(agent.rx.empty());
        REQUIRE(agent.mac.size() == 1);
        CHECK(!agent.mac[0].ok);
        // Initial attempt plus the full retry budget, each one transmitted.
        CHECK(eng.ledger().transmissions().size() ==
              static_cast<std::size_t>(eng.mac_params().max_retries) + 1);
    }
}

TEST_CASE("broadcast reaches every live in-range node, exactly once, no ACK") {
    Engine probe(line_track({0.0, 1.0}), RadioParams{}, MacParams{}, 1, 0);
    const double range = probe.range();
    auto track = line_track({0.0, 500.0, 1500.0, range * 1.5});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 42, 0);
    eng.set_agent(&agent);
    agent.do_start = [&](Engine& e) { e.mac_send(0, data_frame(0, kBroadcast, 60, 5)); };
    eng.run(1.0);

    REQUIRE(agent.rx.size() == 2);  // nodes 1 and 2; node 3 out of range
    const double at = eng.airtime(60);
    const double t_end = eng.mac_params().difs + at;
    std::vector<int> got;
    for (const auto& r : agent.rx) {
        got.push_back(r.node);
        const double d = (r.node == 1 ? 500.0 : 1500.0);
        CHECK(r.t == doctest::Approx(t_end + d / kC).epsilon(1e-15));
    }
    std::sort(got.begin(), got.end());
    CHECK(got == std::vector<int>{1, 2});
    // Broadcast succeeds as soon as the air clears -- no ACK round trip.
    REQUIRE(agent.mac.size() == 1);
    CHECK(agent.mac[0].ok);
    CHECK(agent.mac[0].t == doctest::Approx(t_end).epsilon(1e-15));
    CHECK(eng.ledger().transmissions().size() == 1);
}

TEST_CASE("two senders, same instant: collision then staggered recovery") {
    // Senders 10 m apart, both unicast to the far receiver. Both sense an
    // idle channel at the same instant (a transmission starting exactly now
    // is not yet audible), so the first frames collide at the receiver.
    auto track = line_track({0.0, 10.0, 1000.0});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 42, 0);
    eng.set_agent(&agent);
    agent.do_start = [&](Engine& e) {
        e.mac_send(0, data_frame(0, 2, 200, 100));
        e.mac_send(1, data_frame(1, 2, 200, 101));
    };
    eng.run(5.0);

    // Both frames ultimately arrive, exactly once each.
    REQUIRE(agent.rx.size() == 2);
    std::vector<long> pids;
    for (const auto& r : agent.rx) {
        CHECK(r.node == 2);
        pids.push_back(r.pid);
    }
    std::sort(pids.begin(), pids.end());
    CHECK(pids == std::vector<long>{100, 101});

    // No reception can predate the collision window plus the ACK wait.
    const double first_end = eng.mac_params().difs + eng.airtime(200);
    for (const auto& r : agent.rx) CHECK(r.t > first_end + eng.ack_timeout());

    // Both senders transmitted at least twice, and both report success.
    std::size_t tx0 = 0, tx1 = 0;
    for (const auto& tx : eng.ledger().transmissions()) (tx.node == 0 ? tx0 : tx1)++;
    CHECK(tx0 >= 2);
    CHECK(tx1 >= 2);
    REQUIRE(agent.mac.size() == 2);
    CHECK(agent.mac[0].ok);
    CHECK(agent.mac[1].ok);
}

TEST_CASE("hidden terminals collide at the middle node and recover") {
    Engine probe(line_track({0.0, 1.0}), RadioParams{}, MacParams{}, 1, 0);
    const double range = probe.range();
    REQUIRE(range < 6000.0);
    REQUIRE(range >= 3000.0);
    // 0 and 2 cannot hear each other but both reach 1.
    auto track = line_track({0.0, 3000.0, 6000.0});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 42, 0);
    eng.set_agent(&agent);
    agent.do_start = [&](Engine& e) {
        e.mac_send(0, data_frame(0, 1, 66, 200));
        e.mac_send(2, data_frame(2, 1, 66, 201));
    };
    eng.run(5.0);

    REQUIRE(agent.rx.size() == 2);
    std::vector<long> pids;
    for (const auto& r : agent.rx) {
        CHECK(r.node == 1);
        pids.push_back(r.pid);
    }
    std::sort(pids.begin(), pids.end());
    CHECK(pids == std::vector<long>{200, 201});
    const double first_end = eng.mac_params().difs + eng.airtime(66);
    for (const auto& r : agent.rx) CHECK(r.t > first_end);
}

TEST_CASE("queued frames wait for the channel and keep FIFO order") {
    const double d = 1000.0;
    auto track = line_track({0.0, d});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 42, 0);
    eng.set_agent(&agent);
    agent.do_start = [&](Engine& e) {
        e.mac_send(0, data_frame(0, 1, 300, 1));
        e.mac_send(0, data_frame(0, 1, 300, 2));
        e.mac_send(0, data_frame(0, 1, 300, 3));
    };
    eng.run(5.0);

    REQUIRE(agent.rx.size() == 3);
    CHECK(agent.rx[0].pid == 1);
    CHECK(agent.rx[1].pid == 2);
    CHECK(agent.rx[2].pid == 3);
    // Each successor starts a fresh DIFS after the predecessor's MAC cycle.
    const double at = eng.airtime(300);
    const double prop = d / kC;
    double t = 0.0;
    for (int i = 0; i < 3; ++i) {
        t += eng.mac_params().difs + at + prop;  // reception instant
        CHECK(agent.rx[static_cast<std::size_t>(i)].t == doctest::Approx(t).epsilon(1e-12));
        t += prop;  // ACK closes the cycle; next DIFS starts here
    }
    CHECK(eng.ledger().transmissions().size() == 3);
}

TEST_CASE("reception filter: interference, range, half duplex") {
    Engine probe(line_track({0.0, 1.0}), RadioParams{}, MacParams{}, 1, 0);
    const double range = probe.range();
    auto track = line_track({0.0, 1000.0, 2000.0, 1000.0 + range * 1.01});
    const double t0 = 1.0, t1 = 1.001;

    SUBCASE("clean air, receiver in range") {
        CHECK(rx_survives(track, range, 0, 1, t0, t1, {}));
    }
    SUBCASE("receiver out of range") {
        CHECK(!rx_survives(track, range, 1, 3, t0, t1, {}));
    }
    SUBCASE("overlapping transmission audible at the receiver destroys it") {
        CHECK(!rx_survives(track, range, 0, 1, t0, t1, {{2, 1.0005, 1.002}}));
        // ... even if the overlap is partial.
        CHECK(!rx_survives(track, range, 0, 1, t0, t1, {{2, 0.9, 1.0001}}));
    }
    SUBCASE("overlapping transmission the receiver cannot hear is harmless") {
        CHECK(rx_survives(track, range, 0, 1, t0, t1, {{3, 1.0, 1.001}}));
    }
    SUBCASE("the receiver's own transmission blocks reception") {
        CHECK(!rx_survives(track, range, 0, 1, t0, t1, {{1, 1.0005, 1.0006}}));
    }
    SUBCASE("back-to-back windows that merely touch do not interfere") {
        CHECK(rx_survives(track, range, 0, 1, t0, t1, {{2, t1, 1.002}}));
        CHECK(rx_survives(track, range, 0, 1, t0, t1, {{2, 0.5, t0}}));
    }
}

TEST_CASE("dead nodes neither send, receive, nor fire timers") {
    auto track = line_track({0.0, 1000.0, 2000.0});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 42, 0, {1}, 10.0);
    eng.set_agent(&agent);

    agent.do_start = [&](Engine& e) {
        e.schedule_timer(5.0, 1, 1, 11);   // before the failure: fires
        e.schedule_timer(15.0, 1, 1, 22);  // after the failure: suppressed
        e.schedule_timer(15.0, 0, 1, 33);  // healthy node still works
    };
    eng.run(8.0);
    CHECK(eng.alive(1));
    eng.run(20.0);
    CHECK(!eng.alive(1));
    REQUIRE(agent.timers.size() == 2);
    CHECK(agent.timers[0].tag == 11);
    CHECK(agent.timers[1].tag == 33);

    // A dead node's MAC ignores new work...
    eng.mac_send(1, data_frame(1, 0, 100));
    eng.run(25.0);
    CHECK(eng.ledger().transmissions().empty());

    // ...unicast toward it burns the retry budget and fails...
    agent.mac.clear();
    eng.mac_send(0, data_frame(0, 1, 100, 7));
    eng.run(30.0);
    REQUIRE(agent.mac.size() == 1);
    CHECK(!agent.mac[0].ok);

    // ...and broadcast skips it.
    agent.rx.clear();
    eng.mac_send(2, data_frame(2, kBroadcast, 100, 8));
    eng.run(35.0);
    REQUIRE(agent.rx.size() == 1);
    CHECK(agent.rx[0].node == 0);
}

TEST_CASE("acknowledgement timeout covers a full range round trip plus DIFS") {
    auto track = line_track({0.0, 1000.0});
    Engine eng(track, RadioParams{}, MacParams{}, 1, 0);
    const double expect = 2.0 * eng.range() / kC + eng.mac_params().difs;
    CHECK(eng.ack_timeout() == doctest::Approx(expect).epsilon(1e-15));

    MacParams custom;
    custom.ack_timeout = 1e-3;
    Engine eng2(track, RadioParams{}, custom, 1, 0);
    CHECK(eng2.ack_timeout() == 1e-3);
}

TEST_CASE("application traffic lands in the ledger and reaches the agent") {
    auto track = line_track({0.0, 1000.0});
    ScriptAgent agent;
    Engine eng(track, RadioParams{}, MacParams{}, 42, 0, {1}, 50.0);
    eng.set_agent(&agent);
    eng.app_generate(1.0, 0, 1, 0, 1000);
    eng.app_generate(60.0, 1, 0, 1, 1000);  // source dead by then
    eng.run(100.0);

    CHECK(eng.ledger().generated_count() == 2);
    REQUIRE(agent.gens.size() == 1);  // the dead source never sees the packet
    CHECK(agent.gens[0].t == 1.0);
    CHECK(agent.gens[0].pid == 0);
    CHECK(eng.ledger().packet(0).generated_at == 1.0);
    CHECK(eng.ledger().packet(0).payload_bytes == 1000);
}

TEST_CASE("identical seeds reproduce the event trace; traces observe reality") {
    auto track = line_track({0.0, 10.0, 1000.0});
    auto run_once = [&](std::uint64_t seed, std::uint64_t run_idx) {
        ScriptAgent agent;
        Engine eng(track, RadioParams{}, MacParams{}, seed, run_idx);
        eng.enable_trace();
        eng.set_agent(&agent);
        agent.do_start = [&](Engine& e) {
            e.mac_send(0, data_frame(0, 2, 200, 100));
            e.mac_send(1, data_frame(1, 2, 200, 101));
        };
        eng.app_generate(0.5, 0, 2, 100, 200);
        eng.run(5.0);
        std::vector<std::tuple<double, int, std::string, long>> rows;
        for (const auto& r : eng.trace())
            rows.emplace_back(r.t, r.node, std::string(r.kind), r.packet_id);
        return rows;
    };

    const auto a = run_once(42, 0);
    const auto b = run_once(42, 0);
    CHECK(a == b);
    REQUIRE(!a.empty());
    // The trace contains matched tx_start/tx_end pairs and at least one rx.
    std::size_t starts = 0, ends = 0, rxs = 0;
    for (const auto& row : a) {
        const auto& kind = std::get<2>(row);
        starts += kind == "tx_start";
        ends += kind == "tx_end";
        rxs += kind == "rx";
    }
    CHECK(starts == ends);
    CHECK(starts >= 4);  // first collision forces at least one retry each
    CHECK(rxs == 2);
}
