#pragma once

// Deterministic discrete-event engine with a simplified CSMA/CA MAC over a
// free-space disk radio. Routing agents plug in through a callback
// interface; everything a protocol does happens inside event handlers, so a
// (scenario, seed) pair fixes the entire execution.
//
// MAC model, in brief: one outstanding operation per node over a FIFO of
// frames. A send attempt senses the channel (busy iff any in-range
// transmission is on the air); an idle sense transmits immediately — the
// attempt itself is scheduled one DIFS after enqueue/completion — and a busy
// sense defers to the channel-free instant plus DIFS plus a random backoff
// drawn from the current contention window, doubling the window. Unicast
// frames expect an idealized instant ACK (no airtime, no collisions);
// a missing ACK retries with a doubled window after an ACK timeout. Busy
// deferrals and missing ACKs share the same retry budget; exhausting it
// reports a MAC failure to the agent. Receivers in range of two overlapping
// transmissions get neither (no capture), and a node cannot receive while
// transmitting.

#include <cstdint>
#include <deque>
#include <memory>
#include <queue>
#include <set>
#include <stdexcept>
#include <variant>
#include <vector>

#include "fanet/connectivity.hpp"
#include "fanet/metrics.hpp"
#include "fanet/rng.hpp"

namespace fanet {

struct PastEvent : std::logic_error {
    using std::logic_error::logic_error;
};

struct MacParams {
    double difs = 50e-6;       // s
    double slot = 20e-6;       // s
    int cw_min = 31;           // slots
    int cw_max = 1023;         // slots
    int max_retries = 7;       // busy deferrals + missed ACKs, combined
    int overhead_bytes = 34;   // link-layer framing added to every frame
    double ack_timeout = 0.0;  // s; 0 = auto (round trip at full range + DIFS)
};

// ---------------------------------------------------------------------------
// Frame bodies (network-layer contents. The engine treats them as opaque.)

enum class CprType : std::uint8_t { Data = 0, Rrep = 1, Rrer = 2 };

struct PacketHeader {
    std::uint8_t hop = 0;       // address count - 1
    std::uint8_t seq = 0;       // wrapping per (source, destination)
    std::uint8_t ptype = 0;     // CprType
    std::uint8_t reserved = 0;  // always zero on the wire
    std::vector<std::uint16_t> addresses;  // [0]=source ... [hop]=destination
};

struct CprFrame {
    PacketHeader header;
    int payload_bytes = 0;
    long packet_id = -1;  // simulator bookkeeping, not wire data
};

struct AodvRreq {
    int origin = -1;
    int rreq_id = 0;
    int dst = -1;
    int hop_count = 0;
    int ttl = 0;
};
struct AodvRrep {
    int origin = -1;  // requester the reply travels back to
    int dst = -1;     // destination the route leads to
    int hop_count = 0;
};
struct AodvRerr {
    int origin = -1;           // data source to notify
    int unreachable_dst = -1;  // destination that became unreachable
    long packet_id = -1;
};
struct AodvData {
    int origin = -1;
    int dst = -1;
    long packet_id = -1;
    int payload_bytes = 0;
};

struct DsdvEntry {
    int dst = -1;
    int metric = 0;
    int seq = 0;
};
struct DsdvUpdate {
    int sender = -1;
    std::vector<DsdvEntry> entries;
};
struct DsdvData {
    int origin = -1;
    int dst = -1;
    long packet_id = -1;
    int payload_bytes = 0;
};

using FrameBody = std::variant<std::monostate, CprFrame, AodvRreq, AodvRrep, AodvRerr,
                               AodvData, DsdvUpdate, DsdvData>;

inline constexpr int kBroadcast = -1;

struct Frame {
    int src = -1;                  // transmitting node
    int dst = kBroadcast;          // link-layer next hop, or kBroadcast
    int bytes = 0;                 // network-layer size (MAC overhead excluded)
    FrameClass cls = FrameClass::Data;
    long trace_packet_id = -1;     // for the event trace; -1 when n/a
    FrameBody body;
};

// ---------------------------------------------------------------------------

class Engine;

// One agent instance manages the protocol state of every node; handlers get
// the node id they fire on. All cross-node interaction flows through frames.
class RoutingAgent {
  public:
    virtual ~RoutingAgent() = default;
    virtual void start(Engine&) {}
    virtual void on_app_generate(Engine& eng, int src, int dst, long packet_id,
                                 int payload_bytes) = 0;
    virtual void on_frame_received(Engine& eng, int node, const Frame& frame, int from) = 0;
    virtual void on_mac_result(Engine& eng, int node, const Frame& frame, bool success) = 0;
    virtual void on_timer(Engine& eng, int node, int timer_id, std::uint64_t tag) {
        (void)eng;
        (void)node;
        (void)timer_id;
        (void)tag;
    }
};

struct TraceRow {
    double t;
    int node;
    const char* kind;  // gen | tx_start | tx_end | rx | mac_fail | timer
    long packet_id;
};

// A transmission interval used by the standalone reception filter.
struct TxWindow {
    int node;
    double t_start;
    double t_end;
};

// True iff a frame on the air over [t_start, t_end) from `sender` reaches
// `receiver`: receiver in range of sender (positions at t_start) and no
// other overlapping transmission audible at the receiver (including the
// receiver's own — half duplex). `others` excludes the frame itself.
bool rx_survives(const FormationTrack& track, double range, int sender, int receiver,
                 double t_start, double t_end, const std::vector<TxWindow>& others);

class Engine {
  public:
    Engine(const FormationTrack& track, const RadioParams& radio, const MacParams& mac,
           std::uint64_t base_seed, std::uint64_t run_index, std::set<int> failed = {},
           double fail_time = 0.0);

    void set_agent(RoutingAgent* agent) { agent_ = agent; }

    double now() const { return now_; }
    int node_count() const { return track_->node_count(); }
    double range() const { return range_; }
    const FormationTrack& track() const { return *track_; }
    const RadioParams& radio() const { return radio_; }
    const MacParams& mac_params() const { return mac_; }
    double ack_timeout() const { return ack_timeout_; }

    // On-air duration of a frame, link-layer overhead included.
    double airtime(int network_bytes) const {
        return static_cast<double>(network_bytes + mac_.overhead_bytes) * 8.0 /
               radio_.data_rate_bps;
    }

    bool alive(int node) const { return alive(node, now_); }
    bool alive(int node, double t) const {
        return !(t >= fail_time_ && failed_.count(node) > 0);
    }
    const std::set<int>& failed_nodes() const { return failed_; }

    double distance_at(int u, int v, double t) const {
        return distance(track_->position(u, t), track_->position(v, t));
    }

    // Application traffic injection (any t >= now).
    void app_generate(double t, int src, int dst, long packet_id, int payload_bytes);
    // Hands a frame to the node's MAC queue. No-op for dead nodes.
    void mac_send(int node, Frame frame);
    // Agent timer; fires on_timer(node, timer_id, tag) unless the node died.
    void schedule_timer(double t, int node, int timer_id, std::uint64_t tag);

    // Processes events with t <= t_end in (t, insertion) order. The agent's
    // start() hook runs once, on the first call.
    void run(double t_end);

    MetricsLedger& ledger() { return ledger_; }
    const MetricsLedger& ledger() const { return ledger_; }

    Rng& mac_rng(int node) { return mac_rng_[static_cast<std::size_t>(node)]; }
    Rng& misc_rng(int node) { return misc_rng_[static_cast<std::size_t>(node)]; }

    void enable_trace() { tracing_ = true; }
    const std::vector<TraceRow>& trace() const { return trace_; }

  private:
    enum class EvKind { AppGenerate, MacAttempt, TxEnd, RxDeliver, TimerExpire, MacDone };

    struct Event {
        double t = 0.0;
        std::uint64_t seq = 0;  // assigned by schedule()
        EvKind kind = EvKind::AppGenerate;
        int node = -1;              // acting node (receiver for RxDeliver)
        int peer = -1;              // counterpart (sender for RxDeliver)
        long pid = -1;              // packet id / payload size context
        int payload = 0;
        int timer_id = 0;
        std::uint64_t tag = 0;
        std::uint64_t tx_id = 0;
        bool flag = false;          // MacDone success
        std::shared_ptr<const Frame> frame;
    };
    struct EventAfter {
        bool operator()(const Event& a, const Event& b) const {
            if (a.t != b.t) return a.t > b.t;
            return a.seq > b.seq;
        }
    };

    struct ActiveTx {
        std::uint64_t id;
        int node;
        double t_start;
        double t_end;
        std::shared_ptr<const Frame> frame;
    };

    struct MacState {
        std::deque<Frame> queue;
        bool busy = false;  // an operation for the head frame is in flight
        int retries = 0;
        int cw;
    };

    void schedule(Event ev);
    void dispatch(const Event& ev);
    void attempt(int node);
    void begin_tx(int node);
    void finish_tx(const Event& ev);
    void mac_done(int node, bool success, const std::shared_ptr<const Frame>& frame);
    void defer_or_fail(int node, double fail_at, double retry_base);
    bool channel_busy(int node, double t, double* free_at) const;
    void trace_row(int node, const char* kind, long pid);

    const FormationTrack* track_;
    RadioParams radio_;
    MacParams mac_;
    double range_;
    double ack_timeout_;
    std::set<int> failed_;
    double fail_time_;

    RoutingAgent* agent_ = nullptr;
    bool started_ = false;
    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_tx_id_ = 1;
    double max_airtime_seen_ = 0.0;
    std::priority_queue<Event, std::vector<Event>, EventAfter> heap_;
    std::vector<MacState> mac_state_;
    std::deque<ActiveTx> recent_tx_;  // pruned sliding window
    std::vector<Rng> mac_rng_;
    std::vector<Rng> misc_rng_;
    MetricsLedger ledger_;
    bool tracing_ = false;
    std::vector<TraceRow> trace_;
};

}  // namespace fanet
