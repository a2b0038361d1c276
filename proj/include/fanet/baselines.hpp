#pragma once

// Comparison protocols: a deliberately small on-demand protocol (flooded
// route requests answered by the destination, hop-by-hop forwarding over
// installed table entries, rediscovery after link failures) and a
// deliberately small proactive protocol (periodic full-table broadcasts
// merged by freshness-then-metric, hop-by-hop forwarding, no repair).
// Both run over the same engine and ledger as the trajectory-driven
// protocol, so byte counts and outcomes are directly comparable.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fanet/netsim.hpp"

namespace fanet {

struct AodvParams {
    int ttl = 16;                    // flood radius, hops
    double discovery_timeout = 0.5;  // s between flood rounds
    int max_discovery_retries = 2;   // extra flood rounds before giving up
    int max_rediscoveries = 2;       // per-packet repair budget after RERR/MAC loss
    int buffer_cap = 64;             // queued packets per awaited destination
    int rreq_bytes = 8;
    int rrep_bytes = 6;
    int rerr_bytes = 4;
    int data_header_bytes = 8;
};

class AodvAgent : public RoutingAgent {
  public:
    explicit AodvAgent(AodvParams params = {});

    void on_app_generate(Engine& eng, int src, int dst, long packet_id,
                         int payload_bytes) override;
    void on_frame_received(Engine& eng, int node, const Frame& frame, int from) override;
    void on_mac_result(Engine& eng, int node, const Frame& frame, bool success) override;
    void on_timer(Engine& eng, int node, int timer_id, std::uint64_t tag) override;

    std::optional<int> route_hops(int node, int dst) const;
    long floods_started() const { return floods_started_; }

  private:
    struct Route {
        int next = -1;
        int hops = 0;
    };
    struct Discovery {
        bool active = false;
        int attempts = 0;         // flood rounds used in this discovery
        std::uint64_t epoch = 0;  // invalidates stale timers
    };
    struct Buffered {
        long pid = -1;
        int payload = 0;
    };
    struct NodeState {
        std::map<int, Route> routes;              // data destination -> next hop
        std::map<int, Route> reverse;             // flood origin -> toward origin
        std::set<std::pair<int, int>> seen_rreq;  // (origin, flood id)
        std::map<int, Discovery> discovery;       // destination -> state
        std::map<int, std::vector<Buffered>> buffer;
        int next_rreq_id = 0;
    };
    struct PacketInfo {
        int origin = -1;
        int dst = -1;
        int payload = 0;
        int rediscoveries = 0;
    };

    void ensure_ready(Engine& eng);
    void submit(Engine& eng, int node, long pid);  // route, buffer, or drop
    void start_discovery(Engine& eng, int node, int dst);
    void send_data(Engine& eng, int node, int next, long pid);
    void send_rerr(Engine& eng, int node, int origin, int unreachable, long pid);

    AodvParams params_;
    std::vector<NodeState> nodes_;
    std::map<long, PacketInfo> info_;  // per generated packet, at its origin
    long floods_started_ = 0;
};

struct DsdvParams {
    double period = 1.0;    // s between table broadcasts
    int aging_periods = 3;  // entries unrefreshed this long are purged
    int entry_bytes = 5;
    int count_bytes = 2;
    int data_header_bytes = 8;
};

class DsdvAgent : public RoutingAgent {
  public:
    explicit DsdvAgent(DsdvParams params = {});

    void start(Engine& eng) override;
    void on_app_generate(Engine& eng, int src, int dst, long packet_id,
                         int payload_bytes) override;
    void on_frame_received(Engine& eng, int node, const Frame& frame, int from) override;
    void on_mac_result(Engine& eng, int node, const Frame& frame, bool success) override;
    void on_timer(Engine& eng, int node, int timer_id, std::uint64_t tag) override;

    std::optional<int> route_metric(int node, int dst) const;

  private:
    struct Entry {
        int next = -1;
        int metric = 0;
        int seq = 0;
        double updated_at = 0.0;
    };
    struct NodeState {
        std::map<int, Entry> table;
        int own_seq = 0;
    };

    void broadcast_table(Engine& eng, int node);
    void forward_data(Engine& eng, int node, const DsdvData& data);

    DsdvParams params_;
    std::vector<NodeState> nodes_;
};

}  // namespace fanet
