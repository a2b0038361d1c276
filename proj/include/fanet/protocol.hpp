#pragma once

// Trajectory-driven source routing. Because every node carries the fleet's
// flight plan, a source computes the full relay sequence from the sampled
// connectivity timeline instead of discovering it on demand: packets go out
// immediately when the destination is reachable, are held until a predicted
// rendezvous when it is not yet reachable, and are dropped up front when no
// rendezvous falls inside the packet's lifetime. There is no route-request
// flooding anywhere in this file, by construction.
//
// Wire header: [hop:1][seq:1][type:1][reserved:1] followed by hop+1
// big-endian 16-bit addresses, source first, destination last. Three frame
// types share the layout: Data (payload follows), route confirmations
// travelling the reversed route, and route-failure reports whose address
// list is the reversed prefix from the detecting node back to the source
// with the unreachable node's address appended last.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "fanet/connectivity.hpp"
#include "fanet/netsim.hpp"

namespace fanet {

struct MalformedHeader : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Serialized size of a header listing `address_count` addresses.
constexpr int header_bytes(int address_count) { return 4 + 2 * address_count; }

std::vector<std::uint8_t> encode_header(const PacketHeader& h);
PacketHeader decode_header(const std::vector<std::uint8_t>& bytes);

bool operator==(const PacketHeader& a, const PacketHeader& b);

// Minimum-hop route from src to dst on one adjacency snapshot, skipping
// `excluded` nodes (src and dst are never skipped). Among equal-hop routes
// returns the lexicographically smallest node-id sequence. nullopt when dst
// is unreachable.
std::optional<std::vector<int>> shortest_route(const AdjacencyMatrix& adj, int src, int dst,
                                               const std::set<int>& excluded = {});

struct RouteDecision {
    enum class Kind { SendNow, SendLater, DropProactive };
    Kind kind = Kind::DropProactive;
    std::vector<int> route;  // empty iff DropProactive
    double t_send = 0.0;     // release instant; only meaningful for SendLater
};

// Route planning against the connectivity timeline:
//   (1) dst reachable on the sample covering t_now  -> SendNow
//   (2) else first sample time t' <= expiry with a route -> SendLater at t'
//   (3) else -> DropProactive
// `expiry` is absolute. Reachability honours `excluded` (a route must
// exist that avoids those nodes). Throws std::invalid_argument on
// src == dst or expiry <= t_now.
RouteDecision establish_route(const ConnectivityTimeline& timeline, int src, int dst,
                              double t_now, double expiry,
                              const std::set<int>& excluded = {});

struct CprTdParams {
    double per_hop_budget = 0.020;  // confirmation deadline, seconds per hop
    double expiry = 30.0;           // packet lifetime, seconds
    int max_route_retries = 3;      // recovery attempts per packet
};

// The routing agent. One instance serves every node; per-packet state lives
// at the packet's source. The timeline handed in is the planning oracle --
// pass one built without knowledge of failed nodes to model planning on
// stale flight-plan data (recovery then repairs around dead relays).
class CprTdAgent : public RoutingAgent {
  public:
    CprTdAgent(const ConnectivityTimeline& timeline, CprTdParams params = {});

    void on_app_generate(Engine& eng, int src, int dst, long packet_id,
                         int payload_bytes) override;
    void on_frame_received(Engine& eng, int node, const Frame& frame, int from) override;
    void on_mac_result(Engine& eng, int node, const Frame& frame, bool success) override;
    void on_timer(Engine& eng, int node, int timer_id, std::uint64_t tag) override;

    // Introspection (tests and reports).
    long confirmations_sent() const { return rrep_sent_; }
    long failure_reports_sent() const { return rrer_sent_; }
    long route_requests_sent() const { return 0; }  // no such frame exists
    long off_route_discards() const { return off_route_discards_; }
    long duplicate_window_hits() const { return dup_hits_; }
    std::size_t pending_count() const { return pending_.size(); }

  private:
    enum TimerId : int { kRelease = 1, kDeadline = 2, kExpiry = 3 };

    struct Pending {
        int src = -1;
        int dst = -1;
        long pid = -1;
        int payload_bytes = 0;
        double generated_at = 0.0;
        std::uint8_t seq = 0;
        std::vector<int> route;  // route of the latest decision
        int attempt = 0;         // transmissions started at the source
        int retries = 0;         // recovery rounds consumed
        std::set<int> excluded;  // relays barred after failures
        // True while the source's own link layer still owes a verdict for
        // the current attempt; deadline resends hold off until it lands.
        bool awaiting_mac = false;
    };

    void decide(Engine& eng, long pid);
    void send_data(Engine& eng, Pending& entry);
    // Shared recovery tail: optionally bar a node, then re-plan or give up.
    void recover(Engine& eng, long pid, int exclude_node);
    bool duplicate_seen(int dst_node, int src, std::uint8_t seq);

    const ConnectivityTimeline* timeline_;
    CprTdParams params_;
    std::map<long, Pending> pending_;
    std::map<std::pair<int, int>, std::uint8_t> next_seq_;
    // Recent-sequence window per (receiving node, packet source).
    std::map<std::pair<int, int>, std::deque<std::uint8_t>> recent_seqs_;
    long rrep_sent_ = 0;
    long rrer_sent_ = 0;
    long off_route_discards_ = 0;
    long dup_hits_ = 0;
};

}  // namespace fanet
