#include "fanet/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace fanet {

// --------------------------------------------------------------------------
// Header codec

std::vector<std::uint8_t> encode_header(const PacketHeader& h) {
    if (h.addresses.empty() ||
        h.addresses.size() != static_cast<std::size_t>(h.hop) + 1) {
        throw std::invalid_argument("hop field must equal address count minus one");
    }
    if (h.ptype > 2) throw std::invalid_argument("unknown packet type");
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(header_bytes(static_cast<int>(h.addresses.size()))));
    out.push_back(h.hop);
    out.push_back(h.seq);
    out.push_back(h.ptype);
    out.push_back(h.reserved);
    for (const std::uint16_t a : h.addresses) {
        out.push_back(static_cast<std::uint8_t>(a >> 8));
        out.push_back(static_cast<std::uint8_t>(a & 0xFF));
    }
    return out;
}

PacketHeader decode_header(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) throw MalformedHeader("truncated fixed header");
    PacketHeader h;
    h.hop = bytes[0];
    h.seq = bytes[1];
    h.ptype = bytes[2];
    h.reserved = bytes[3];
    if (h.ptype > 2) throw MalformedHeader("unknown packet type");
    const std::size_t need =
        static_cast<std::size_t>(header_bytes(static_cast<int>(h.hop) + 1));
    if (bytes.size() != need) throw MalformedHeader("length does not match hop count");
    h.addresses.reserve(static_cast<std::size_t>(h.hop) + 1);
    for (std::size_t i = 4; i < need; i += 2) {
        h.addresses.push_back(
            static_cast<std::uint16_t>((static_cast<std::uint16_t>(bytes[i]) << 8) |
                                       static_cast<std::uint16_t>(bytes[i + 1])));
    }
    return h;
}

bool operator==(const PacketHeader& a, const PacketHeader& b) {
    return a.hop == b.hop && a.seq == b.seq && a.ptype == b.ptype &&
           a.reserved == b.reserved && a.addresses == b.addresses;
}

// --------------------------------------------------------------------------
// Route planning

std::optional<std::vector<int>> shortest_route(const AdjacencyMatrix& adj, int src, int dst,
                                               const std::set<int>& excluded) {
    const int n = adj.size();
    if (src < 0 || src >= n || dst < 0 || dst >= n) {
        throw std::invalid_argument("route endpoints out of range");
    }
    if (src == dst) throw std::invalid_argument("route endpoints coincide");

    const auto barred = [&](int v) {
        return v != src && v != dst && excluded.count(v) > 0;
    };

    // Breadth-first distances measured from the destination, so the route
    // can then be grown from the source by always stepping to the smallest
    // node id that still shrinks the distance: that greedy walk yields the
    // lexicographically smallest minimum-hop route.
    constexpr int kUnreached = -1;
    std::vector<int> dist(static_cast<std::size_t>(n), kUnreached);
    std::vector<int> frontier{dst};
    dist[static_cast<std::size_t>(dst)] = 0;
    while (!frontier.empty() && dist[static_cast<std::size_t>(src)] == kUnreached) {
        std::vector<int> next;
        for (const int u : frontier) {
            for (int v = 0; v < n; ++v) {
                if (dist[static_cast<std::size_t>(v)] != kUnreached) continue;
                if (!adj.linked(u, v) || barred(v)) continue;
                dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                next.push_back(v);
            }
        }
        frontier = std::move(next);
    }
    if (dist[static_cast<std::size_t>(src)] == kUnreached) return std::nullopt;

    std::vector<int> route{src};
    int cur = src;
    while (cur != dst) {
        const int want = dist[static_cast<std::size_t>(cur)] - 1;
        int step = -1;
        for (int v = 0; v < n; ++v) {
            if (adj.linked(cur, v) && !barred(v) &&
                dist[static_cast<std::size_t>(v)] == want) {
                step = v;
                break;
            }
        }
        route.push_back(step);
        cur = step;
    }
    return route;
}

RouteDecision establish_route(const ConnectivityTimeline& timeline, int src, int dst,
                              double t_now, double expiry, const std::set<int>& excluded) {
    if (src == dst) throw std::invalid_argument("route endpoints coincide");
    if (expiry <= t_now) throw std::invalid_argument("expiry precedes decision time");

    const double dt = timeline.sample_interval();
    const std::size_t s0 = timeline.sample_index(t_now);
    for (std::size_t s = s0; s < timeline.sample_count(); ++s) {
        const double t = dt * static_cast<double>(s);
        if (s > s0 && t > expiry) break;
        if (auto route = shortest_route(timeline.sample(s), src, dst, excluded)) {
            RouteDecision d;
            if (s == s0) {
                d.kind = RouteDecision::Kind::SendNow;
                d.t_send = t_now;
            } else {
                d.kind = RouteDecision::Kind::SendLater;
                d.t_send = t;
            }
            d.route = std::move(*route);
            return d;
        }
    }
    return RouteDecision{};  // DropProactive
}

// --------------------------------------------------------------------------
// Routing agent

namespace {

std::vector<std::uint16_t> to_addresses(const std::vector<int>& route) {
    std::vector<std::uint16_t> out;
    out.reserve(route.size());
    for (const int v : route) out.push_back(static_cast<std::uint16_t>(v));
    return out;
}

// Position of `node` in the address list, or -1.
int address_index(const std::vector<std::uint16_t>& addrs, int node) {
    for (std::size_t i = 0; i < addrs.size(); ++i) {
        if (static_cast<int>(addrs[i]) == node) return static_cast<int>(i);
    }
    return -1;
}

Frame make_cpr_frame(int from, int to, const PacketHeader& header, int payload_bytes,
                     long pid, FrameClass cls) {
    Frame f;
    f.src = from;
    f.dst = to;
    f.bytes = payload_bytes + header_bytes(static_cast<int>(header.addresses.size()));
    f.cls = cls;
    f.trace_packet_id = pid;
    f.body = CprFrame{header, payload_bytes, pid};
    return f;
}

}  // namespace

CprTdAgent::CprTdAgent(const ConnectivityTimeline& timeline, CprTdParams params)
    : timeline_(&timeline), params_(params) {}

void CprTdAgent::on_app_generate(Engine& eng, int src, int dst, long pid,
                                 int payload_bytes) {
    Pending entry;
    entry.src = src;
    entry.dst = dst;
    entry.pid = pid;
    entry.payload_bytes = payload_bytes;
    entry.generated_at = eng.now();
    entry.seq = next_seq_[{src, dst}]++;
    pending_[pid] = std::move(entry);

    eng.schedule_timer(eng.now() + params_.expiry, src, kExpiry,
                       static_cast<std::uint64_t>(pid));
    decide(eng, pid);
}

void CprTdAgent::decide(Engine& eng, long pid) {
    const auto it = pending_.find(pid);
    if (it == pending_.end()) return;
    Pending& entry = it->second;

    const double expiry_abs = entry.generated_at + params_.expiry;
    if (eng.now() >= expiry_abs) {
        eng.ledger().on_expired(pid);
        pending_.erase(it);
        return;
    }

    const RouteDecision d = establish_route(*timeline_, entry.src, entry.dst, eng.now(),
                                            expiry_abs, entry.excluded);
    switch (d.kind) {
        case RouteDecision::Kind::DropProactive:
            eng.ledger().on_proactive_drop(pid);
            pending_.erase(it);
            return;
        case RouteDecision::Kind::SendNow:
            entry.route = d.route;
            send_data(eng, entry);
            return;
        case RouteDecision::Kind::SendLater:
            entry.route = d.route;  // provisional; re-validated at release
            eng.schedule_timer(d.t_send, entry.src, kRelease,
                               static_cast<std::uint64_t>(pid));
            return;
    }
}

void CprTdAgent::send_data(Engine& eng, Pending& entry) {
    entry.attempt++;
    entry.awaiting_mac = true;
    PacketHeader h;
    h.hop = static_cast<std::uint8_t>(entry.route.size() - 1);
    h.seq = entry.seq;
    h.ptype = static_cast<std::uint8_t>(CprType::Data);
    h.addresses = to_addresses(entry.route);
    eng.mac_send(entry.src, make_cpr_frame(entry.src, entry.route[1], h,
                                           entry.payload_bytes, entry.pid,
                                           FrameClass::Data));
    const double deadline =
        eng.now() + params_.per_hop_budget * static_cast<double>(entry.route.size() - 1);
    eng.schedule_timer(deadline, entry.src, kDeadline,
                       (static_cast<std::uint64_t>(entry.pid) << 4) |
                           (static_cast<std::uint64_t>(entry.attempt) & 0xF));
}

void CprTdAgent::recover(Engine& eng, long pid, int exclude_node) {
    const auto it = pending_.find(pid);
    if (it == pending_.end()) return;
    Pending& entry = it->second;
    if (exclude_node >= 0 && exclude_node != entry.src && exclude_node != entry.dst) {
        entry.excluded.insert(exclude_node);
    }
    entry.retries++;
    if (entry.retries > params_.max_route_retries) {
        eng.ledger().on_lost(pid);
        pending_.erase(it);
        return;
    }
    decide(eng, pid);
}

bool CprTdAgent::duplicate_seen(int dst_node, int src, std::uint8_t seq) {
    auto& window = recent_seqs_[{dst_node, src}];
    if (std::find(window.begin(), window.end(), seq) != window.end()) return true;
    window.push_back(seq);
    if (window.size() > 128) window.pop_front();
    return false;
}

void CprTdAgent::on_frame_received(Engine& eng, int node, const Frame& frame, int) {
    const auto* body = std::get_if<CprFrame>(&frame.body);
    if (body == nullptr) return;  // foreign traffic; nothing of ours
    const PacketHeader& h = body->header;
    const int pos = address_index(h.addresses, node);

    switch (static_cast<CprType>(h.ptype)) {
        case CprType::Data: {
            if (pos < 0) {
                off_route_discards_++;
                return;
            }
            if (pos == static_cast<int>(h.addresses.size()) - 1) {
                // Destination: count the delivery (repeats recorded as
                // duplicates) and confirm along the reversed route.
                if (duplicate_seen(node, static_cast<int>(h.addresses.front()), h.seq)) {
                    dup_hits_++;
                }
                eng.ledger().on_delivered(body->packet_id, eng.now());
                PacketHeader rep;
                rep.hop = h.hop;
                rep.seq = h.seq;
                rep.ptype = static_cast<std::uint8_t>(CprType::Rrep);
                rep.addresses.assign(h.addresses.rbegin(), h.addresses.rend());
                eng.mac_send(node,
                             make_cpr_frame(node, static_cast<int>(rep.addresses[1]), rep,
                                            0, body->packet_id, FrameClass::Control));
                rrep_sent_++;
                return;
            }
            // Relay: pass the frame unchanged to the next listed node.
            eng.mac_send(node, make_cpr_frame(node,
                                              static_cast<int>(h.addresses[pos + 1]), h,
                                              body->payload_bytes, body->packet_id,
                                              FrameClass::Data));
            return;
        }
        case CprType::Rrep: {
            if (pos < 0) {
                off_route_discards_++;
                return;
            }
            if (pos == static_cast<int>(h.addresses.size()) - 1) {
                pending_.erase(body->packet_id);  // route confirmed; done
                return;
            }
            eng.mac_send(node, make_cpr_frame(node,
                                              static_cast<int>(h.addresses[pos + 1]), h,
                                              0, body->packet_id, FrameClass::Control));
            return;
        }
        case CprType::Rrer: {
            // Address list: [detector, ..., source, failed]; the final
            // entry names the unreachable node and is not a relay hop.
            const int route_len = static_cast<int>(h.addresses.size()) - 1;
            if (pos < 0 || pos >= route_len) {
                off_route_discards_++;
                return;
            }
            const int failed = static_cast<int>(h.addresses.back());
            if (pos == route_len - 1) {
                const auto it = pending_.find(body->packet_id);
                if (it == pending_.end() || it->second.seq != h.seq) return;
                if (failed == it->second.dst) {
                    // The route died on its final hop; the destination is
                    // simply gone, so no bypass can help.
                    eng.ledger().on_lost(body->packet_id);
                    pending_.erase(it);
                    return;
                }
                recover(eng, body->packet_id, failed);
                return;
            }
            eng.mac_send(node, make_cpr_frame(node,
                                              static_cast<int>(h.addresses[pos + 1]), h,
                                              0, body->packet_id, FrameClass::Control));
            return;
        }
    }
}

void CprTdAgent::on_mac_result(Engine& eng, int node, const Frame& frame, bool success) {
    const auto* body = std::get_if<CprFrame>(&frame.body);
    if (body == nullptr) return;
    const PacketHeader& h = body->header;
    // Confirmation and failure-report frames get no link-layer recovery of
    // their own; the source's per-packet deadline is the safety net.
    if (static_cast<CprType>(h.ptype) != CprType::Data) return;

    const int pos = address_index(h.addresses, node);
    if (pos < 0 || pos + 1 >= static_cast<int>(h.addresses.size())) return;
    const int failed = static_cast<int>(h.addresses[pos + 1]);

    if (pos == 0) {
        // The source's own verdict for its current attempt.
        const auto it = pending_.find(body->packet_id);
        if (it == pending_.end()) return;
        if (to_addresses(it->second.route) != h.addresses) return;  // stale attempt
        it->second.awaiting_mac = false;
        if (success) return;  // now the confirmation clock does the judging
        if (failed == it->second.dst) {
            // The route died on its final hop; no bypass can help.
            eng.ledger().on_lost(body->packet_id);
            pending_.erase(it);
            return;
        }
        recover(eng, body->packet_id, failed);
        return;
    }
    if (success) return;

    // A relay lost the frame: report back to the source, naming the node
    // that did not answer. The report retraces the already-verified prefix.
    PacketHeader err;
    err.seq = h.seq;
    err.ptype = static_cast<std::uint8_t>(CprType::Rrer);
    for (int i = pos; i >= 0; --i) err.addresses.push_back(h.addresses[i]);
    err.addresses.push_back(static_cast<std::uint16_t>(failed));
    err.hop = static_cast<std::uint8_t>(err.addresses.size() - 1);
    eng.mac_send(node, make_cpr_frame(node, static_cast<int>(err.addresses[1]), err, 0,
                                      body->packet_id, FrameClass::Control));
    rrer_sent_++;
}

void CprTdAgent::on_timer(Engine& eng, int, int timer_id, std::uint64_t tag) {
    switch (timer_id) {
        case kExpiry: {
            const long pid = static_cast<long>(tag);
            const auto it = pending_.find(pid);
            if (it == pending_.end()) return;
            eng.ledger().on_expired(pid);
            pending_.erase(it);
            return;
        }
        case kRelease: {
            decide(eng, static_cast<long>(tag));  // re-validates the plan
            return;
        }
        case kDeadline: {
            const long pid = static_cast<long>(tag >> 4);
            const int attempt = static_cast<int>(tag & 0xF);
            const auto it = pending_.find(pid);
            if (it == pending_.end() || it->second.attempt != attempt) return;
            Pending& entry = it->second;
            if (entry.awaiting_mac) {
                // The link layer is still retrying this very attempt; keep
                // the clock alive rather than queueing a second copy.
                eng.schedule_timer(
                    eng.now() + params_.per_hop_budget *
                                    static_cast<double>(entry.route.size() - 1),
                    entry.src, kDeadline, tag);
                return;
            }
            // No confirmation in time: assume the first hop let us down.
            const int first_hop = entry.route.size() > 1 ? entry.route[1] : -1;
            recover(eng, pid, first_hop == entry.dst ? -1 : first_hop);
            return;
        }
        default:
            return;
    }
}

}  // namespace fanet
