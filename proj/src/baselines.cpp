#include "fanet/baselines.hpp"

#include <utility>
#include <variant>

namespace fanet {

namespace {
constexpr int kAodvDiscoveryTimer = 10;
constexpr int kDsdvTickTimer = 20;
}  // namespace

// ---------------------------------------------------------------------------
// On-demand baseline

AodvAgent::AodvAgent(AodvParams params) : params_(params) {}

void AodvAgent::ensure_ready(Engine& eng) {
    if (nodes_.size() != static_cast<std::size_t>(eng.node_count())) {
        nodes_.assign(static_cast<std::size_t>(eng.node_count()), NodeState{});
    }
}

std::optional<int> AodvAgent::route_hops(int node, int dst) const {
    const auto& routes = nodes_.at(static_cast<std::size_t>(node)).routes;
    auto it = routes.find(dst);
    if (it == routes.end()) return std::nullopt;
    return it->second.hops;
}

void AodvAgent::on_app_generate(Engine& eng, int src, int dst, long packet_id,
                                int payload_bytes) {
    ensure_ready(eng);
    info_[packet_id] = PacketInfo{src, dst, payload_bytes, 0};
    submit(eng, src, packet_id);
}

void AodvAgent::submit(Engine& eng, int node, long pid) {
    auto& st = nodes_[static_cast<std::size_t>(node)];
    const PacketInfo& info = info_.at(pid);
    auto route = st.routes.find(info.dst);
    if (route != st.routes.end()) {
        send_data(eng, node, route->second.next, pid);
        return;
    }
    auto& queue = st.buffer[info.dst];
    if (static_cast<int>(queue.size()) >= params_.buffer_cap) {
        eng.ledger().on_lost(pid);
        return;
    }
    queue.push_back(Buffered{pid, info.payload});
    if (!st.discovery[info.dst].active) start_discovery(eng, node, info.dst);
}

void AodvAgent::start_discovery(Engine& eng, int node, int dst) {
    auto& st = nodes_[static_cast<std::size_t>(node)];
    auto& d = st.discovery[dst];
    d.active = true;
    d.attempts = 1;
    ++d.epoch;
    ++floods_started_;
    const int rreq_id = st.next_rreq_id++;
    st.seen_rreq.insert({node, rreq_id});
    Frame frame;
    frame.src = node;
    frame.dst = kBroadcast;
    frame.bytes = params_.rreq_bytes;
    frame.cls = FrameClass::Control;
    frame.body = AodvRreq{node, rreq_id, dst, 0, params_.ttl};
    eng.mac_send(node, frame);
    const std::uint64_t tag =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(dst)) << 32) | d.epoch;
    eng.schedule_timer(eng.now() + params_.discovery_timeout, node, kAodvDiscoveryTimer, tag);
}

void AodvAgent::send_data(Engine& eng, int node, int next, long pid) {
    const PacketInfo& info = info_.at(pid);
    Frame frame;
    frame.src = node;
    frame.dst = next;
    frame.bytes = info.payload + params_.data_header_bytes;
    frame.cls = FrameClass::Data;
    frame.trace_packet_id = pid;
    frame.body = AodvData{info.origin, info.dst, pid, info.payload};
    eng.mac_send(node, frame);
}

void AodvAgent::send_rerr(Engine& eng, int node, int origin, int unreachable, long pid) {
    auto& st = nodes_[static_cast<std::size_t>(node)];
    auto rev = st.reverse.find(origin);
    if (rev == st.reverse.end()) return;  // nobody to tell; the packet is gone
    Frame frame;
    frame.src = node;
    frame.dst = rev->second.next;
    frame.bytes = params_.rerr_bytes;
    frame.cls = FrameClass::Control;
    frame.trace_packet_id = pid;
    frame.body = AodvRerr{origin, unreachable, pid};
    eng.mac_send(node, frame);
}

void AodvAgent::on_frame_received(Engine& eng, int node, const Frame& frame, int from) {
    ensure_ready(eng);
    auto& st = nodes_[static_cast<std::size_t>(node)];

    if (const auto* rreq = std::get_if<AodvRreq>(&frame.body)) {
        if (!st.seen_rreq.insert({rreq->origin, rreq->rreq_id}).second) return;
        st.reverse[rreq->origin] = Route{from, rreq->hop_count + 1};
        if (node == rreq->dst) {
            Frame rep;
            rep.src = node;
            rep.dst = from;
            rep.bytes = params_.rrep_bytes;
            rep.cls = FrameClass::Control;
            rep.body = AodvRrep{rreq->origin, rreq->dst, 0};
            eng.mac_send(node, rep);
        } else if (rreq->ttl > 1) {
            Frame fwd;
            fwd.src = node;
            fwd.dst = kBroadcast;
            fwd.bytes = params_.rreq_bytes;
            fwd.cls = FrameClass::Control;
            fwd.body = AodvRreq{rreq->origin, rreq->rreq_id, rreq->dst,
                                rreq->hop_count + 1, rreq->ttl - 1};
            eng.mac_send(node, fwd);
        }
        return;
    }

    if (const auto* rrep = std::get_if<AodvRrep>(&frame.body)) {
        st.routes[rrep->dst] = Route{from, rrep->hop_count + 1};
        if (node == rrep->origin) {
            st.discovery[rrep->dst].active = false;
            auto buffered = st.buffer.find(rrep->dst);
            if (buffered != st.buffer.end()) {
                std::vector<Buffered> queue = std::move(buffered->second);
                st.buffer.erase(buffered);
                for (const Buffered& b : queue) send_data(eng, node, from, b.pid);
            }
            return;
        }
        auto rev = st.reverse.find(rrep->origin);
        if (rev == st.reverse.end()) return;
        Frame fwd;
        fwd.src = node;
        fwd.dst = rev->second.next;
        fwd.bytes = params_.rrep_bytes;
        fwd.cls = FrameClass::Control;
        fwd.body = AodvRrep{rrep->origin, rrep->dst, rrep->hop_count + 1};
        eng.mac_send(node, fwd);
        return;
    }

    if (const auto* rerr = std::get_if<AodvRerr>(&frame.body)) {
        if (node != rerr->origin) {
            auto rev = st.reverse.find(rerr->origin);
            if (rev == st.reverse.end()) return;
            Frame fwd = frame;
            fwd.src = node;
            fwd.dst = rev->second.next;
            eng.mac_send(node, fwd);
            return;
        }
        st.routes.erase(rerr->unreachable_dst);
        auto it = info_.find(rerr->packet_id);
        if (it != info_.end() && it->second.rediscoveries < params_.max_rediscoveries) {
            ++it->second.rediscoveries;
            submit(eng, node, rerr->packet_id);
        } else {
            eng.ledger().on_lost(rerr->packet_id);
        }
        return;
    }

    if (const auto* data = std::get_if<AodvData>(&frame.body)) {
        if (node == data->dst) {
            eng.ledger().on_delivered(data->packet_id, eng.now());
            return;
        }
        auto route = st.routes.find(data->dst);
        if (route != st.routes.end()) {
            Frame fwd = frame;
            fwd.src = node;
            fwd.dst = route->second.next;
            eng.mac_send(node, fwd);
            return;
        }
        eng.ledger().on_lost(data->packet_id);
        send_rerr(eng, node, data->origin, data->dst, data->packet_id);
        return;
    }
}

void AodvAgent::on_mac_result(Engine& eng, int node, const Frame& frame, bool success) {
    if (success) return;
    ensure_ready(eng);
    const auto* data = std::get_if<AodvData>(&frame.body);
    if (data == nullptr) return;  // lost control frames are covered by timeouts
    auto& st = nodes_[static_cast<std::size_t>(node)];
    st.routes.erase(data->dst);
    if (node == data->origin) {
        auto it = info_.find(data->packet_id);
        if (it != info_.end() && it->second.rediscoveries < params_.max_rediscoveries) {
            ++it->second.rediscoveries;
            submit(eng, node, data->packet_id);
        } else {
            eng.ledger().on_lost(data->packet_id);
        }
        return;
    }
    eng.ledger().on_lost(data->packet_id);
    send_rerr(eng, node, data->origin, data->dst, data->packet_id);
}

void AodvAgent::on_timer(Engine& eng, int node, int timer_id, std::uint64_t tag) {
    if (timer_id != kAodvDiscoveryTimer) return;
    ensure_ready(eng);
    auto& st = nodes_[static_cast<std::size_t>(node)];
    const int dst = static_cast<int>(static_cast<std::int32_t>(tag >> 32));
    const std::uint64_t epoch = tag & 0xffffffffull;
    auto it = st.discovery.find(dst);
    if (it == st.discovery.end() || !it->second.active || it->second.epoch != epoch) return;
    if (st.routes.count(dst) != 0) {  // answered; queue already flushed
        it->second.active = false;
        return;
    }
    if (it->second.attempts <= params_.max_discovery_retries) {
        ++it->second.attempts;
        const int rreq_id = st.next_rreq_id++;
        st.seen_rreq.insert({node, rreq_id});
        Frame frame;
        frame.src = node;
        frame.dst = kBroadcast;
        frame.bytes = params_.rreq_bytes;
        frame.cls = FrameClass::Control;
        frame.body = AodvRreq{node, rreq_id, dst, 0, params_.ttl};
        eng.mac_send(node, frame);
        eng.schedule_timer(eng.now() + params_.discovery_timeout, node, kAodvDiscoveryTimer,
                           tag);
        return;
    }
    it->second.active = false;
    auto buffered = st.buffer.find(dst);
    if (buffered != st.buffer.end()) {
        for (const Buffered& b : buffered->second) eng.ledger().on_lost(b.pid);
        st.buffer.erase(buffered);
    }
}

// ---------------------------------------------------------------------------
// Proactive baseline

DsdvAgent::DsdvAgent(DsdvParams params) : params_(params) {}

void DsdvAgent::start(Engine& eng) {
    nodes_.assign(static_cast<std::size_t>(eng.node_count()), NodeState{});
    for (int node = 0; node < eng.node_count(); ++node) {
        auto& st = nodes_[static_cast<std::size_t>(node)];
        st.table[node] = Entry{node, 0, 0, 0.0};
        const double stagger = eng.misc_rng(node).uniform() * params_.period;
        eng.schedule_timer(stagger, node, kDsdvTickTimer, 0);
    }
}

std::optional<int> DsdvAgent::route_metric(int node, int dst) const {
    const auto& table = nodes_.at(static_cast<std::size_t>(node)).table;
    auto it = table.find(dst);
    if (it == table.end()) return std::nullopt;
    return it->second.metric;
}

void DsdvAgent::broadcast_table(Engine& eng, int node) {
    auto& st = nodes_[static_cast<std::size_t>(node)];
    const double now = eng.now();
    st.own_seq += 2;
    st.table[node] = Entry{node, 0, st.own_seq, now};
    const double horizon = params_.aging_periods * params_.period;
    for (auto it = st.table.begin(); it != st.table.end();) {
        if (it->first != node && now - it->second.updated_at > horizon) {
            it = st.table.erase(it);
        } else {
            ++it;
        }
    }
    DsdvUpdate update;
    update.sender = node;
    update.entries.reserve(st.table.size());
    for (const auto& [dst, entry] : st.table) {
        update.entries.push_back(DsdvEntry{dst, entry.metric, entry.seq});
    }
    Frame frame;
    frame.src = node;
    frame.dst = kBroadcast;
    frame.bytes =
        params_.count_bytes + params_.entry_bytes * static_cast<int>(update.entries.size());
    frame.cls = FrameClass::Control;
    frame.body = std::move(update);
    eng.mac_send(node, frame);
}

void DsdvAgent::forward_data(Engine& eng, int node, const DsdvData& data) {
    const auto& st = nodes_[static_cast<std::size_t>(node)];
    Frame frame;
    frame.src = node;
    frame.dst = st.table.at(data.dst).next;
    frame.bytes = data.payload_bytes + params_.data_header_bytes;
    frame.cls = FrameClass::Data;
    frame.trace_packet_id = data.packet_id;
    frame.body = data;
    eng.mac_send(node, frame);
}

void DsdvAgent::on_app_generate(Engine& eng, int src, int dst, long packet_id,
                                int payload_bytes) {
    const auto& st = nodes_[static_cast<std::size_t>(src)];
    if (st.table.find(dst) == st.table.end()) {
        eng.ledger().on_lost(packet_id);
        return;
    }
    forward_data(eng, src, DsdvData{src, dst, packet_id, payload_bytes});
}

void DsdvAgent::on_frame_received(Engine& eng, int node, const Frame& frame, int from) {
    if (const auto* update = std::get_if<DsdvUpdate>(&frame.body)) {
        auto& st = nodes_[static_cast<std::size_t>(node)];
        const double now = eng.now();
        for (const DsdvEntry& e : update->entries) {
            if (e.dst == node) continue;
            const Entry cand{from, e.metric + 1, e.seq, now};
            auto it = st.table.find(e.dst);
            const bool adopt = it == st.table.end() || cand.seq > it->second.seq ||
                               (cand.seq == it->second.seq && cand.metric < it->second.metric);
            if (adopt) st.table[e.dst] = cand;
        }
        return;
    }
    if (const auto* data = std::get_if<DsdvData>(&frame.body)) {
        if (node == data->dst) {
            eng.ledger().on_delivered(data->packet_id, eng.now());
            return;
        }
        const auto& st = nodes_[static_cast<std::size_t>(node)];
        if (st.table.find(data->dst) == st.table.end()) {
            eng.ledger().on_lost(data->packet_id);
            return;
        }
        forward_data(eng, node, *data);
    }
}

void DsdvAgent::on_mac_result(Engine& eng, int /*node*/, const Frame& frame, bool success) {
    if (success) return;
    if (const auto* data = std::get_if<DsdvData>(&frame.body)) {
        eng.ledger().on_lost(data->packet_id);  // no repair path in this scheme
    }
}

void DsdvAgent::on_timer(Engine& eng, int node, int timer_id, std::uint64_t /*tag*/) {
    if (timer_id != kDsdvTickTimer) return;
    broadcast_table(eng, node);
    eng.schedule_timer(eng.now() + params_.period, node, kDsdvTickTimer, 0);
}

}  // namespace fanet
