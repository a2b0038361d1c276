#include "fanet/netsim.hpp"

#include <algorithm>
#include <cmath>

namespace fanet {

bool rx_survives(const FormationTrack& track, double range, int sender, int receiver,
                 double t_start, double t_end, const std::vector<TxWindow>& others) {
    if (distance(track.position(sender, t_start), track.position(receiver, t_start)) > range)
        return false;
    for (const TxWindow& o : others) {
        const bool overlaps = o.t_start < t_end && o.t_end > t_start;
        if (!overlaps) continue;
        // The receiver's own transmissions are distance 0: half duplex falls
        // out of the same audibility rule as foreign interference.
        if (distance(track.position(o.node, o.t_start),
                     track.position(receiver, o.t_start)) <= range)
            return false;
    }
    return true;
}

Engine::Engine(const FormationTrack& track, const RadioParams& radio, const MacParams& mac,
               std::uint64_t base_seed, std::uint64_t run_index, std::set<int> failed,
               double fail_time)
    : track_(&track),
      radio_(radio),
      mac_(mac),
      range_(comm_range(radio)),
      failed_(std::move(failed)),
      fail_time_(fail_time) {
    ack_timeout_ = mac_.ack_timeout > 0.0
                       ? mac_.ack_timeout
                       : 2.0 * range_ / radio_.propagation_speed + mac_.difs;
    const int n = track_->node_count();
    mac_state_.resize(static_cast<std::size_t>(n));
    for (auto& s : mac_state_) s.cw = mac_.cw_min;
    mac_rng_.reserve(static_cast<std::size_t>(n));
    misc_rng_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        mac_rng_.emplace_back(base_seed, run_index, RngPurpose::MacBackoff,
                              static_cast<std::uint64_t>(i));
        misc_rng_.emplace_back(base_seed, run_index, RngPurpose::ProtocolMisc,
                               static_cast<std::uint64_t>(i));
    }
}

void Engine::schedule(Event ev) {
    if (ev.t < now_) throw PastEvent("event scheduled in the past");
    ev.seq = next_seq_++;
    heap_.push(std::move(ev));
}

void Engine::trace_row(int node, const char* kind, long pid) {
    if (tracing_) trace_.push_back({now_, node, kind, pid});
}

void Engine::app_generate(double t, int src, int dst, long packet_id, int payload_bytes) {
    Event ev;
    ev.t = t;
    ev.kind = EvKind::AppGenerate;
    ev.node = src;
    ev.peer = dst;
    ev.pid = packet_id;
    ev.payload = payload_bytes;
    schedule(std::move(ev));
}

void Engine::mac_send(int node, Frame frame) {
    if (!alive(node)) return;
    frame.src = node;
    MacState& s = mac_state_[static_cast<std::size_t>(node)];
    s.queue.push_back(std::move(frame));
    if (!s.busy) {
        s.busy = true;
        Event ev;
        ev.t = now_ + mac_.difs;
        ev.kind = EvKind::MacAttempt;
        ev.node = node;
        schedule(std::move(ev));
    }
}

void Engine::schedule_timer(double t, int node, int timer_id, std::uint64_t tag) {
    Event ev;
    ev.t = t;
    ev.kind = EvKind::TimerExpire;
    ev.node = node;
    ev.timer_id = timer_id;
    ev.tag = tag;
    schedule(std::move(ev));
}

void Engine::run(double t_end) {
    if (!started_) {
        started_ = true;
        if (agent_) agent_->start(*this);
    }
    while (!heap_.empty() && heap_.top().t <= t_end) {
        Event ev = heap_.top();
        heap_.pop();
        now_ = ev.t;
        dispatch(ev);
    }
}

void Engine::dispatch(const Event& ev) {
    switch (ev.kind) {
        case EvKind::AppGenerate:
            ledger_.on_generated(ev.pid, ev.node, ev.peer, now_, ev.payload);
            trace_row(ev.node, "gen", ev.pid);
            if (agent_ && alive(ev.node))
                agent_->on_app_generate(*this, ev.node, ev.peer, ev.pid, ev.payload);
            break;
        case EvKind::MacAttempt:
            attempt(ev.node);
            break;
        case EvKind::TxEnd:
            finish_tx(ev);
            break;
        case EvKind::RxDeliver:
            if (alive(ev.node)) {
                trace_row(ev.node, "rx", ev.frame->trace_packet_id);
                if (agent_) agent_->on_frame_received(*this, ev.node, *ev.frame, ev.peer);
            }
            break;
        case EvKind::TimerExpire:
            if (alive(ev.node)) {
                trace_row(ev.node, "timer", static_cast<long>(ev.tag));
                if (agent_) agent_->on_timer(*this, ev.node, ev.timer_id, ev.tag);
            }
            break;
        case EvKind::MacDone:
            mac_done(ev.node, ev.flag, ev.frame);
            break;
    }
}

bool Engine::channel_busy(int node, double t, double* free_at) const {
    bool busy = false;
    double until = t;
    for (const ActiveTx& tx : recent_tx_) {
        // A transmission starting at this very instant is not yet audible
        // (carrier sense cannot beat the wavefront), so same-instant
        // contenders collide rather than defer.
        if (!(tx.t_start < t && t < tx.t_end)) continue;
        if (distance_at(tx.node, node, t) <= range_) {
            busy = true;
            until = std::max(until, tx.t_end);
        }
    }
    if (free_at) *free_at = until;
    return busy;
}

void Engine::attempt(int node) {
    MacState& s = mac_state_[static_cast<std::size_t>(node)];
    if (!alive(node)) {
        s.queue.clear();
        s.busy = false;
        s.retries = 0;
        s.cw = mac_.cw_min;
        return;
    }
    if (s.queue.empty()) {
        s.busy = false;
        return;
    }
    double free_at = now_;
    if (channel_busy(node, now_, &free_at)) {
        defer_or_fail(node, now_, free_at + mac_.difs);
    } else {
        begin_tx(node);
    }
}

void Engine::defer_or_fail(int node, double fail_at, double retry_base) {
    MacState& s = mac_state_[static_cast<std::size_t>(node)];
    ++s.retries;
    if (s.retries > mac_.max_retries) {
        Event ev;
        ev.t = fail_at;
        ev.kind = EvKind::MacDone;
        ev.node = node;
        ev.flag = false;
        schedule(std::move(ev));
        return;
    }
    s.cw = std::min((s.cw + 1) * 2 - 1, mac_.cw_max);
    const std::uint64_t k = mac_rng(node).bounded(static_cast<std::uint64_t>(s.cw) + 1);
    Event ev;
    ev.t = retry_base + static_cast<double>(k) * mac_.slot;
    ev.kind = EvKind::MacAttempt;
    ev.node = node;
    schedule(std::move(ev));
}

void Engine::begin_tx(int node) {
    MacState& s = mac_state_[static_cast<std::size_t>(node)];
    const Frame& f = s.queue.front();
    const double dur = airtime(f.bytes);
    ActiveTx tx;
    tx.id = next_tx_id_++;
    tx.node = node;
    tx.t_start = now_;
    tx.t_end = now_ + dur;
    tx.frame = std::make_shared<Frame>(f);
    max_airtime_seen_ = std::max(max_airtime_seen_, dur);
    recent_tx_.push_back(tx);

    ledger_.on_tx(now_, node, f.bytes + mac_.overhead_bytes, f.cls);
    trace_row(node, "tx_start", f.trace_packet_id);

    Event ev;
    ev.t = tx.t_end;
    ev.kind = EvKind::TxEnd;
    ev.node = node;
    ev.tx_id = tx.id;
    ev.frame = tx.frame;
    schedule(std::move(ev));
}

void Engine::finish_tx(const Event& ev) {
    // Prune transmissions too old to overlap anything still in flight.
    const double horizon = max_airtime_seen_ + ack_timeout_ + 1e-3;
    while (!recent_tx_.empty() && recent_tx_.front().t_end + horizon < now_)
        recent_tx_.pop_front();

    const ActiveTx* tx = nullptr;
    for (const ActiveTx& candidate : recent_tx_)
        if (candidate.id == ev.tx_id) {
            tx = &candidate;
            break;
        }
    if (!tx) throw std::logic_error("transmission record pruned too early");

    const Frame& f = *tx->frame;
    trace_row(tx->node, "tx_end", f.trace_packet_id);

    std::vector<TxWindow> others;
    for (const ActiveTx& o : recent_tx_)
        if (o.id != tx->id && o.t_start < tx->t_end && o.t_end > tx->t_start)
            others.push_back({o.node, o.t_start, o.t_end});

    const int n = node_count();
    if (f.dst == kBroadcast) {
        for (int r = 0; r < n; ++r) {
            if (r == tx->node || !alive(r)) continue;
            if (!rx_survives(*track_, range_, tx->node, r, tx->t_start, tx->t_end, others))
                continue;
            const double prop =
                distance_at(tx->node, r, tx->t_start) / radio_.propagation_speed;
            Event rx;
            rx.t = now_ + prop;
            rx.kind = EvKind::RxDeliver;
            rx.node = r;
            rx.peer = tx->node;
            rx.frame = tx->frame;
            schedule(std::move(rx));
        }
        mac_done(tx->node, true, tx->frame);
        return;
    }

    const int r = f.dst;
    const bool ok = alive(r) &&
                    rx_survives(*track_, range_, tx->node, r, tx->t_start, tx->t_end, others);
    if (ok) {
        const double prop = distance_at(tx->node, r, tx->t_start) / radio_.propagation_speed;
        Event rx;
        rx.t = now_ + prop;
        rx.kind = EvKind::RxDeliver;
        rx.node = r;
        rx.peer = tx->node;
        rx.frame = tx->frame;
        schedule(std::move(rx));
        // Idealized instant ACK arrives one round trip later.
        Event done;
        done.t = now_ + 2.0 * prop;
        done.kind = EvKind::MacDone;
        done.node = tx->node;
        done.flag = true;
        schedule(std::move(done));
    } else {
        defer_or_fail(tx->node, now_ + ack_timeout_, now_ + ack_timeout_);
    }
}

void Engine::mac_done(int node, bool success, const std::shared_ptr<const Frame>&) {
    MacState& s = mac_state_[static_cast<std::size_t>(node)];
    if (s.queue.empty()) throw std::logic_error("MAC completion without a frame");
    Frame f = std::move(s.queue.front());
    s.queue.pop_front();
    s.retries = 0;
    s.cw = mac_.cw_min;
    s.busy = false;
    if (!success) trace_row(node, "mac_fail", f.trace_packet_id);
    if (agent_ && alive(node)) agent_->on_mac_result(*this, node, f, success);
    if (!s.busy && !s.queue.empty()) {
        s.busy = true;
        Event ev;
        ev.t = now_ + mac_.difs;
        ev.kind = EvKind::MacAttempt;
        ev.node = node;
        schedule(std::move(ev));
    }
}

}  // namespace fanet
