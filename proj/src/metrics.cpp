#include "fanet/metrics.hpp"

#include <cmath>

namespace fanet {

PacketRecord& MetricsLedger::record(long id) { return packets_[index_.at(id)]; }

void MetricsLedger::on_generated(long id, int src, int dst, double t, int payload_bytes) {
    if (index_.count(id)) throw std::invalid_argument("duplicate packet id");
    index_[id] = packets_.size();
    PacketRecord r;
    r.id = id;
    r.src = src;
    r.dst = dst;
    r.generated_at = t;
    r.payload_bytes = payload_bytes;
    packets_.push_back(r);
}

void MetricsLedger::on_delivered(long id, double t) {
    PacketRecord& r = record(id);
    if (t < r.generated_at) throw std::logic_error("delivery precedes generation");
    switch (r.outcome) {
        case PacketOutcome::Pending:
        case PacketOutcome::Lost:
            r.outcome = PacketOutcome::Delivered;
            r.received_at = t;
            break;
        case PacketOutcome::Delivered:
            ++r.duplicate_deliveries;
            break;
        case PacketOutcome::Expired:
        case PacketOutcome::ProactiveDrop:
            ++r.late_deliveries;
            break;
    }
}

void MetricsLedger::on_proactive_drop(long id) {
    PacketRecord& r = record(id);
    if (r.outcome == PacketOutcome::Pending) r.outcome = PacketOutcome::ProactiveDrop;
}

void MetricsLedger::on_expired(long id) {
    PacketRecord& r = record(id);
    if (r.outcome == PacketOutcome::Pending) r.outcome = PacketOutcome::Expired;
}

void MetricsLedger::on_lost(long id) {
    PacketRecord& r = record(id);
    if (r.outcome == PacketOutcome::Pending) r.outcome = PacketOutcome::Lost;
}

void MetricsLedger::on_tx(double t, int node, int bytes, FrameClass cls) {
    tx_.push_back({t, node, bytes, cls});
}

void MetricsLedger::finalize() {
    for (PacketRecord& r : packets_)
        if (r.outcome == PacketOutcome::Pending) r.outcome = PacketOutcome::Expired;
}

long MetricsLedger::count(PacketOutcome o) const {
    long n = 0;
    for (const PacketRecord& r : packets_) n += (r.outcome == o) ? 1 : 0;
    return n;
}

long MetricsLedger::delivered_payload_bytes() const {
    long n = 0;
    for (const PacketRecord& r : packets_)
        if (r.outcome == PacketOutcome::Delivered) n += r.payload_bytes;
    return n;
}

long MetricsLedger::control_bytes_sent() const {
    long n = 0;
    for (const TxRecord& t : tx_)
        if (t.cls == FrameClass::Control) n += t.bytes;
    return n;
}

long MetricsLedger::data_bytes_sent() const {
    long n = 0;
    for (const TxRecord& t : tx_)
        if (t.cls == FrameClass::Data) n += t.bytes;
    return n;
}

double packet_delivery_ratio(const MetricsLedger& ledger) {
    const long generated = ledger.generated_count();
    if (generated == 0) throw NoTraffic("no packets generated");
    return static_cast<double>(ledger.count(PacketOutcome::Delivered)) /
           static_cast<double>(generated);
}

std::optional<double> overhead_efficiency(const MetricsLedger& ledger) {
    const long control = ledger.control_bytes_sent();
    if (control == 0) return std::nullopt;
    return static_cast<double>(ledger.delivered_payload_bytes()) /
           static_cast<double>(control);
}

namespace {

struct LatencyStats {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;  // Welford accumulator

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double sample_stddev() const { return std::sqrt(m2 / static_cast<double>(n - 1)); }
};

LatencyStats latency_stats(const MetricsLedger& ledger) {
    LatencyStats s;
    for (const PacketRecord& r : ledger.packets())
        if (r.outcome == PacketOutcome::Delivered) s.add(r.received_at - r.generated_at);
    return s;
}

}  // namespace

double average_latency(const MetricsLedger& ledger) {
    const LatencyStats s = latency_stats(ledger);
    if (s.n == 0) throw NoDeliveries("no delivered packets");
    return s.mean;
}

double latency_jitter(const MetricsLedger& ledger) {
    const LatencyStats s = latency_stats(ledger);
    if (s.n < 2) throw InsufficientSamples("need at least two delivered packets");
    return s.sample_stddev();
}

std::array<PhaseBucket, 5> metrics_by_phase(const MetricsLedger& ledger,
                                            const ScenarioPhases& phases) {
    std::array<PhaseBucket, 5> out{};
    std::array<LatencyStats, 5> stats{};
    for (int p = 0; p < 5; ++p) out[static_cast<std::size_t>(p)].phase = p + 1;

    for (const PacketRecord& r : ledger.packets()) {
        PhaseBucket& b = out[static_cast<std::size_t>(phases.phase_of(r.generated_at) - 1)];
        ++b.generated;
        switch (r.outcome) {
            case PacketOutcome::Delivered:
                ++b.delivered;
                b.delivered_payload_bytes += r.payload_bytes;
                stats[static_cast<std::size_t>(b.phase - 1)].add(r.received_at -
                                                                 r.generated_at);
                break;
            case PacketOutcome::ProactiveDrop:
                ++b.proactive_drop;
                break;
            case PacketOutcome::Expired:
                ++b.expired;
                break;
            case PacketOutcome::Lost:
                ++b.lost;
                break;
            case PacketOutcome::Pending:
                break;  // only before finalize(); not attributed
        }
    }
    for (const TxRecord& t : ledger.transmissions())
        if (t.cls == FrameClass::Control)
            out[static_cast<std::size_t>(phases.phase_of(t.t) - 1)].control_bytes += t.bytes;

    for (std::size_t p = 0; p < 5; ++p) {
        PhaseBucket& b = out[p];
        if (b.generated > 0)
            b.pdr = static_cast<double>(b.delivered) / static_cast<double>(b.generated);
        if (b.control_bytes > 0)
            b.oe = static_cast<double>(b.delivered_payload_bytes) /
                   static_cast<double>(b.control_bytes);
        if (stats[p].n > 0) b.avg_latency = stats[p].mean;
        if (stats[p].n >= 2) b.jitter = stats[p].sample_stddev();
    }
    return out;
}

}  // namespace fanet
