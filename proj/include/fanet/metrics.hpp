#pragma once

// Per-run event ledger and the four performance metrics computed from it:
// packet delivery ratio, overhead efficiency (delivered payload bytes per
// control byte on the air), average end-to-end latency, and latency jitter.
// Latency is measured from application generation, so deliberate deferral
// counts as latency.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "fanet/mobility.hpp"

namespace fanet {

struct NoTraffic : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoDeliveries : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PacketOutcome { Pending, Delivered, ProactiveDrop, Expired, Lost };

enum class FrameClass { Data, Control };

struct PacketRecord {
    long id = -1;
    int src = -1;
    int dst = -1;
    double generated_at = 0.0;
    int payload_bytes = 0;
    PacketOutcome outcome = PacketOutcome::Pending;
    double received_at = -1.0;      // first delivery only
    int duplicate_deliveries = 0;   // extra copies after the first
    int late_deliveries = 0;        // copies arriving after expiry/drop
};

// One physical channel seizure (retransmissions appear as separate rows).
struct TxRecord {
    double t = 0.0;
    int node = -1;
    int bytes = 0;  // on-air bytes including link-layer overhead
    FrameClass cls = FrameClass::Data;
};

class MetricsLedger {
  public:
    void on_generated(long id, int src, int dst, double t, int payload_bytes);

    // Terminal outcomes. The first terminal outcome sticks, with one
    // exception: a real delivery overrides a source-side Lost verdict
    // (receptions are ground truth). Deliveries after expiry or proactive
    // drop are tallied separately and do not count toward PDR.
    void on_delivered(long id, double t);
    void on_proactive_drop(long id);
    void on_expired(long id);
    void on_lost(long id);

    void on_tx(double t, int node, int bytes, FrameClass cls);

    // Marks every still-pending packet expired (end of simulation).
    void finalize();

    const std::vector<PacketRecord>& packets() const { return packets_; }
    const std::vector<TxRecord>& transmissions() const { return tx_; }
    const PacketRecord& packet(long id) const { return packets_[index_.at(id)]; }

    long generated_count() const { return static_cast<long>(packets_.size()); }
    long count(PacketOutcome o) const;
    long delivered_payload_bytes() const;
    long control_bytes_sent() const;
    long data_bytes_sent() const;

  private:
    PacketRecord& record(long id);
    std::vector<PacketRecord> packets_;
    std::unordered_map<long, std::size_t> index_;
    std::vector<TxRecord> tx_;
};

// Delivered / generated. Throws NoTraffic when nothing was generated.
double packet_delivery_ratio(const MetricsLedger& ledger);

// Delivered payload bytes per control byte sent; nullopt when no control
// bytes were sent (the zero-overhead sentinel).
std::optional<double> overhead_efficiency(const MetricsLedger& ledger);

// Mean of (received_at - generated_at) over delivered packets.
double average_latency(const MetricsLedger& ledger);

// Sample standard deviation (N-1 divisor) of delivered latencies.
double latency_jitter(const MetricsLedger& ledger);

struct PhaseBucket {
    int phase = 0;  // 1-based
    long generated = 0;
    long delivered = 0;
    long proactive_drop = 0;
    long expired = 0;
    long lost = 0;
    long delivered_payload_bytes = 0;
    long control_bytes = 0;
    std::optional<double> pdr;          // absent when nothing generated
    std::optional<double> oe;           // absent when no control bytes
    std::optional<double> avg_latency;  // absent when nothing delivered
    std::optional<double> jitter;       // absent when < 2 deliveries
};

// Packets are attributed to the phase of their generation instant; control
// transmissions to the phase of their send instant.
std::array<PhaseBucket, 5> metrics_by_phase(const MetricsLedger& ledger,
                                            const ScenarioPhases& phases);

}  // namespace fanet
