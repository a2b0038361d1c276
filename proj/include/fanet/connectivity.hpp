#pragma once

// Time-sampled connectivity graph of the fleet: per-sample adjacency
// matrices on the packet clock, link up/down events, connected components,
// and reachability look-ahead. This is the planning information the
// trajectory-driven router consumes instead of flooding route requests.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <vector>

#include "fanet/mobility.hpp"

namespace fanet {

struct RadioParams {
    double tx_power_dbm = 16.0206;
    double detect_threshold_dbm = -96.0;
    double frequency_hz = 2.4e9;
    double data_rate_bps = 11e6;
    double propagation_speed = 2.99792458e8;  // m/s
};

double dbm_to_watts(double dbm);

// Distance at which free-space received power falls to the detection
// threshold: d = (lambda / 4 pi) * sqrt(P_tx / P_thr).
double comm_range(const RadioParams& radio);

class AdjacencyMatrix {
  public:
    AdjacencyMatrix(int n, double t) : n_(n), t_(t), bits_(static_cast<std::size_t>(n) * n) {}

    int size() const { return n_; }
    double time() const { return t_; }

    bool linked(int u, int v) const {
        return bits_[static_cast<std::size_t>(u) * n_ + static_cast<std::size_t>(v)] != 0;
    }
    // Sets both (u,v) and (v,u); the diagonal stays zero.
    void set_link(int u, int v, bool up) {
        if (u == v) return;
        const auto b = static_cast<std::uint8_t>(up);
        bits_[static_cast<std::size_t>(u) * n_ + static_cast<std::size_t>(v)] = b;
        bits_[static_cast<std::size_t>(v) * n_ + static_cast<std::size_t>(u)] = b;
    }
    int degree(int u) const {
        int d = 0;
        for (int v = 0; v < n_; ++v) d += linked(u, v) ? 1 : 0;
        return d;
    }

    bool operator==(const AdjacencyMatrix& o) const { return n_ == o.n_ && bits_ == o.bits_; }

  private:
    int n_;
    double t_;
    std::vector<std::uint8_t> bits_;
};

struct LinkEvent {
    double t;
    int u, v;  // u < v
    bool up;
};

class ConnectivityTimeline {
  public:
    double sample_interval() const { return dt_; }
    std::size_t sample_count() const { return samples_.size(); }
    double end_time() const { return dt_ * static_cast<double>(sample_count() - 1); }

    std::size_t sample_index(double t) const;  // floor to grid, clamped
    const AdjacencyMatrix& sample(std::size_t i) const { return samples_[i]; }
    const AdjacencyMatrix& sample_at(double t) const { return samples_[sample_index(t)]; }

    const std::vector<LinkEvent>& events() const { return events_; }

    int component_of(std::size_t sample, int node) const {
        return components_[sample][static_cast<std::size_t>(node)];
    }
    bool same_component(std::size_t sample, int u, int v) const {
        return component_of(sample, u) == component_of(sample, v);
    }
    int component_count(std::size_t sample) const { return n_components_[sample]; }

    // Earliest moment >= t_now at which dst shares src's component: t_now
    // itself if already true on the sample covering t_now, otherwise the
    // first later sample time; nullopt if never before the timeline ends.
    std::optional<double> earliest_reachable(int src, int dst, double t_now) const;

    // Debug event log: "t,u,v,up" per line with a header row.
    void export_events_csv(std::ostream& os) const;

  private:
    friend ConnectivityTimeline build_timeline(const FormationTrack&, double,
                                               const std::set<int>&, double);
    double dt_ = 0.1;
    std::vector<AdjacencyMatrix> samples_;
    std::vector<LinkEvent> events_;
    std::vector<std::vector<int>> components_;  // [sample][node] label
    std::vector<int> n_components_;
};

// Snapshot adjacency: link (u,v) up iff distance <= range and neither node
// is in the failed set.
AdjacencyMatrix adjacency_at(const FormationTrack& track, double t, double range,
                             const std::set<int>& failed = {});

// Samples adjacency every dt over the track span and derives events and
// component labels. Built once; read-only (thread-safe) afterwards.
ConnectivityTimeline build_timeline(const FormationTrack& track, double range,
                                    const std::set<int>& failed = {}, double dt = 0.1);

}  // namespace fanet
