#include "fanet/connectivity.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fanet {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double comm_range(const RadioParams& radio) {
    if (radio.frequency_hz <= 0.0 || radio.propagation_speed <= 0.0)
        throw std::invalid_argument("radio parameters must be positive");
    const double lambda = radio.propagation_speed / radio.frequency_hz;
    const double p_tx = dbm_to_watts(radio.tx_power_dbm);
    const double p_thr = dbm_to_watts(radio.detect_threshold_dbm);
    return lambda / (4.0 * M_PI) * std::sqrt(p_tx / p_thr);
}

AdjacencyMatrix adjacency_at(const FormationTrack& track, double t, double range,
                             const std::set<int>& failed) {
    const int n = track.node_count();
    AdjacencyMatrix m(n, t);
    const std::size_t s = track.sample_index(t);
    for (int u = 0; u < n; ++u) {
        if (failed.count(u)) continue;
        for (int v = u + 1; v < n; ++v) {
            if (failed.count(v)) continue;
            if (distance(track.position_at(s, u), track.position_at(s, v)) <= range)
                m.set_link(u, v, true);
        }
    }
    return m;
}

std::size_t ConnectivityTimeline::sample_index(double t) const {
    if (t <= 0.0) return 0;
    auto idx = static_cast<std::size_t>(t / dt_ + 1e-9);
    return std::min(idx, samples_.size() - 1);
}

std::optional<double> ConnectivityTimeline::earliest_reachable(int src, int dst,
                                                               double t_now) const {
    if (src == dst) throw std::invalid_argument("earliest_reachable: src == dst");
    const std::size_t s0 = sample_index(t_now);
    if (same_component(s0, src, dst)) return t_now;
    for (std::size_t s = s0 + 1; s < sample_count(); ++s)
        if (same_component(s, src, dst)) return dt_ * static_cast<double>(s);
    return std::nullopt;
}

void ConnectivityTimeline::export_events_csv(std::ostream& os) const {
    os << "t,u,v,up\n";
    for (const LinkEvent& e : events_)
        os << e.t << ',' << e.u << ',' << e.v << ',' << (e.up ? 1 : 0) << '\n';
}

namespace {

// Flood-fill component labels; isolated (including failed) nodes get
// singleton labels.
void label_components(const AdjacencyMatrix& m, std::vector<int>& label, int& n_comp) {
    const int n = m.size();
    label.assign(static_cast<std::size_t>(n), -1);
    n_comp = 0;
    std::vector<int> stack;
    for (int seed = 0; seed < n; ++seed) {
        if (label[static_cast<std::size_t>(seed)] >= 0) continue;
        label[static_cast<std::size_t>(seed)] = n_comp;
        stack.assign(1, seed);
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v)
                if (label[static_cast<std::size_t>(v)] < 0 && m.linked(u, v)) {
                    label[static_cast<std::size_t>(v)] = n_comp;
                    stack.push_back(v);
                }
        }
        ++n_comp;
    }
}

}  // namespace

ConnectivityTimeline build_timeline(const FormationTrack& track, double range,
                                    const std::set<int>& failed, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("timeline dt must be positive");
    const int n = track.node_count();
    const auto n_samples =
        static_cast<std::size_t>(std::lround(track.end_time() / dt)) + 1;

    ConnectivityTimeline tl;
    tl.dt_ = dt;
    tl.samples_.reserve(n_samples);
    tl.components_.resize(n_samples);
    tl.n_components_.resize(n_samples);

    for (std::size_t s = 0; s < n_samples; ++s) {
        const double t = dt * static_cast<double>(s);
        AdjacencyMatrix m(n, t);
        for (int u = 0; u < n; ++u) {
            if (failed.count(u)) continue;
            const Vec3 pu = track.position(u, t);
            for (int v = u + 1; v < n; ++v) {
                if (failed.count(v)) continue;
                if (distance(pu, track.position(v, t)) <= range) m.set_link(u, v, true);
            }
        }
        label_components(m, tl.components_[s], tl.n_components_[s]);
        tl.samples_.push_back(std::move(m));
    }

    for (std::size_t s = 1; s < n_samples; ++s) {
        const double t = dt * static_cast<double>(s);
        const AdjacencyMatrix& prev = tl.samples_[s - 1];
        const AdjacencyMatrix& cur = tl.samples_[s];
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (prev.linked(u, v) != cur.linked(u, v))
                    tl.events_.push_back({t, u, v, cur.linked(u, v)});
    }
    return tl;
}

}  // namespace fanet
