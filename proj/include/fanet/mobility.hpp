#pragma once

// Builds the five-phase, four-group formation scenario: one group climbs,
// one descends, two dogleg outward left/right, then all return, so the fleet
// goes cohesive -> diverging -> separated -> rendezvous -> cohesive. Each
// node is a rigid body-frame offset within its group's (virtual) leader
// trajectory; groups are k x k rotated-grid lattices.

#include <array>
#include <set>
#include <stdexcept>
#include <vector>

#include "fanet/maneuvers.hpp"

namespace fanet {

struct BadNodeCount : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownNode : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioPhases {
    // Six boundaries delimit the five mission phases.
    std::array<double, 6> boundaries{0.0, 30.1, 37.7, 60.1, 62.8, 100.0};

    double sim_end() const { return boundaries.back(); }

    // 1-based phase index for a time in [0, sim_end].
    int phase_of(double t) const {
        for (int p = 1; p <= 4; ++p)
            if (t < boundaries[static_cast<std::size_t>(p)]) return p;
        return 5;
    }
};

// Geometry and timing knobs of the scripted scenario. Defaults are
// calibrated so that, for k in {3,5,7}, every inter-group link drops inside
// phase 2, stays down through phase 3, and is restored inside phase 4.
struct ScenarioParams {
    double speed = 250.0;          // leader speed, m/s
    double spacing = 300.0;        // lattice spacing inside a group, m
    double anchor_beta = 0.6;      // rad
    double anchor_lambda = 0.1;    // rad
    double anchor_h = 5000.0;      // m
    // Climb/descend legs (groups A and B).
    double climb_pitch_rate = 0.08;                 // rad/s
    double climb_pitch = 35.0 * M_PI / 180.0;       // rad
    double climb_start = 28.0;                      // s (both A and B)
    double descend_back_start_a = 52.0;             // s, A's return leg
    double descend_back_start_b = 49.0;             // s, B's return leg
    // Dogleg legs (groups C and D).
    double turn_bank = 60.0 * M_PI / 180.0;         // rad
    double turn_heading = 35.0 * M_PI / 180.0;      // rad deflection
    double bank_rate = 45.0 * M_PI / 180.0;         // rad/s
    double dogleg_straight = 0.0;                   // s between the two arcs
    double turn_start = 23.2;                       // s
    double turn_back_start = 49.2;                  // s
    // Formation footprint: A at +front_offset, B at -front_offset on the
    // track axis; C/D at -/+ side_offset laterally and lead_offset ahead.
    // Defaults are for k=3 and are rescaled with the lattice support radius.
    double front_offset_k3 = 4135.0;  // m
    double side_offset_k3 = 1500.0;   // m
    double lead_offset = 195.0;       // m (C/D ahead of the A/B midpoint)
    double front_growth = 1.45;       // per metre of extra lattice support
};

struct GroupSpec {
    FlightPlan leader_plan;
    std::vector<Vec3> member_offsets;  // body-frame, m
    std::vector<int> node_ids;
};

struct FormationSpec {
    std::vector<GroupSpec> groups;
    ScenarioPhases phases;
    ScenarioParams params;
    int node_count = 0;

    int group_of(int node) const;
    // Index of the node at the lattice center (offset [0,0,0]) of each
    // group; these fail under the central-node-failure condition.
    std::vector<int> central_nodes() const;
};

// Four equal groups of k*k nodes; n_nodes must be 4*k^2.
FormationSpec build_scenario(int n_nodes, const ScenarioPhases& phases = {},
                             const ScenarioParams& params = {});

// Sampled trajectories for every node, on the export grid, in a local
// east/north/up frame anchored at the scenario anchor point. Positions of
// members are leader position plus the attitude-rotated rigid offset.
class FormationTrack {
  public:
    // Integrate all leader plans and assemble node tracks.
    FormationTrack(const FormationSpec& spec, const EarthModel& earth, double dt = 0.01,
                   double export_interval = 0.1);

    // Static topology helper for protocol/netsim unit tests: every node
    // fixed at the given position for the whole horizon.
    static FormationTrack from_static_positions(const std::vector<Vec3>& positions,
                                                double sim_end = 100.0,
                                                double export_interval = 0.1);
    // Arbitrary per-sample positions: samples[i][node].
    static FormationTrack from_samples(std::vector<std::vector<Vec3>> samples,
                                       double export_interval);

    int node_count() const { return n_; }
    double sample_interval() const { return interval_; }
    std::size_t sample_count() const { return positions_.size(); }
    double end_time() const { return interval_ * static_cast<double>(sample_count() - 1); }

    // Position at an exact sample index.
    const Vec3& position_at(std::size_t sample, int node) const {
        return positions_[sample][static_cast<std::size_t>(node)];
    }
    // Linearly interpolated position at arbitrary t (clamped to the span).
    Vec3 position(int node, double t) const;

    std::size_t sample_index(double t) const;  // floor to grid, clamped

    // Leader attitude shared by the node's whole group (for CSV export).
    const Attitude& attitude_at(std::size_t sample, int node) const {
        return attitudes_[sample][static_cast<std::size_t>(group_of_node_[static_cast<std::size_t>(node)])];
    }

  private:
    FormationTrack() = default;
    int n_ = 0;
    double interval_ = 0.1;
    std::vector<std::vector<Vec3>> positions_;   // [sample][node] ENU
    std::vector<std::vector<Attitude>> attitudes_;  // [sample][group]
    std::vector<int> group_of_node_;
};

// Position of one node at time t: ENU vector plus geodetic coordinates
// recovered through the anchor's linear map.
struct NodePosition {
    Vec3 enu;
    GeoPosition geo;
};
NodePosition position_of(const FormationSpec& spec, const FormationTrack& track, int node,
                         double t, const EarthModel& earth);

}  // namespace fanet
