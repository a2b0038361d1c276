#include "fanet/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fanet {

namespace {

// k x k rotated-grid lattice in the horizontal body plane: row-major over
// (u, v), centered, rotated 45 degrees so the hull is a diamond.
std::vector<Vec3> diamond_offsets(int k, double spacing) {
    std::vector<Vec3> offs;
    offs.reserve(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
    const double half = (k - 1) / 2.0;
    const double s = spacing / std::sqrt(2.0);
    for (int u = 0; u < k; ++u)
        for (int v = 0; v < k; ++v) {
            const double uu = u - half, vv = v - half;
            offs.push_back({(uu - vv) * s, (uu + vv) * s, 0.0});
        }
    return offs;
}

KinematicState initial_state(const ScenarioParams& p, double along_track_offset,
                             const EarthModel& earth) {
    KinematicState s;
    s.v_n = {0.0, p.speed, 0.0};
    const auto [R_N, R_M] = radii_of_curvature(p.anchor_beta, earth);
    (void)R_N;
    s.pos = {p.anchor_beta + along_track_offset / (R_M + p.anchor_h), p.anchor_lambda,
             p.anchor_h};
    return s;
}

// Climb (sign=+1) or descend (sign=-1) leg followed by its mirror, embedded
// in straight flight. Entry and exit are symmetric; no hold at the top.
FlightPlan climb_plan(const ScenarioParams& p, double out_start, double back_start, double sign,
                      double y_offset, const EarthModel& earth, double horizon) {
    const double q = p.climb_pitch_rate;
    const double dur_e = p.climb_pitch / q;
    const double r = p.speed / q;
    FlightPlan plan;
    plan.initial = initial_state(p, y_offset, earth);
    auto leg = [&](double s) {
        plan.segments.push_back(
            {ManeuverKind::ClimbEntry, dur_e, {.theta_rate = s * q, .r = r}});
        plan.segments.push_back(
            {ManeuverKind::ClimbExit, dur_e, {.theta_rate = s * q, .r = r}});
    };
    if (back_start < out_start + 2.0 * dur_e)
        throw std::invalid_argument("climb return leg starts before outbound leg ends");
    plan.segments.push_back({ManeuverKind::UniformRectilinear, out_start, {}});
    leg(sign);
    plan.segments.push_back(
        {ManeuverKind::UniformRectilinear, back_start - (out_start + 2.0 * dur_e), {}});
    leg(-sign);
    plan.segments.push_back({ManeuverKind::UniformRectilinear, horizon, {}});
    return plan;
}

// Outward dogleg (sign=-1 turns left first) followed by its mirror inward.
FlightPlan turn_plan(const ScenarioParams& p, double out_start, double back_start, double sign,
                     double y_offset, const EarthModel& earth, double horizon) {
    const double psi_rate = earth.g * std::tan(p.turn_bank) / p.speed;
    const double arc = p.turn_heading / psi_rate;
    const double bank_dur = p.turn_bank / p.bank_rate;
    FlightPlan plan;
    plan.initial = initial_state(p, y_offset, earth);
    auto dogleg = [&](double s) {
        plan.segments.push_back(
            {ManeuverKind::CoordTurnBank, bank_dur, {.gamma_rate = s * p.bank_rate}});
        plan.segments.push_back({ManeuverKind::CoordTurnHold, arc,
                                 {.psi_rate = s * psi_rate, .gamma_target = s * p.turn_bank}});
        plan.segments.push_back(
            {ManeuverKind::CoordTurnLevel, bank_dur, {.gamma_rate = s * p.bank_rate}});
        if (p.dogleg_straight > 0.0)
            plan.segments.push_back({ManeuverKind::UniformRectilinear, p.dogleg_straight, {}});
        plan.segments.push_back(
            {ManeuverKind::CoordTurnBank, bank_dur, {.gamma_rate = -s * p.bank_rate}});
        plan.segments.push_back({ManeuverKind::CoordTurnHold, arc,
                                 {.psi_rate = -s * psi_rate, .gamma_target = -s * p.turn_bank}});
        plan.segments.push_back(
            {ManeuverKind::CoordTurnLevel, bank_dur, {.gamma_rate = -s * p.bank_rate}});
    };
    const double dogleg_len = 2.0 * arc + 4.0 * bank_dur + p.dogleg_straight;
    if (back_start < out_start + dogleg_len)
        throw std::invalid_argument("dogleg return leg starts before outbound leg ends");
    plan.segments.push_back({ManeuverKind::UniformRectilinear, out_start, {}});
    dogleg(sign);
    plan.segments.push_back(
        {ManeuverKind::UniformRectilinear, back_start - (out_start + dogleg_len), {}});
    dogleg(-sign);
    plan.segments.push_back({ManeuverKind::UniformRectilinear, horizon, {}});
    return plan;
}

}  // namespace

int FormationSpec::group_of(int node) const {
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int id : groups[g].node_ids)
            if (id == node) return static_cast<int>(g);
    throw UnknownNode("node " + std::to_string(node));
}

std::vector<int> FormationSpec::central_nodes() const {
    std::vector<int> out;
    for (const auto& g : groups) {
        const std::size_t center = (g.member_offsets.size() - 1) / 2;
        out.push_back(g.node_ids[center]);
    }
    return out;
}

FormationSpec build_scenario(int n_nodes, const ScenarioPhases& phases,
                             const ScenarioParams& params) {
    if (n_nodes <= 0 || n_nodes % 4 != 0)
        throw BadNodeCount("node count must be 4*k^2, got " + std::to_string(n_nodes));
    const int per_group = n_nodes / 4;
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(per_group))));
    if (k * k != per_group)
        throw BadNodeCount("node count must be 4*k^2, got " + std::to_string(n_nodes));

    const EarthModel earth;  // scenario geometry uses the default earth
    const ScenarioParams& p = params;

    // Offsets scale with the lattice support radius so that links break and
    // reform inside the same phase windows for every k.
    const double support = (k - 1) * p.spacing / std::sqrt(2.0);
    const double support_k3 = 2.0 * p.spacing / std::sqrt(2.0);
    const double extra = support - support_k3;
    const double front = p.front_offset_k3 + p.front_growth * extra;
    const double side = p.side_offset_k3 + extra;

    const double horizon = phases.sim_end() + 10.0;

    FormationSpec spec;
    spec.phases = phases;
    spec.params = params;
    spec.node_count = n_nodes;

    struct GroupInit {
        FlightPlan plan;
        double side_x;
    };
    const GroupInit inits[4] = {
        // A: front, climbs over the top.
        {climb_plan(p, p.climb_start, p.descend_back_start_a, +1.0, +front, earth, horizon), 0.0},
        // B: back, dives under.
        {climb_plan(p, p.climb_start, p.descend_back_start_b, -1.0, -front, earth, horizon), 0.0},
        // C: slightly ahead of the midpoint, swings left.
        {turn_plan(p, p.turn_start, p.turn_back_start, -1.0, p.lead_offset, earth, horizon),
         -side},
        // D: mirror of C to the right.
        {turn_plan(p, p.turn_start, p.turn_back_start, +1.0, p.lead_offset, earth, horizon),
         +side},
    };

    int next_id = 0;
    for (const auto& gi : inits) {
        GroupSpec g;
        g.leader_plan = gi.plan;
        // Shift the whole lattice sideways by baking the group's lateral slot
        // into the member offsets' x at psi=0... offsets must stay rigid in
        // the body frame, so instead shift the leader's initial longitude.
        g.member_offsets = diamond_offsets(k, p.spacing);
        const auto [R_N, R_M] = radii_of_curvature(p.anchor_beta, earth);
        (void)R_M;
        g.leader_plan.initial.pos.lambda +=
            gi.side_x / ((R_N + p.anchor_h) * std::cos(p.anchor_beta));
        for (int i = 0; i < per_group; ++i) g.node_ids.push_back(next_id++);
        spec.groups.push_back(std::move(g));
    }
    return spec;
}

FormationTrack::FormationTrack(const FormationSpec& spec, const EarthModel& earth, double dt,
                               double export_interval) {
    n_ = spec.node_count;
    interval_ = export_interval;
    const double t_end = spec.phases.sim_end();
    const auto& p = spec.params;

    const auto [R_N, R_M] = radii_of_curvature(p.anchor_beta, earth);
    const double x_scale = (R_N + p.anchor_h) * std::cos(p.anchor_beta);
    const double y_scale = R_M + p.anchor_h;

    std::vector<std::vector<TrajectorySample>> leader_traj;
    for (const auto& g : spec.groups)
        leader_traj.push_back(generate_trajectory(g.leader_plan, earth, dt, t_end,
                                                  export_interval));

    const std::size_t n_samples = leader_traj[0].size();
    positions_.assign(n_samples, std::vector<Vec3>(static_cast<std::size_t>(n_)));
    attitudes_.assign(n_samples, std::vector<Attitude>(spec.groups.size()));
    group_of_node_.assign(static_cast<std::size_t>(n_), 0);

    for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
        const auto& g = spec.groups[gi];
        for (std::size_t s = 0; s < n_samples; ++s) {
            const TrajectorySample& ls = leader_traj[gi][s];
            const Vec3 leader_enu{(ls.pos.lambda - p.anchor_lambda) * x_scale,
                                  (ls.pos.beta - p.anchor_beta) * y_scale,
                                  ls.pos.h - p.anchor_h};
            const Mat3 rot = rotation_t_to_n(ls.att);
            attitudes_[s][gi] = ls.att;
            for (std::size_t mi = 0; mi < g.member_offsets.size(); ++mi) {
                const int node = g.node_ids[mi];
                positions_[s][static_cast<std::size_t>(node)] =
                    leader_enu + rot * g.member_offsets[mi];
                group_of_node_[static_cast<std::size_t>(node)] = static_cast<int>(gi);
            }
        }
    }
}

FormationTrack FormationTrack::from_static_positions(const std::vector<Vec3>& positions,
                                                     double sim_end, double export_interval) {
    FormationTrack t;
    t.n_ = static_cast<int>(positions.size());
    t.interval_ = export_interval;
    const auto n_samples =
        static_cast<std::size_t>(std::lround(sim_end / export_interval)) + 1;
    t.positions_.assign(n_samples, positions);
    t.attitudes_.assign(n_samples, std::vector<Attitude>(1));
    t.group_of_node_.assign(positions.size(), 0);
    return t;
}

FormationTrack FormationTrack::from_samples(std::vector<std::vector<Vec3>> samples,
                                            double export_interval) {
    FormationTrack t;
    t.n_ = samples.empty() ? 0 : static_cast<int>(samples[0].size());
    t.interval_ = export_interval;
    t.positions_ = std::move(samples);
    t.attitudes_.assign(t.positions_.size(), std::vector<Attitude>(1));
    t.group_of_node_.assign(static_cast<std::size_t>(t.n_), 0);
    return t;
}

std::size_t FormationTrack::sample_index(double t) const {
    if (t <= 0.0) return 0;
    auto idx = static_cast<std::size_t>(t / interval_ + 1e-9);
    return std::min(idx, positions_.size() - 1);
}

Vec3 FormationTrack::position(int node, double t) const {
    const std::size_t i = sample_index(t);
    if (i + 1 >= positions_.size()) return position_at(positions_.size() - 1, node);
    const double t0 = static_cast<double>(i) * interval_;
    const double frac = std::clamp((t - t0) / interval_, 0.0, 1.0);
    const Vec3& a = position_at(i, node);
    const Vec3& b = position_at(i + 1, node);
    return a + (b - a) * frac;
}

NodePosition position_of(const FormationSpec& spec, const FormationTrack& track, int node,
                         double t, const EarthModel& earth) {
    if (node < 0 || node >= track.node_count())
        throw UnknownNode("node " + std::to_string(node));
    const auto& p = spec.params;
    const Vec3 enu = track.position(node, t);
    const auto [R_N, R_M] = radii_of_curvature(p.anchor_beta, earth);
    NodePosition out;
    out.enu = enu;
    out.geo = {p.anchor_beta + enu.y / (R_M + p.anchor_h),
               p.anchor_lambda + enu.x / ((R_N + p.anchor_h) * std::cos(p.anchor_beta)),
               p.anchor_h + enu.z};
    return out;
}

}  // namespace fanet
