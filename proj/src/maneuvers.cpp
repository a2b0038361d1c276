#include "fanet/maneuvers.hpp"

#include <cmath>

namespace fanet {

Command maneuver_command(const ManeuverSegment& seg, double g) {
    const ManeuverParams& p = seg.params;
    switch (seg.kind) {
        case ManeuverKind::UniformRectilinear:
            return {{0, 0, 0}, {0, 0, 0}};
        case ManeuverKind::UniformAccel:
            return {{0, 0, 0}, {0, p.a, 0}};
        case ManeuverKind::CoordTurnBank:
            return {{0, p.gamma_rate, 0}, {0, 0, 0}};
        case ManeuverKind::CoordTurnHold:
            return {{0, 0, p.psi_rate}, {0, 0, g * std::tan(p.gamma_target)}};
        case ManeuverKind::CoordTurnLevel:
            return {{0, -p.gamma_rate, 0}, {0, 0, 0}};
        case ManeuverKind::ClimbEntry:
            return {{p.theta_rate, 0, 0}, {0, 0, p.theta_rate * p.theta_rate * p.r}};
        case ManeuverKind::ClimbHold:
            return {{0, 0, 0}, {0, 0, 0}};
        case ManeuverKind::ClimbExit:
            return {{-p.theta_rate, 0, 0}, {0, 0, -p.theta_rate * p.theta_rate * p.r}};
    }
    return {};  // unreachable
}

namespace {

// Effective command used by the integrator; see the header comment.
Command conditioned_command(const ManeuverSegment& seg, double g) {
    const ManeuverParams& p = seg.params;
    Command c = maneuver_command(seg, g);
    switch (seg.kind) {
        case ManeuverKind::CoordTurnHold:
            // Centripetal term along x_t (right of velocity), signed by bank.
            c.a_t = {g * std::tan(p.gamma_target), 0, 0};
            break;
        case ManeuverKind::ClimbEntry:
            c.a_t = {0, 0, p.theta_rate * std::fabs(p.theta_rate) * p.r};
            break;
        case ManeuverKind::ClimbExit:
            c.a_t = {0, 0, -p.theta_rate * std::fabs(p.theta_rate) * p.r};
            break;
        default:
            break;
    }
    return c;
}

constexpr double kBoundaryEps = 1e-9;

}  // namespace

Command command_at(const FlightPlan& plan, double t, double g) {
    if (t < -kBoundaryEps) throw OutOfPlanRange("time before plan start");
    double start = 0.0;
    for (const auto& seg : plan.segments) {
        const double end = start + seg.duration;
        if (t < end - kBoundaryEps) return maneuver_command(seg, g);
        start = end;
    }
    // Allow querying exactly at the final boundary.
    if (!plan.segments.empty() && t <= start + kBoundaryEps)
        return maneuver_command(plan.segments.back(), g);
    throw OutOfPlanRange("time beyond last segment");
}

std::vector<TrajectorySample> generate_trajectory(const FlightPlan& plan, const EarthModel& earth,
                                                  double dt, double t_end,
                                                  double export_interval) {
    if (dt <= 0.0 || export_interval <= 0.0) throw std::invalid_argument("nonpositive step");
    if (plan.total_duration() < t_end - kBoundaryEps)
        throw OutOfPlanRange("plan shorter than requested trajectory");

    std::vector<TrajectorySample> out;
    const long n_export = std::lround(t_end / export_interval);
    out.reserve(static_cast<std::size_t>(n_export) + 1);

    KinematicState s = plan.initial;
    const double t0 = s.t;

    std::size_t seg_idx = 0;
    double seg_elapsed = 0.0;  // time spent inside the current segment

    const long steps_per_export = std::lround(export_interval / dt);
    for (long i = 0; i <= n_export; ++i) {
        out.push_back({s.t - t0, s.att, s.v_n, s.pos});
        if (i == n_export) break;
        for (long k = 0; k < steps_per_export; ++k) {
            // Advance one dt, splitting at segment boundaries so each RK4
            // sub-step sees a single constant command.
            double remaining = dt;
            while (remaining > kBoundaryEps) {
                while (seg_idx < plan.segments.size() &&
                       seg_elapsed >= plan.segments[seg_idx].duration - kBoundaryEps) {
                    seg_elapsed = 0.0;
                    ++seg_idx;
                }
                ManeuverSegment seg;
                double room;
                if (seg_idx < plan.segments.size()) {
                    seg = plan.segments[seg_idx];
                    room = seg.duration - seg_elapsed;
                } else {
                    // Past the declared plan (possible only within the final
                    // boundary epsilon); hold the last command.
                    seg = plan.segments.back();
                    room = remaining;
                }
                const double step = std::min(remaining, room);
                const Command c = conditioned_command(seg, earth.g);
                s = rk4_step(s, c.omega_b, c.a_t, earth, step);
                seg_elapsed += step;
                remaining -= step;
            }
        }
    }
    return out;
}

}  // namespace fanet
