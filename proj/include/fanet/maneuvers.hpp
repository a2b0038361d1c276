#pragma once

// The eight maneuver primitives as time-parameterized (omega_b, a_t) command
// generators, composable into per-node flight plans, plus the RK4 trajectory
// generator that integrates a plan into sampled state history.

#include <stdexcept>
#include <vector>

#include "fanet/kinematics.hpp"

namespace fanet {

enum class ManeuverKind {
    UniformRectilinear,
    UniformAccel,
    CoordTurnBank,   // roll in/out while flying straight
    CoordTurnHold,   // constant-rate heading change at held bank
    CoordTurnLevel,  // roll back to wings level
    ClimbEntry,      // pitch up/down onto the climb circle
    ClimbHold,       // constant-angle climb
    ClimbExit,       // pitch back to level
};

struct ManeuverParams {
    double a = 0.0;            // along-track acceleration, m/s^2
    double gamma_rate = 0.0;   // roll rate, rad/s
    double psi_rate = 0.0;     // heading rate, rad/s (signed; <0 turns left)
    double theta_rate = 0.0;   // pitch rate, rad/s (signed; <0 descends)
    double r = 0.0;            // climb circle radius, m
    double gamma_target = 0.0; // held bank angle during a turn, rad (signed)
    double theta_target = 0.0; // held pitch angle during a climb, rad
};

struct ManeuverSegment {
    ManeuverKind kind = ManeuverKind::UniformRectilinear;
    double duration = 0.0;  // s, > 0
    ManeuverParams params;
};

struct FlightPlan {
    std::vector<ManeuverSegment> segments;  // contiguous in time from initial.t
    KinematicState initial;

    double total_duration() const {
        double d = 0.0;
        for (const auto& s : segments) d += s.duration;
        return d;
    }
};

struct Command {
    Vec3 omega_b;  // (theta_dot, gamma_dot, psi_dot)
    Vec3 a_t;      // acceleration in the t-frame
};

struct OutOfPlanRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The literal command table for each maneuver kind.
Command maneuver_command(const ManeuverSegment& seg, double g);

// Command of the segment active at time t (seconds since plan start).
// Throws OutOfPlanRange when t is outside [0, total_duration].
Command command_at(const FlightPlan& plan, double t, double g = 9.80665);

struct TrajectorySample {
    double t = 0.0;
    Attitude att;
    Vec3 v_n;
    GeoPosition pos;
};

// Integrates the plan with RK4 at step dt, splitting steps exactly at
// segment boundaries (segment durations need not be multiples of dt), and
// returns samples every export_interval from t=0 to t_end inclusive.
//
// For integration, two command kinds are conditioned into their dynamically
// consistent form (the tabulated command is a magnitude recipe; the
// integrator needs the centripetal vector on the correct axis):
//   - CoordTurnHold: the g*tan(gamma) centripetal term acts along x_t
//     (right of velocity), signed by the held bank angle.
//   - ClimbEntry/ClimbExit: the vertical-circle centripetal term is signed
//     with the pitch rate (a_z = +/- theta_rate*|theta_rate|*r), so descents
//     curve downward.
std::vector<TrajectorySample> generate_trajectory(const FlightPlan& plan, const EarthModel& earth,
                                                  double dt, double t_end,
                                                  double export_interval = 0.1);

}  // namespace fanet
