#pragma once

// Coordinate-frame math and RK4 integration of the vehicle kinematic state.
//
// Frames: t-frame (trajectory frame: x right of velocity, y along velocity,
// z up), n-frame (east/north/up navigation frame), geodetic position
// (latitude beta, longitude lambda, altitude h). The course angle psi is
// measured clockwise from north; theta is pitch; gamma is roll.

#include <stdexcept>

#include "fanet/geometry.hpp"

namespace fanet {

struct Attitude {
    double psi = 0.0;    // course angle, rad, [0, 2*pi)
    double theta = 0.0;  // pitch angle, rad, (-pi/2, pi/2)
    double gamma = 0.0;  // roll angle, rad, (-pi, pi]
};

struct GeoPosition {
    double beta = 0.0;    // latitude, rad
    double lambda = 0.0;  // longitude, rad
    double h = 0.0;       // altitude, m
};

struct KinematicState {
    Attitude att;
    Vec3 v_n;  // velocity in n-frame: x east, y north, z up (m/s)
    GeoPosition pos;
    double t = 0.0;  // simulation time, s
};

struct EarthModel {
    double R_e = 6378137.0;      // equatorial radius, m
    double e = 1.0 / 298.257;    // oblateness
    double g = 9.80665;          // gravitational acceleration, m/s^2
    bool standard_radii = false; // textbook sin^2(beta) curvature forms
};

struct CurvatureRadii {
    double R_N = 0.0;  // prime-vertical radius of curvature, m
    double R_M = 0.0;  // meridian radius of curvature, m
};

struct PolarSingularity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rotation from the t-frame to the n-frame; depends on course and pitch only.
Mat3 rotation_t_to_n(const Attitude& att);

// a_n = rotation_t_to_n(att) * a_t
Vec3 accel_t_to_n(const Attitude& att, const Vec3& a_t);

// Curvature radii. Default form uses sin(2*beta) factors; the model's
// standard_radii flag switches to the conventional sin^2(beta) forms.
CurvatureRadii radii_of_curvature(double beta, const EarthModel& earth);

struct StateDerivative {
    Vec3 att_dot;  // d/dt (theta, gamma, psi)
    Vec3 v_dot;    // d/dt v_n
    Vec3 pos_dot;  // d/dt (beta, lambda, h)
};

// Kinematic ODE right-hand side. Throws PolarSingularity when |cos(beta)|
// is below 1e-9 (longitude rate undefined near the poles).
StateDerivative state_derivative(const KinematicState& s, const Vec3& omega_b, const Vec3& a_t,
                                 const EarthModel& earth);

// Classic four-stage RK4 update over all seven state components; advances t
// by dt and wraps psi into [0, 2*pi).
KinematicState rk4_step(const KinematicState& s, const Vec3& omega_b, const Vec3& a_t,
                        const EarthModel& earth, double dt);

// Normalize an angle into [0, 2*pi).
double wrap_2pi(double a);

}  // namespace fanet
