#include "fanet/kinematics.hpp"

#include <cmath>

namespace fanet {

double wrap_2pi(double a) {
    constexpr double two_pi = 2.0 * M_PI;
    double w = std::fmod(a, two_pi);
    if (w < 0.0) w += two_pi;
    return w;
}

Mat3 rotation_t_to_n(const Attitude& att) {
    const double cp = std::cos(att.psi), sp = std::sin(att.psi);
    const double ct = std::cos(att.theta), st = std::sin(att.theta);
    Mat3 r;
    r.m = {{{cp, ct * sp, -st * sp},
            {-sp, ct * cp, -st * cp},
            {0.0, st, ct}}};
    return r;
}

Vec3 accel_t_to_n(const Attitude& att, const Vec3& a_t) {
    return rotation_t_to_n(att) * a_t;
}

CurvatureRadii radii_of_curvature(double beta, const EarthModel& earth) {
    if (earth.standard_radii) {
        // Conventional ellipsoidal approximations to first order in e.
        const double s2 = std::sin(beta) * std::sin(beta);
        return {earth.R_e * (1.0 + earth.e * s2),
                earth.R_e * (1.0 - 2.0 * earth.e + 3.0 * earth.e * s2)};
    }
    const double s2b = std::sin(2.0 * beta);
    return {earth.R_e * (1.0 - 2.0 * earth.e + 3.0 * earth.e * s2b),
            earth.R_e * (1.0 + earth.e * s2b)};
}

StateDerivative state_derivative(const KinematicState& s, const Vec3& omega_b, const Vec3& a_t,
                                 const EarthModel& earth) {
    const double cb = std::cos(s.pos.beta);
    if (std::fabs(cb) <= 1e-9)
        throw PolarSingularity("latitude too close to a pole for longitude rate");
    const auto [R_N, R_M] = radii_of_curvature(s.pos.beta, earth);
    const double L = s.pos.h;  // altitude term in the curvature denominators
    StateDerivative d;
    d.att_dot = omega_b;  // (theta_dot, gamma_dot, psi_dot)
    d.v_dot = accel_t_to_n(s.att, a_t);
    d.pos_dot = {s.v_n.y / (R_M + L),         // beta_dot from north velocity
                 s.v_n.x / (cb * (R_N + L)),  // lambda_dot from east velocity
                 s.v_n.z};                    // h_dot from vertical velocity
    return d;
}

namespace {

// Flat array view of the integratable state: (theta, gamma, psi, vE, vN, vU,
// beta, lambda, h).
struct Flat {
    double q[9];
};

Flat to_flat(const KinematicState& s) {
    return {{s.att.theta, s.att.gamma, s.att.psi, s.v_n.x, s.v_n.y, s.v_n.z, s.pos.beta,
             s.pos.lambda, s.pos.h}};
}

KinematicState from_flat(const Flat& f, double t) {
    KinematicState s;
    s.att = {f.q[2], f.q[0], f.q[1]};
    s.v_n = {f.q[3], f.q[4], f.q[5]};
    s.pos = {f.q[6], f.q[7], f.q[8]};
    s.t = t;
    return s;
}

Flat deriv_flat(const Flat& f, double t, const Vec3& omega_b, const Vec3& a_t,
                const EarthModel& earth) {
    const StateDerivative d = state_derivative(from_flat(f, t), omega_b, a_t, earth);
    return {{d.att_dot.x, d.att_dot.y, d.att_dot.z, d.v_dot.x, d.v_dot.y, d.v_dot.z, d.pos_dot.x,
             d.pos_dot.y, d.pos_dot.z}};
}

}  // namespace

KinematicState rk4_step(const KinematicState& s, const Vec3& omega_b, const Vec3& a_t,
                        const EarthModel& earth, double dt) {
    const Flat y0 = to_flat(s);
    const Flat k1 = deriv_flat(y0, s.t, omega_b, a_t, earth);
    Flat y1, y2, y3;
    for (int i = 0; i < 9; ++i) y1.q[i] = y0.q[i] + 0.5 * dt * k1.q[i];
    const Flat k2 = deriv_flat(y1, s.t + 0.5 * dt, omega_b, a_t, earth);
    for (int i = 0; i < 9; ++i) y2.q[i] = y0.q[i] + 0.5 * dt * k2.q[i];
    const Flat k3 = deriv_flat(y2, s.t + 0.5 * dt, omega_b, a_t, earth);
    for (int i = 0; i < 9; ++i) y3.q[i] = y0.q[i] + dt * k3.q[i];
    const Flat k4 = deriv_flat(y3, s.t + dt, omega_b, a_t, earth);
    Flat out;
    for (int i = 0; i < 9; ++i)
        out.q[i] = y0.q[i] + dt / 6.0 * (k1.q[i] + 2.0 * k2.q[i] + 2.0 * k3.q[i] + k4.q[i]);
    KinematicState next = from_flat(out, s.t + dt);
    next.att.psi = wrap_2pi(next.att.psi);
    return next;
}

}  // namespace fanet
