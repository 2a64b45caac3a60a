#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qbrachy/scaled_state.hpp"
#include "qbrachy/trajectory.hpp"

namespace qbrachy {

// Polar coordinates (u, phi_u) on the unit disc parametrizing the unknown
// initial pulse moduli: u1(0) = u cos(phi_u), u2(0) = u sin(phi_u).
struct InitialPoint {
    double u = 0.0;
    double phi_u = 0.0;

    bool in_domain() const {
        return u >= 0.0 && u <= 1.0 && phi_u >= 0.0 && phi_u <= 2.0 * std::numbers::pi;
    }
};

// Coupled first-order system for the pulse and costate moduli.
inline std::array<double, 6> rhs_costate(const ScaledState& s) {
    if (!s.is_finite()) throw std::domain_error("rhs_costate: non-finite state");
    return {
        -s.u2 * s.w_gwp,
        s.u1 * s.w_gwp - s.u3 * s.w_wr,
        s.u2 * s.w_wr,
        -s.u1 * s.w_gr,
        s.u1 * s.w_wr - s.u3 * s.w_gwp,
        s.u3 * s.w_gr,
    };
}

// Reduced Schroedinger equation for the state-component moduli.
inline std::array<double, 4> rhs_state(const ScaledState& s) {
    if (!s.is_finite()) throw std::domain_error("rhs_state: non-finite state");
    return {
        s.u1 * s.psi_w,
        -s.u1 * s.psi_g - s.u2 * s.psi_wp,
        s.u2 * s.psi_w - s.u3 * s.psi_r,
        s.u3 * s.psi_wp,
    };
}

// Combined right-hand side used by the integrators. Inlined rather than
// stitched from the two public pieces to keep the hot loop branch-free.
inline ScaledState rhs(const ScaledState& s) {
    return {
        -s.u2 * s.w_gwp,
        s.u1 * s.w_gwp - s.u3 * s.w_wr,
        s.u2 * s.w_wr,
        -s.u1 * s.w_gr,
        s.u1 * s.w_wr - s.u3 * s.w_gwp,
        s.u3 * s.w_gr,
        s.u1 * s.psi_w,
        -s.u1 * s.psi_g - s.u2 * s.psi_wp,
        s.u2 * s.psi_w - s.u3 * s.psi_r,
        s.u3 * s.psi_wp,
    };
}

// Initial conditions of the scaled system: costate modulus w_Wr starts at 1
// (it sets the scale), u3 and the remaining costates start at 0, and the
// state starts in |W>.
inline ScaledState initial_state(const InitialPoint& x0) {
    if (!x0.in_domain())
        throw std::domain_error("initial_state: (u, phi_u) outside [0,1] x [0,2pi]");
    ScaledState s;
    s.u1 = x0.u * std::cos(x0.phi_u);
    s.u2 = x0.u * std::sin(x0.phi_u);
    s.u3 = 0.0;
    s.w_wr = 1.0;
    s.w_gr = 0.0;
    s.w_gwp = 0.0;
    s.psi_g = 0.0;
    s.psi_w = 1.0;
    s.psi_wp = 0.0;
    s.psi_r = 0.0;
    return s;
}

namespace detail {

inline ScaledState rk4_step(const ScaledState& y, double h) {
    const ScaledState k1 = rhs(y);
    const ScaledState k2 = rhs(y + (0.5 * h) * k1);
    const ScaledState k3 = rhs(y + (0.5 * h) * k2);
    const ScaledState k4 = rhs(y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

// Classical fixed-step RK4 over the given grid (uniform or not).
inline Trajectory integrate(const InitialPoint& x0, const XiGrid& grid) {
    if (!grid.is_valid()) throw std::domain_error("integrate: invalid grid");
    Trajectory traj;
    traj.grid = grid;
    traj.states.reserve(grid.values.size());
    traj.derivs.reserve(grid.values.size());

    ScaledState y = initial_state(x0);
    traj.states.push_back(y);
    traj.derivs.push_back(rhs(y));
    for (std::size_t i = 1; i < grid.values.size(); ++i) {
        y = detail::rk4_step(y, grid.values[i] - grid.values[i - 1]);
        traj.states.push_back(y);
        traj.derivs.push_back(rhs(y));
    }
    return traj;
}

struct IntegrationError : std::runtime_error {
    double xi;
    explicit IntegrationError(double xi_fail)
        : std::runtime_error("adaptive integration stalled at xi = " + std::to_string(xi_fail)),
          xi(xi_fail) {}
};

// Optional adaptive mode: embedded Dormand-Prince 5(4) pair with PI-free
// elementary step control. Node placement follows the accepted steps.
inline Trajectory integrate_adaptive(const InitialPoint& x0, double xi_max,
                                     double rtol = 1e-10, double atol = 1e-10) {
    if (!(xi_max > 0.0)) throw std::domain_error("integrate_adaptive: xi_max must be > 0");

    // Dormand-Prince coefficients (stage times drop out: the system is
    // autonomous).
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    Trajectory traj;
    traj.grid.xi_max = xi_max;

    ScaledState y = initial_state(x0);
    double xi = 0.0;
    double h = std::min(1e-3, xi_max);
    const double h_min = xi_max * 1e-14;

    traj.grid.values.push_back(0.0);
    traj.states.push_back(y);
    ScaledState k1 = rhs(y);
    traj.derivs.push_back(k1);

    int rejections_in_a_row = 0;
    while (xi < xi_max) {
        h = std::min(h, xi_max - xi);
        const ScaledState k2 = rhs(y + (h * a21) * k1);
        const ScaledState k3 = rhs(y + (h * a31) * k1 + (h * a32) * k2);
        const ScaledState k4 = rhs(y + (h * a41) * k1 + (h * a42) * k2 + (h * a43) * k3);
        const ScaledState k5 =
            rhs(y + (h * a51) * k1 + (h * a52) * k2 + (h * a53) * k3 + (h * a54) * k4);
        const ScaledState k6 = rhs(y + (h * a61) * k1 + (h * a62) * k2 + (h * a63) * k3 +
                                   (h * a64) * k4 + (h * a65) * k5);
        const ScaledState y_new =
            y + (h * b1) * k1 + (h * b3) * k3 + (h * b4) * k4 + (h * b5) * k5 + (h * b6) * k6;
        const ScaledState k7 = rhs(y_new);
        const ScaledState err_vec = (h * e1) * k1 + (h * e3) * k3 + (h * e4) * k4 +
                                    (h * e5) * k5 + (h * e6) * k6 + (h * e7) * k7;

        // Scaled max-norm error estimate.
        double err = 0.0;
        {
            const auto ev = err_vec.as_array();
            const auto yv = y.as_array();
            const auto nv = y_new.as_array();
            for (std::size_t i = 0; i < ev.size(); ++i) {
                const double sc = atol + rtol * std::max(std::abs(yv[i]), std::abs(nv[i]));
                err = std::max(err, std::abs(ev[i]) / sc);
            }
        }

        if (err <= 1.0) {
            xi += h;
            y = y_new;
            k1 = k7;  // FSAL
            traj.grid.values.push_back(xi);
            traj.states.push_back(y);
            traj.derivs.push_back(k1);
            rejections_in_a_row = 0;
            const double grow = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
            h *= std::clamp(grow, 0.2, 5.0);
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (h < h_min || ++rejections_in_a_row > 50) throw IntegrationError(xi);
        }
    }
    traj.grid.values.back() = xi_max;
    return traj;
}

}  // namespace qbrachy
