#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "qbrachy/dynamics.hpp"
#include "qbrachy/io.hpp"
#include "qbrachy/trajectory.hpp"

namespace qbrachy {

// Reduce an angle to (-pi, pi].
inline double wrap_phase(double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(phi, two_pi);
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

// All constant phases of the problem. phi1, phi3 are free pulse phases,
// varphi is the target GHZ phase and phi_w the free state phase; everything
// else follows from the constraints that keep the moduli equations real.
// Values are kept unreduced; reduced() wraps them for reporting.
struct PhaseSet {
    // free
    double phi1 = 0.0;
    double phi3 = 0.0;
    double varphi = 0.0;
    double phi_w = 0.0;
    // constrained pulse/costate phases
    double phi2 = 0.0;
    double phi_wr = 0.0;
    double phi_gr = 0.0;
    double phi_gwp = 0.0;
    // constrained state-component phases
    double phi_g = 0.0;
    double phi_wp = 0.0;
    double phi_r = 0.0;

    std::array<double, 3> pulse_phases() const { return {phi1, phi2, phi3}; }

    PhaseSet reduced() const {
        PhaseSet p = *this;
        for (double* v : {&p.phi1, &p.phi3, &p.varphi, &p.phi_w, &p.phi2, &p.phi_wr, &p.phi_gr,
                          &p.phi_gwp, &p.phi_g, &p.phi_wp, &p.phi_r})
            *v = wrap_phase(*v);
        return p;
    }
};

inline PhaseSet derive_phases(double phi1, double phi3, double varphi, double phi_w = 0.0) {
    for (double v : {phi1, phi3, varphi, phi_w})
        if (!std::isfinite(v)) throw std::domain_error("derive_phases: non-finite input");
    constexpr double half_pi = 0.5 * std::numbers::pi;
    PhaseSet p;
    p.phi1 = phi1;
    p.phi3 = phi3;
    p.varphi = varphi;
    p.phi_w = phi_w;
    p.phi_wr = -phi1 - varphi;
    p.phi_gwp = -phi3 - varphi;
    p.phi_gr = -varphi - half_pi;
    p.phi2 = -phi1 - phi3 - varphi - half_pi;
    p.phi_g = phi_w + phi1 - half_pi;
    p.phi_wp = phi_w + phi1 + phi3 + varphi;
    p.phi_r = p.phi_g + varphi;  // the GHZ phase is exactly the g-r phase gap
    return p;
}

// Complex pulse tables in physical units (hbar = 1): times in hbar/E,
// Rabi frequencies in E/hbar. Phases are constant, so the table stores the
// moduli per node and one argument per pulse.
struct PhysicalPulses {
    std::vector<double> t;
    std::array<std::vector<double>, 3> mod;
    std::array<double, 3> arg{};
    double energy = 1.0;
    double t_qb = 0.0;

    std::size_t size() const { return t.size(); }

    std::complex<double> omega(int n, std::size_t i) const {
        return std::polar(mod[static_cast<std::size_t>(n - 1)][i],
                          arg[static_cast<std::size_t>(n - 1)]);
    }

    void write_csv(std::ostream& os) const {
        os << "t,abs_om1,arg_om1,abs_om2,arg_om2,abs_om3,arg_om3\n";
        for (std::size_t i = 0; i < t.size(); ++i) {
            os << fmt_g17(t[i]);
            for (int n = 0; n < 3; ++n)
                os << ',' << fmt_g17(mod[static_cast<std::size_t>(n)][i]) << ','
                   << fmt_g17(arg[static_cast<std::size_t>(n)]);
            os << '\n';
        }
    }
};

// Trapezoidal total pulse energy; a self-check for the energy invariant.
inline double pulse_energy_trapezoid(const PhysicalPulses& p) {
    double acc = 0.0;
    auto power = [&](std::size_t i) {
        double s = 0.0;
        for (const auto& m : p.mod) s += m[i] * m[i];
        return s;
    };
    for (std::size_t i = 1; i < p.t.size(); ++i)
        acc += 0.5 * (power(i) + power(i - 1)) * (p.t[i] - p.t[i - 1]);
    return acc;
}

// Undo the scaling: t = xi / |lambda_Wr(0)| and Omega_n = |lambda_Wr(0)|
// u_n e^{i phi_n}, with T = u^2 Xi^2 hbar/E. The exported grid covers the
// protocol interval, ending exactly at Xi.
//
// The mirror-branch solution carries u2, u3 <= 0 (a constant pi shift of
// the corresponding pulse phase), so each pulse is sign-normalized from
// the node of largest magnitude. Residual negatives, which the converged
// endpoint can produce at the size of the deviation error, are floored
// at zero.
inline PhysicalPulses to_physical(const Trajectory& traj, const InitialPoint& x_star,
                                  double xi_qb, const PhaseSet& phases, double energy = 1.0) {
    if (!(energy > 0.0)) throw std::domain_error("to_physical: energy must be > 0");
    if (!(x_star.u > 0.0))
        throw std::domain_error("to_physical: u = 0 gives an infinite conversion time");
    if (!(xi_qb > 0.0) || xi_qb > traj.grid.xi_max)
        throw std::domain_error("to_physical: xi_qb outside the trajectory range");

    const double t_qb = x_star.u * x_star.u * xi_qb * xi_qb / energy;
    const double lam = xi_qb / t_qb;  // |lambda_Wr(0)| in E/hbar units

    const auto& xs = traj.grid.values;
    std::vector<const ScaledState*> nodes;
    for (std::size_t i = 0; i < xs.size() && xs[i] < xi_qb; ++i) {
        nodes.push_back(&traj.states[i]);
    }
    const ScaledState end = traj.at(xi_qb);

    std::array<double, 3> sign = {1.0, 1.0, 1.0};
    for (int n = 0; n < 3; ++n) {
        double peak = 0.0;
        auto consider = [&](const ScaledState& s) {
            const double v = n == 0 ? s.u1 : (n == 1 ? s.u2 : s.u3);
            if (std::abs(v) > std::abs(peak)) peak = v;
        };
        for (const auto* s : nodes) consider(*s);
        consider(end);
        if (peak < 0.0) sign[static_cast<std::size_t>(n)] = -1.0;
    }

    PhysicalPulses p;
    p.energy = energy;
    p.t_qb = t_qb;
    const PhaseSet red = phases.reduced();
    constexpr double pi = std::numbers::pi;
    const std::array<double, 3> raw_args = {red.phi1, red.phi2, red.phi3};
    for (int n = 0; n < 3; ++n)
        p.arg[static_cast<std::size_t>(n)] =
            sign[static_cast<std::size_t>(n)] < 0.0
                ? wrap_phase(raw_args[static_cast<std::size_t>(n)] + pi)
                : raw_args[static_cast<std::size_t>(n)];

    auto push = [&](double xi, const ScaledState& s) {
        p.t.push_back(xi / lam);
        p.mod[0].push_back(std::max(0.0, sign[0] * lam * s.u1));
        p.mod[1].push_back(std::max(0.0, sign[1] * lam * s.u2));
        p.mod[2].push_back(std::max(0.0, sign[2] * lam * s.u3));
    };
    for (std::size_t i = 0; i < nodes.size(); ++i) push(xs[i], *nodes[i]);
    push(xi_qb, end);
    return p;
}

}  // namespace qbrachy
