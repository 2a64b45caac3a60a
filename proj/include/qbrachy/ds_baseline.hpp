#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "qbrachy/propagator.hpp"

namespace qbrachy {

// Moduli of the fixed coefficients of the real-valued trapezoid-pulse
// reference protocol.
inline constexpr std::array<double, 3> ds_coefficients = {1.225, 1.420, 2.352};

// Normalized trapezoid: linear rise over [0, tau], flat top, linear decay
// over [1 - tau, 1]. tau = 0 degenerates to the rectangular pulse.
inline double trapezoid_f(double x, double tau) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("trapezoid_f: x outside [0,1]");
    if (!(tau >= 0.0 && tau <= 1.0 / 3.0))
        throw std::domain_error("trapezoid_f: tau outside [0, 1/3]");
    if (tau == 0.0) return 1.0;
    if (x < tau) return x / tau;
    if (x > 1.0 - tau) return (1.0 - x) / tau;
    return 1.0;
}

// Closed form of the shape integral: int_0^1 f(x)^2 dx = (3 - 4 tau) / 3.
inline double trapezoid_f_sq_integral(double tau) {
    return (3.0 - 4.0 * tau) / 3.0;
}

// Protocol duration that spends total pulse energy E, in hbar/E units.
inline double t_ds_for_energy(double tau, double energy = 1.0) {
    if (!(energy > 0.0)) throw std::domain_error("t_ds_for_energy: energy must be > 0");
    if (!(tau >= 0.0 && tau <= 1.0 / 3.0))
        throw std::domain_error("t_ds_for_energy: tau outside [0, 1/3]");
    double c2 = 0.0;
    for (double c : ds_coefficients) c2 += c * c;
    return c2 * (3.0 - 4.0 * tau) / (3.0 * (1.0 - tau) * (1.0 - tau)) / energy;
}

struct DsParams {
    double tau = 0.0;
    std::array<double, 3> c_abs = ds_coefficients;
    double energy = 1.0;
    double t_ds = 0.0;
};

inline DsParams make_ds_params(double tau, double energy = 1.0) {
    DsParams p;
    p.tau = tau;
    p.energy = energy;
    p.t_ds = t_ds_for_energy(tau, energy);
    return p;
}

// Real pulses Omega_n(t) = c_n / (T_DS (1 - tau)) * f(t / T_DS); their total
// energy integrates to E by the choice of T_DS.
inline PulseSampler ds_pulses(const DsParams& params) {
    if (!(params.t_ds > 0.0)) throw std::domain_error("ds_pulses: t_ds must be > 0");
    const double scale = 1.0 / (params.t_ds * (1.0 - params.tau));
    return [params, scale](double t) -> PulseSample {
        const double x = std::clamp(t / params.t_ds, 0.0, 1.0);
        const double f = trapezoid_f(x, params.tau);
        PulseSample out;
        for (int n = 0; n < 3; ++n)
            out[static_cast<std::size_t>(n)] =
                params.c_abs[static_cast<std::size_t>(n)] * scale * f;
        return out;
    };
}

struct DsComparison {
    double tau = 0.0;
    double t_ds = 0.0;
    double t_qb = 0.0;
    double ratio = 0.0;
};

inline DsComparison compare_ds(double tau, double t_qb, double energy = 1.0) {
    DsComparison c;
    c.tau = tau;
    c.t_ds = t_ds_for_energy(tau, energy);
    c.t_qb = t_qb;
    c.ratio = c.t_ds / t_qb;
    return c;
}

}  // namespace qbrachy
