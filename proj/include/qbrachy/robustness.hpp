#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qbrachy/io.hpp"
#include "qbrachy/parallel.hpp"
#include "qbrachy/phases.hpp"
#include "qbrachy/propagator.hpp"

namespace qbrachy {

// Sinusoidal distortion of a single pulse modulus, proportional to its own
// time derivative: delta|Omega_n| = t_n sin(2 pi kappa t / T) d|Omega_n|/dt.
struct DistortionSpec {
    int pulse_index = 1;  // 1, 2 or 3
    double t_n = 0.0;     // distortion timescale, hbar/E units
    int kappa = 1;        // modulation rate

    bool valid() const { return pulse_index >= 1 && pulse_index <= 3 && t_n >= 0.0 && kappa >= 1; }
};

struct DistortedPulses {
    PhysicalPulses pulses;
    bool clamped = false;  // true when a negative modulus was floored at 0
};

// The derivative is estimated from the realized pulse table (centered
// differences, matching-order one-sided stencils at the ends). Phases and
// the other two pulses are untouched.
inline DistortedPulses distort(const PhysicalPulses& pulses, const DistortionSpec& spec) {
    if (!spec.valid()) throw std::domain_error("distort: invalid spec");
    DistortedPulses out{pulses, false};
    if (spec.t_n == 0.0) return out;

    const auto k = static_cast<std::size_t>(spec.pulse_index - 1);
    const std::vector<double> deriv = fd_derivative(pulses.t, pulses.mod[k]);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    auto& mod = out.pulses.mod[k];
    for (std::size_t i = 0; i < mod.size(); ++i) {
        const double phase = two_pi * spec.kappa * pulses.t[i] / pulses.t_qb;
        mod[i] += spec.t_n * std::sin(phase) * deriv[i];
        if (mod[i] < 0.0) {
            mod[i] = 0.0;
            out.clamped = true;
        }
    }
    return out;
}

struct SweepCell {
    int pulse_index = 0;
    int kappa = 0;
    double t_frac = 0.0;      // t_n / T_QB
    double infidelity = 0.0;  // 1 - F_GHZ(T_QB)
    bool ok = false;
    std::string error;
};

// For each (kappa, t_n) the distorted pulses are propagated from |W> up to
// T_QB and the final GHZ infidelity recorded. t_values are fractions of
// T_QB. Failures are surfaced per cell; the sweep continues.
inline std::vector<SweepCell> infidelity_sweep(const PhysicalPulses& pulses, int pulse_index,
                                               const std::vector<int>& kappas,
                                               const std::vector<double>& t_fracs,
                                               double varphi, unsigned jobs = 0) {
    if (kappas.empty() || t_fracs.empty())
        throw std::domain_error("infidelity_sweep: empty parameter lists");
    std::vector<SweepCell> cells(kappas.size() * t_fracs.size());
    const std::size_t n_steps = pulses.size() - 1;

    parallel_for(cells.size(), jobs, [&](std::size_t idx) {
        const std::size_t ik = idx / t_fracs.size();
        const std::size_t it = idx % t_fracs.size();
        SweepCell cell;
        cell.pulse_index = pulse_index;
        cell.kappa = kappas[ik];
        cell.t_frac = t_fracs[it];
        try {
            const DistortionSpec spec{pulse_index, cell.t_frac * pulses.t_qb, cell.kappa};
            const DistortedPulses dist = distort(pulses, spec);
            const Propagation prop =
                propagate(ComplexState{{}, {1.0, 0.0}, {}, {}}, sample_pulses(dist.pulses),
                          pulses.t_qb, n_steps);
            // rounding can push the fidelity a few ulp past 1
            cell.infidelity = std::max(0.0, 1.0 - fidelity_ghz(prop.states.back(), varphi));
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.infidelity = std::numeric_limits<double>::quiet_NaN();
            cell.error = e.what();
        }
        cells[idx] = cell;
    });
    return cells;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
    os << "pulse_index,kappa,t_n_over_Tqb,infidelity\n";
    for (const auto& c : cells)
        os << c.pulse_index << ',' << c.kappa << ',' << fmt_g17(c.t_frac) << ','
           << fmt_g17(c.infidelity) << '\n';
}

}  // namespace qbrachy
