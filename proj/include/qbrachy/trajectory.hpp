#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "qbrachy/io.hpp"
#include "qbrachy/scaled_state.hpp"

namespace qbrachy {

// Monotone grid 0 = xi_0 < ... < xi_N = xi_max of dimensionless times.
struct XiGrid {
    double xi_max = 0.0;
    std::vector<double> values;

    std::size_t n_steps() const { return values.empty() ? 0 : values.size() - 1; }

    static XiGrid uniform(double xi_max, std::size_t n_steps) {
        if (!(xi_max > 0.0) || n_steps == 0)
            throw std::domain_error("XiGrid::uniform: need xi_max > 0 and n_steps >= 1");
        XiGrid g;
        g.xi_max = xi_max;
        g.values.resize(n_steps + 1);
        for (std::size_t i = 0; i <= n_steps; ++i)
            g.values[i] = xi_max * static_cast<double>(i) / static_cast<double>(n_steps);
        g.values.front() = 0.0;
        g.values.back() = xi_max;
        return g;
    }

    // Uniform grid with step <= requested step.
    static XiGrid with_step(double xi_max, double step) {
        if (!(step > 0.0)) throw std::domain_error("XiGrid::with_step: step must be > 0");
        const auto n = static_cast<std::size_t>(std::ceil(xi_max / step));
        return uniform(xi_max, std::max<std::size_t>(n, 1));
    }

    bool is_valid() const {
        if (values.empty() || values.front() != 0.0) return false;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1])) return false;
        return values.back() == xi_max;
    }
};

// Time-sampled ScaledState sequence. Stores the RHS at every node so that
// values between nodes come from cubic Hermite interpolation.
struct Trajectory {
    XiGrid grid;
    std::vector<ScaledState> states;
    std::vector<ScaledState> derivs;

    std::size_t size() const { return states.size(); }

    // Index of the cell [xi_i, xi_{i+1}] containing xi.
    std::size_t locate(double xi) const {
        if (xi < 0.0 || xi > grid.xi_max)
            throw std::domain_error("Trajectory::locate: xi outside [0, xi_max]");
        const auto& v = grid.values;
        auto it = std::upper_bound(v.begin(), v.end(), xi);
        std::size_t i = static_cast<std::size_t>(it - v.begin());
        if (i > 0) --i;
        if (i + 1 >= v.size()) i = v.size() - 2;
        return i;
    }

    // Cubic Hermite interpolation between stored nodes.
    ScaledState at(double xi) const {
        const std::size_t i = locate(xi);
        const double x0 = grid.values[i];
        const double x1 = grid.values[i + 1];
        const double h = x1 - x0;
        const double s = (xi - x0) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        const double h10 = s3 - 2.0 * s2 + s;
        const double h01 = -2.0 * s3 + 3.0 * s2;
        const double h11 = s3 - s2;
        return h00 * states[i] + (h10 * h) * derivs[i] + h01 * states[i + 1] +
               (h11 * h) * derivs[i + 1];
    }

    ScaledState front() const { return states.front(); }
    ScaledState back() const { return states.back(); }

    // Worst-case drift of the conserved quantities over the whole trajectory,
    // relative to their values at xi = 0 (norm drift is absolute: target 1).
    struct Conservation {
        double pulse_drift = 0.0;
        double costate_drift = 0.0;
        double norm_drift = 0.0;
    };

    Conservation conservation() const {
        Conservation c;
        const double p0 = states.front().pulse_norm2();
        const double w0 = states.front().costate_norm2();
        for (const auto& s : states) {
            c.pulse_drift = std::max(c.pulse_drift, std::abs(s.pulse_norm2() - p0));
            c.costate_drift = std::max(c.costate_drift, std::abs(s.costate_norm2() - w0));
            c.norm_drift = std::max(c.norm_drift, std::abs(s.state_norm2() - 1.0));
        }
        return c;
    }

    // Most negative modulus anywhere on the trajectory.
    double min_field() const {
        double m = 0.0;
        for (const auto& s : states) m = std::min(m, s.min_field());
        return m;
    }

    void write_csv(std::ostream& os) const {
        os << "xi,u1,u2,u3,w_wr,w_gr,w_gwp,psi_g,psi_w,psi_wp,psi_r\n";
        for (std::size_t i = 0; i < states.size(); ++i) {
            const auto a = states[i].as_array();
            os << fmt_g17(grid.values[i]);
            for (double v : a) os << ',' << fmt_g17(v);
            os << '\n';
        }
    }
};

}  // namespace qbrachy
