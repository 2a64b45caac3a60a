#pragma once

#include <array>
#include <cmath>

namespace qbrachy {

// Tolerances used throughout the invariant checks.
inline constexpr double tol_neg = 1e-9;   // allowed numerical undershoot of a modulus
inline constexpr double tol_norm = 1e-8;  // allowed deviation of the state norm from 1

// The ten scaled moduli evolved in dimensionless time xi: the three pulse
// moduli u_n, the three costate (Lagrange-multiplier) moduli w_k and the
// four state-component moduli |psi_gamma|. Analytic solutions keep all of
// them non-negative; the integrator evolves the signed system and callers
// validate or clamp where non-negativity matters.
struct ScaledState {
    double u1 = 0.0;
    double u2 = 0.0;
    double u3 = 0.0;
    double w_wr = 0.0;
    double w_gr = 0.0;
    double w_gwp = 0.0;
    double psi_g = 0.0;
    double psi_w = 0.0;
    double psi_wp = 0.0;
    double psi_r = 0.0;

    double pulse_norm2() const { return u1 * u1 + u2 * u2 + u3 * u3; }
    double costate_norm2() const { return w_wr * w_wr + w_gr * w_gr + w_gwp * w_gwp; }
    double state_norm2() const {
        return psi_g * psi_g + psi_w * psi_w + psi_wp * psi_wp + psi_r * psi_r;
    }

    bool is_finite() const {
        for (double v : as_array()) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    // Most negative field value; >= -tol_neg on a valid modulus vector.
    double min_field() const {
        double m = u1;
        for (double v : as_array()) m = std::min(m, v);
        return m;
    }

    // Copy with small negative undershoot zeroed (read-side clamping).
    ScaledState clamped(double tol = tol_neg) const {
        ScaledState out = *this;
        for (double* p : {&out.u1, &out.u2, &out.u3, &out.w_wr, &out.w_gr, &out.w_gwp,
                          &out.psi_g, &out.psi_w, &out.psi_wp, &out.psi_r}) {
            if (*p < 0.0 && *p >= -tol) *p = 0.0;
        }
        return out;
    }

    std::array<double, 10> as_array() const {
        return {u1, u2, u3, w_wr, w_gr, w_gwp, psi_g, psi_w, psi_wp, psi_r};
    }

    static ScaledState from_array(const std::array<double, 10>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8], a[9]};
    }
};

inline ScaledState operator+(const ScaledState& a, const ScaledState& b) {
    return {a.u1 + b.u1,       a.u2 + b.u2,     a.u3 + b.u3,   a.w_wr + b.w_wr,
            a.w_gr + b.w_gr,   a.w_gwp + b.w_gwp, a.psi_g + b.psi_g, a.psi_w + b.psi_w,
            a.psi_wp + b.psi_wp, a.psi_r + b.psi_r};
}

inline ScaledState operator-(const ScaledState& a, const ScaledState& b) {
    return {a.u1 - b.u1,       a.u2 - b.u2,     a.u3 - b.u3,   a.w_wr - b.w_wr,
            a.w_gr - b.w_gr,   a.w_gwp - b.w_gwp, a.psi_g - b.psi_g, a.psi_w - b.psi_w,
            a.psi_wp - b.psi_wp, a.psi_r - b.psi_r};
}

inline ScaledState operator*(double c, const ScaledState& s) {
    return {c * s.u1,    c * s.u2,    c * s.u3,    c * s.w_wr, c * s.w_gr,
            c * s.w_gwp, c * s.psi_g, c * s.psi_w, c * s.psi_wp, c * s.psi_r};
}

// Largest absolute component difference, used by step-size checks.
inline double max_abs_diff(const ScaledState& a, const ScaledState& b) {
    const auto da = a.as_array();
    const auto db = b.as_array();
    double m = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) m = std::max(m, std::abs(da[i] - db[i]));
    return m;
}

}  // namespace qbrachy
