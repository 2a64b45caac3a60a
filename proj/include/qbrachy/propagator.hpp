#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "qbrachy/io.hpp"
#include "qbrachy/phases.hpp"
#include "qbrachy/scaled_state.hpp"
#include "qbrachy/trajectory.hpp"

namespace qbrachy {

using cplx = std::complex<double>;

// Complex amplitudes on the {|ggg>, |W>, |W'>, |rrr>} basis.
struct ComplexState {
    cplx g{};
    cplx w{};
    cplx wp{};
    cplx r{};

    double norm2() const {
        return std::norm(g) + std::norm(w) + std::norm(wp) + std::norm(r);
    }

    std::array<double, 4> moduli() const {
        return {std::abs(g), std::abs(w), std::abs(wp), std::abs(r)};
    }
};

inline ComplexState operator+(const ComplexState& a, const ComplexState& b) {
    return {a.g + b.g, a.w + b.w, a.wp + b.wp, a.r + b.r};
}

inline ComplexState operator*(double c, const ComplexState& s) {
    return {c * s.g, c * s.w, c * s.wp, c * s.r};
}

using PulseSample = std::array<cplx, 3>;
using PulseSampler = std::function<PulseSample(double)>;

namespace detail {

// Derivative at x of the quadratic through (xa,ya), (xb,yb), (xc,yc).
inline double quad_deriv(double xa, double ya, double xb, double yb, double xc, double yc,
                         double x) {
    return ya * (2.0 * x - xb - xc) / ((xa - xb) * (xa - xc)) +
           yb * (2.0 * x - xa - xc) / ((xb - xa) * (xb - xc)) +
           yc * (2.0 * x - xa - xb) / ((xc - xa) * (xc - xb));
}

}  // namespace detail

// Second-order finite-difference derivative estimates on a (possibly
// non-uniform) grid: three-point centered in the interior, one-sided at
// the two endpoints.
inline std::vector<double> fd_derivative(const std::vector<double>& x,
                                         const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 3 || y.size() != n)
        throw std::domain_error("fd_derivative: need at least 3 samples");
    std::vector<double> d(n);
    d[0] = detail::quad_deriv(x[0], y[0], x[1], y[1], x[2], y[2], x[0]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        d[i] = detail::quad_deriv(x[i - 1], y[i - 1], x[i], y[i], x[i + 1], y[i + 1], x[i]);
    d[n - 1] = detail::quad_deriv(x[n - 3], y[n - 3], x[n - 2], y[n - 2], x[n - 1], y[n - 1],
                                  x[n - 1]);
    return d;
}

// Sampler backed by a pulse table: cubic Hermite interpolation of the
// moduli (finite-difference node derivatives) with the constant phases.
// Query times are clamped to the table range.
inline PulseSampler sample_pulses(const PhysicalPulses& p) {
    if (p.size() < 3) throw std::domain_error("sample_pulses: table too short");
    struct Table {
        std::vector<double> t;
        std::array<std::vector<double>, 3> mod;
        std::array<std::vector<double>, 3> dmod;
        std::array<cplx, 3> phase;
    };
    auto tab = std::make_shared<Table>();
    tab->t = p.t;
    for (int n = 0; n < 3; ++n) {
        const auto k = static_cast<std::size_t>(n);
        tab->mod[k] = p.mod[k];
        tab->dmod[k] = fd_derivative(p.t, p.mod[k]);
        tab->phase[k] = {std::cos(p.arg[k]), std::sin(p.arg[k])};
    }
    return [tab](double t) -> PulseSample {
        const auto& ts = tab->t;
        const double tc = std::clamp(t, ts.front(), ts.back());
        auto it = std::upper_bound(ts.begin(), ts.end(), tc);
        std::size_t i = static_cast<std::size_t>(it - ts.begin());
        if (i > 0) --i;
        if (i + 1 >= ts.size()) i = ts.size() - 2;
        const double h = ts[i + 1] - ts[i];
        const double s = (tc - ts[i]) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        const double h10 = s3 - 2.0 * s2 + s;
        const double h01 = -2.0 * s3 + 3.0 * s2;
        const double h11 = s3 - s2;
        PulseSample out;
        for (int n = 0; n < 3; ++n) {
            const auto k = static_cast<std::size_t>(n);
            const double m = h00 * tab->mod[k][i] + h10 * h * tab->dmod[k][i] +
                             h01 * tab->mod[k][i + 1] + h11 * h * tab->dmod[k][i + 1];
            out[k] = m * tab->phase[k];
        }
        return out;
    };
}

struct IntegrationQualityError : std::runtime_error {
    double norm_drift;
    explicit IntegrationQualityError(double drift)
        : std::runtime_error("propagation norm drift " + std::to_string(drift) +
                             " exceeds 1e-6"),
          norm_drift(drift) {}
};

struct Propagation {
    std::vector<double> t;
    std::vector<ComplexState> states;
    double norm_drift = 0.0;  // max ||psi|^2 - 1| over the series
};

namespace detail {

inline ComplexState schrodinger_rhs(const ComplexState& s, const PulseSample& om) {
    const cplx mi{0.0, -1.0};
    return {mi * (om[0] * s.w), mi * (std::conj(om[0]) * s.g + om[1] * s.wp),
            mi * (std::conj(om[1]) * s.w + om[2] * s.r), mi * (std::conj(om[2]) * s.wp)};
}

}  // namespace detail

// RK4 propagation of the complex Schroedinger equation under the sampled
// pulses. No renormalization is applied; growing norm drift is the error
// signal and drift beyond 1e-6 throws.
inline Propagation propagate(const ComplexState& initial, const PulseSampler& pulses,
                             double t_final, std::size_t n_steps) {
    if (n_steps < 1) throw std::domain_error("propagate: n_steps must be >= 1");
    if (!(t_final > 0.0)) throw std::domain_error("propagate: t_final must be > 0");
    if (std::abs(initial.norm2() - 1.0) > tol_norm)
        throw std::domain_error("propagate: initial state not normalized");

    Propagation out;
    out.t.reserve(n_steps + 1);
    out.states.reserve(n_steps + 1);

    ComplexState y = initial;
    out.t.push_back(0.0);
    out.states.push_back(y);
    const double h = t_final / static_cast<double>(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t0 = h * static_cast<double>(i);
        const PulseSample om0 = pulses(t0);
        const PulseSample om_half = pulses(t0 + 0.5 * h);
        const PulseSample om1 = pulses(t0 + h);
        const ComplexState k1 = detail::schrodinger_rhs(y, om0);
        const ComplexState k2 = detail::schrodinger_rhs(y + (0.5 * h) * k1, om_half);
        const ComplexState k3 = detail::schrodinger_rhs(y + (0.5 * h) * k2, om_half);
        const ComplexState k4 = detail::schrodinger_rhs(y + h * k3, om1);
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.t.push_back(t0 + h);
        out.states.push_back(y);
        out.norm_drift = std::max(out.norm_drift, std::abs(y.norm2() - 1.0));
    }
    out.t.back() = t_final;
    if (out.norm_drift > 1e-6) throw IntegrationQualityError(out.norm_drift);
    return out;
}

// |<GHZ(varphi)|psi>| = |psi_g + e^{-i varphi} psi_r| / sqrt(2).
inline double fidelity_ghz(const ComplexState& s, double varphi) {
    const cplx rot{std::cos(varphi), -std::sin(varphi)};
    return std::abs(s.g + rot * s.r) / std::numbers::sqrt2;
}

// ---------------------------------------------------------------------------
// Reconstructed F = H + Lambda and its equation of motion
// ---------------------------------------------------------------------------

using Mat4 = std::array<std::array<cplx, 4>, 4>;

inline Mat4 matmul(const Mat4& a, const Mat4& b) {
    Mat4 c{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            const cplx aik = a[i][k];
            if (aik == cplx{}) continue;
            for (int j = 0; j < 4; ++j) c[i][j] += aik * b[k][j];
        }
    return c;
}

inline cplx trace(const Mat4& a) {
    return a[0][0] + a[1][1] + a[2][2] + a[3][3];
}

inline double max_abs(const Mat4& a) {
    double m = 0.0;
    for (const auto& row : a)
        for (const auto& v : row) m = std::max(m, std::abs(v));
    return m;
}

namespace detail {

inline void set_hermitian(Mat4& m, int i, int j, cplx v) {
    m[i][j] = v;
    m[j][i] = std::conj(v);
}

}  // namespace detail

// Scaled Hamiltonian with entries u_n e^{i phi_n} on the coupling pattern.
inline Mat4 scaled_hamiltonian(const ScaledState& s, const PhaseSet& ph) {
    Mat4 h{};
    detail::set_hermitian(h, 0, 1, std::polar(1.0, ph.phi1) * s.u1);
    detail::set_hermitian(h, 1, 2, std::polar(1.0, ph.phi2) * s.u2);
    detail::set_hermitian(h, 2, 3, std::polar(1.0, ph.phi3) * s.u3);
    return h;
}

// Scaled F = H + Lambda; the diagonal multipliers vanish identically.
inline Mat4 f_matrix(const ScaledState& s, const PhaseSet& ph) {
    Mat4 f = scaled_hamiltonian(s, ph);
    detail::set_hermitian(f, 0, 2, std::polar(1.0, ph.phi_gwp) * s.w_gwp);
    detail::set_hermitian(f, 0, 3, std::polar(1.0, ph.phi_gr) * s.w_gr);
    detail::set_hermitian(f, 1, 3, std::polar(1.0, ph.phi_wr) * s.w_wr);
    return f;
}

// Max residual of dF/dxi + i[H, F] over the interior nodes, with dF/dxi
// from centered differences. Small for trajectories that solve the reduced
// moduli system with phases satisfying the constraints.
inline double check_f_evolution(const Trajectory& traj, const PhaseSet& ph) {
    const auto& xs = traj.grid.values;
    if (xs.size() < 3) throw std::domain_error("check_f_evolution: trajectory too short");
    double worst = 0.0;
    Mat4 f_prev = f_matrix(traj.states[0], ph);
    Mat4 f_cur = f_matrix(traj.states[1], ph);
    for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
        const Mat4 f_next = f_matrix(traj.states[k + 1], ph);
        const Mat4 h = scaled_hamiltonian(traj.states[k], ph);
        const Mat4 hf = matmul(h, f_cur);
        const Mat4 fh = matmul(f_cur, h);
        const double inv_dxi = 1.0 / (xs[k + 1] - xs[k - 1]);
        Mat4 res{};
        const cplx im{0.0, 1.0};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                res[i][j] = (f_next[i][j] - f_prev[i][j]) * inv_dxi + im * (hf[i][j] - fh[i][j]);
        worst = std::max(worst, max_abs(res));
        f_prev = f_cur;
        f_cur = f_next;
    }
    return worst;
}

// Drift of Tr F^2 and Tr F^3 along the trajectory. Tr F^2 is reported
// relative to its initial value; Tr F^3 vanishes identically under the
// phase constraints, so its drift is normalized by the natural scale
// (Tr F^2)^{3/2} instead.
struct FTraceDrift {
    double tr2_rel = 0.0;
    double tr3_rel = 0.0;
};

inline FTraceDrift f_trace_invariants(const Trajectory& traj, const PhaseSet& ph) {
    double tr2_min = 0.0, tr2_max = 0.0, tr3_min = 0.0, tr3_max = 0.0;
    double tr2_0 = 0.0;
    bool first = true;
    for (const auto& s : traj.states) {
        const Mat4 f = f_matrix(s, ph);
        const Mat4 f2 = matmul(f, f);
        const double tr2 = trace(f2).real();
        const double tr3 = trace(matmul(f2, f)).real();
        if (first) {
            tr2_0 = tr2;
            tr2_min = tr2_max = tr2;
            tr3_min = tr3_max = tr3;
            first = false;
        } else {
            tr2_min = std::min(tr2_min, tr2);
            tr2_max = std::max(tr2_max, tr2);
            tr3_min = std::min(tr3_min, tr3);
            tr3_max = std::max(tr3_max, tr3);
        }
    }
    FTraceDrift d;
    d.tr2_rel = (tr2_max - tr2_min) / std::abs(tr2_0);
    d.tr3_rel = (tr3_max - tr3_min) / std::pow(std::abs(tr2_0), 1.5);
    return d;
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

inline void write_fidelity_csv(std::ostream& os, const Propagation& prop, double varphi) {
    os << "t,fidelity\n";
    for (std::size_t i = 0; i < prop.t.size(); ++i)
        os << fmt_g17(prop.t[i]) << ',' << fmt_g17(fidelity_ghz(prop.states[i], varphi))
           << '\n';
}

inline void write_states_csv(std::ostream& os, const Propagation& prop) {
    os << "t,abs_psi_g,abs_psi_w,abs_psi_wp,abs_psi_r\n";
    for (std::size_t i = 0; i < prop.t.size(); ++i) {
        const auto m = prop.states[i].moduli();
        os << fmt_g17(prop.t[i]);
        for (double v : m) os << ',' << fmt_g17(v);
        os << '\n';
    }
}

}  // namespace qbrachy
