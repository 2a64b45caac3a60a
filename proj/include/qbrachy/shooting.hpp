#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qbrachy/dynamics.hpp"
#include "qbrachy/io.hpp"
#include "qbrachy/parallel.hpp"
#include "qbrachy/trajectory.hpp"

namespace qbrachy {

struct ShootingOptions {
    double step = 1e-3;          // RK4 grid step in xi
    double xi_tol = 1e-8;        // golden-section tolerance of the inner xi minimum
    double grad_eps = 1e-6;      // forward-difference step for the gradient
    int max_iters = 500;         // outer minimizer iteration cap
    double d_threshold = 1e-3;   // convergence: deviation error below 0.1%
};

// Residuals of the final conditions, listed as a 6-vector.
inline std::array<double, 6> deviation_of(const ScaledState& s) {
    return {s.u2, s.u1 - s.w_wr, s.u3 - s.w_gwp, s.psi_w, s.psi_wp, s.psi_g - s.psi_r};
}

inline double deviation_norm(const ScaledState& s) {
    double n2 = 0.0;
    for (double v : deviation_of(s)) n2 += v * v;
    return std::sqrt(n2);
}

inline std::array<double, 6> deviation_vector(const Trajectory& traj, double xi) {
    if (xi < 0.0 || xi > traj.grid.xi_max)
        throw std::domain_error("deviation_vector: xi outside [0, xi_max]");
    return deviation_of(traj.at(xi));
}

struct ErrorD {
    double d = std::numeric_limits<double>::infinity();
    double xi_star = 0.0;
};

// min over xi of ||d(xi)||: coarse pass over the stored nodes (strict <
// keeps ties at the smallest xi), then golden-section refinement on the
// bracketing cells via Hermite interpolation. The refined value is only
// accepted when it improves on the best node.
inline ErrorD min_deviation(const Trajectory& traj, double xi_tol = 1e-8) {
    const auto& xs = traj.grid.values;
    std::size_t best = 0;
    double best_v = deviation_norm(traj.states[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double v = deviation_norm(traj.states[i]);
        if (v < best_v) {
            best = i;
            best_v = v;
        }
    }

    double a = xs[best > 0 ? best - 1 : best];
    double b = xs[best + 1 < xs.size() ? best + 1 : best];
    if (b - a > xi_tol) {
        constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5)-1)/2
        double x1 = b - inv_phi * (b - a);
        double x2 = a + inv_phi * (b - a);
        double f1 = deviation_norm(traj.at(x1));
        double f2 = deviation_norm(traj.at(x2));
        while (b - a > xi_tol) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = deviation_norm(traj.at(x1));
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = deviation_norm(traj.at(x2));
            }
        }
        const double xm = 0.5 * (a + b);
        const double fm = deviation_norm(traj.at(xm));
        if (fm < best_v) return {fm, xm};
    }
    return {best_v, xs[best]};
}

namespace detail {

struct DEval {
    double d;
    double xi_star;
    std::array<double, 6> dvec;
};

inline DEval eval_deviation(const InitialPoint& x0, double xi_max, const ShootingOptions& opt) {
    const Trajectory traj = integrate(x0, XiGrid::with_step(xi_max, opt.step));
    const ErrorD e = min_deviation(traj, opt.xi_tol);
    return {e.d, e.xi_star, deviation_of(traj.at(e.xi_star))};
}

}  // namespace detail

// D(x) = min_xi ||d_x(xi)|| together with the minimizing xi.
inline ErrorD error_d(const InitialPoint& x0, double xi_max, const ShootingOptions& opt = {}) {
    if (!x0.in_domain()) throw std::domain_error("error_d: x0 outside domain");
    const auto ev = detail::eval_deviation(x0, xi_max, opt);
    return {ev.d, ev.xi_star};
}

// Forward-difference gradient of x -> ||g(x)|| for a vector map
// g: disc -> R^6, via  dD/dx_j = g . d_j g / ||g||  with the components of
// g differenced directly. A probe that would leave the domain is flipped
// into a backward difference.
template <typename VecFn>
std::array<double, 2> norm_gradient_fd(VecFn&& fn, const InitialPoint& x0, double eps) {
    if (!(eps > 0.0)) throw std::domain_error("norm_gradient_fd: eps must be > 0");
    const std::array<double, 6> base = fn(x0);
    double nrm = 0.0;
    for (double v : base) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm <= 0.0) return {0.0, 0.0};

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double hi[2] = {1.0, two_pi};
    const double xv[2] = {x0.u, x0.phi_u};

    std::array<double, 2> g{};
    for (int j = 0; j < 2; ++j) {
        double e = eps;
        if (xv[j] + e > hi[j]) e = -e;
        InitialPoint xp = x0;
        (j == 0 ? xp.u : xp.phi_u) += e;
        const std::array<double, 6> pert = fn(xp);
        double acc = 0.0;
        for (int k = 0; k < 6; ++k) acc += base[k] * (pert[k] - base[k]) / e;
        g[j] = acc / nrm;
    }
    return g;
}

// Gradient of D, differentiating the deviation vector at its per-point
// optimal xi.
inline std::array<double, 2> grad_d(const InitialPoint& x0, double xi_max,
                                    const ShootingOptions& opt = {}) {
    return norm_gradient_fd(
        [&](const InitialPoint& x) { return detail::eval_deviation(x, xi_max, opt).dvec; },
        x0, opt.grad_eps);
}

enum class Method { nelder_mead, bfgs, newton };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::nelder_mead: return "nelder-mead";
        case Method::bfgs: return "bfgs";
        case Method::newton: return "newton";
    }
    return "unknown";
}

inline Method method_from_string(const std::string& s) {
    if (s == "nelder-mead" || s == "nm") return Method::nelder_mead;
    if (s == "bfgs") return Method::bfgs;
    if (s == "newton") return Method::newton;
    throw std::invalid_argument("unknown method: " + s);
}

struct ShootingResult {
    InitialPoint x_star;
    double xi_qb = 0.0;
    double d_error = std::numeric_limits<double>::infinity();
    bool converged = false;
    Method method = Method::nelder_mead;
    int iterations = 0;
};

// Reflect u into [0,1], wrap phi_u into [0, 2pi). Used for every trial
// point proposed during minimization.
inline InitialPoint map_into_domain(double u, double phi_u) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    u = std::fmod(u, 2.0);
    if (u < 0.0) u += 2.0;
    if (u > 1.0) u = 2.0 - u;
    phi_u = std::fmod(phi_u, two_pi);
    if (phi_u < 0.0) phi_u += two_pi;
    return {u, phi_u};
}

inline double wrap_angle_diff(double dphi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    dphi = std::remainder(dphi, two_pi);
    if (dphi <= -std::numbers::pi) dphi += two_pi;
    return dphi;
}

namespace detail {

struct LineSearchResult {
    InitialPoint x;
    double f;
    bool ok;
};

// Backtracking Armijo search along p from x.
template <typename FVal>
LineSearchResult backtrack(FVal&& fval, const InitialPoint& x, double f0,
                           const std::array<double, 2>& g, const std::array<double, 2>& p) {
    const double c1 = 1e-4;
    const double gp = g[0] * p[0] + g[1] * p[1];
    double alpha = 1.0;
    for (int i = 0; i < 40; ++i) {
        const InitialPoint xn = map_into_domain(x.u + alpha * p[0], x.phi_u + alpha * p[1]);
        const double fn = fval(xn);
        if (fn <= f0 + c1 * alpha * gp) return {xn, fn, true};
        alpha *= 0.5;
    }
    return {x, f0, false};
}

inline std::array<double, 2> effective_step(const InitialPoint& from, const InitialPoint& to) {
    return {to.u - from.u, wrap_angle_diff(to.phi_u - from.phi_u)};
}

inline ShootingResult finish(const InitialPoint& x, double xi_max, const ShootingOptions& opt,
                             Method m, int iterations, bool terminated) {
    const ErrorD e = error_d(x, xi_max, opt);
    ShootingResult r;
    r.x_star = x;
    r.xi_qb = e.xi_star;
    r.d_error = e.d;
    r.method = m;
    r.iterations = iterations;
    r.converged = terminated && e.d < opt.d_threshold;
    return r;
}

inline ShootingResult minimize_nelder_mead(const InitialPoint& start, double xi_max,
                                           const ShootingOptions& opt) {
    auto feval = [&](double u, double p) {
        return error_d(map_into_domain(u, p), xi_max, opt).d;
    };

    struct Vertex {
        std::array<double, 2> x;
        double f;
    };
    std::array<Vertex, 3> s;
    s[0] = {{start.u, start.phi_u}, feval(start.u, start.phi_u)};
    s[1] = {{start.u + 0.05, start.phi_u}, feval(start.u + 0.05, start.phi_u)};
    const double dphi = 0.05 * std::numbers::pi;
    s[2] = {{start.u, start.phi_u + dphi}, feval(start.u, start.phi_u + dphi)};

    auto order = [&] {
        std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    auto dist = [](const Vertex& a, const Vertex& b) {
        return std::hypot(a.x[0] - b.x[0], a.x[1] - b.x[1]);
    };

    int iter = 0;
    bool terminated = false;
    for (; iter < opt.max_iters; ++iter) {
        order();
        const double diameter = std::max({dist(s[0], s[1]), dist(s[0], s[2]), dist(s[1], s[2])});
        const double spread = s[2].f - s[0].f;
        if (diameter < 1e-6 || spread < 1e-10) {
            terminated = true;
            break;
        }

        const std::array<double, 2> c = {0.5 * (s[0].x[0] + s[1].x[0]),
                                         0.5 * (s[0].x[1] + s[1].x[1])};
        auto along = [&](double t) {
            return std::array<double, 2>{c[0] + t * (c[0] - s[2].x[0]),
                                         c[1] + t * (c[1] - s[2].x[1])};
        };

        const auto xr = along(1.0);
        const double fr = feval(xr[0], xr[1]);
        if (fr < s[0].f) {
            const auto xe = along(2.0);
            const double fe = feval(xe[0], xe[1]);
            s[2] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < s[1].f) {
            s[2] = {xr, fr};
        } else {
            // outside contraction against the reflected point when it helps,
            // inside contraction otherwise; shrink on failure
            const bool outside = fr < s[2].f;
            const auto xc = along(outside ? 0.5 : -0.5);
            const double fc = feval(xc[0], xc[1]);
            if (fc < std::min(fr, s[2].f)) {
                s[2] = {xc, fc};
            } else {
                for (int i = 1; i < 3; ++i) {
                    s[i].x = {s[0].x[0] + 0.5 * (s[i].x[0] - s[0].x[0]),
                              s[0].x[1] + 0.5 * (s[i].x[1] - s[0].x[1])};
                    s[i].f = feval(s[i].x[0], s[i].x[1]);
                }
            }
        }
    }
    order();
    const InitialPoint best = map_into_domain(s[0].x[0], s[0].x[1]);
    return finish(best, xi_max, opt, Method::nelder_mead, iter, terminated);
}

inline ShootingResult minimize_quasi_newton(const InitialPoint& start, double xi_max,
                                            const ShootingOptions& opt, Method method) {
    auto fval = [&](const InitialPoint& x) { return error_d(x, xi_max, opt).d; };

    constexpr double g_tol = 1e-6;
    constexpr double step_tol = 1e-9;
    constexpr double f_tol = 1e-14;

    InitialPoint x = map_into_domain(start.u, start.phi_u);
    double f = fval(x);
    std::array<double, 2> g = grad_d(x, xi_max, opt);

    // inverse-Hessian approximation (BFGS); identity means steepest descent
    std::array<std::array<double, 2>, 2> Hinv = {{{1.0, 0.0}, {0.0, 1.0}}};

    int iter = 0;
    bool terminated = false;
    for (; iter < opt.max_iters; ++iter) {
        if (std::hypot(g[0], g[1]) < g_tol) {
            terminated = true;
            break;
        }

        std::array<double, 2> p;
        if (method == Method::newton) {
            // finite-difference Hessian from the gradient, symmetrized
            const double h_eps = 1e-4;
            std::array<std::array<double, 2>, 2> H;
            for (int j = 0; j < 2; ++j) {
                double e = h_eps;
                const double hi = j == 0 ? 1.0 : 2.0 * std::numbers::pi;
                const double xj = j == 0 ? x.u : x.phi_u;
                if (xj + e > hi) e = -e;
                InitialPoint xp = x;
                (j == 0 ? xp.u : xp.phi_u) += e;
                const auto gp = grad_d(xp, xi_max, opt);
                H[0][j] = (gp[0] - g[0]) / e;
                H[1][j] = (gp[1] - g[1]) / e;
            }
            const double h01 = 0.5 * (H[0][1] + H[1][0]);
            const double det = H[0][0] * H[1][1] - h01 * h01;
            if (H[0][0] > 0.0 && det > 0.0) {
                p = {(-g[0] * H[1][1] + g[1] * h01) / det,
                     (-g[1] * H[0][0] + g[0] * h01) / det};
            } else {
                p = {-g[0], -g[1]};  // gradient-descent fallback
            }
        } else {
            p = {-(Hinv[0][0] * g[0] + Hinv[0][1] * g[1]),
                 -(Hinv[1][0] * g[0] + Hinv[1][1] * g[1])};
        }
        if (p[0] * g[0] + p[1] * g[1] >= 0.0) {
            p = {-g[0], -g[1]};
            Hinv = {{{1.0, 0.0}, {0.0, 1.0}}};
        }

        const auto ls = backtrack(fval, x, f, g, p);
        if (!ls.ok) {
            terminated = true;
            break;
        }
        const auto gn = grad_d(ls.x, xi_max, opt);
        const auto sv = effective_step(x, ls.x);
        const std::array<double, 2> yv = {gn[0] - g[0], gn[1] - g[1]};

        if (method == Method::bfgs) {
            const double sy = sv[0] * yv[0] + sv[1] * yv[1];
            if (sy > 1e-12) {
                const double rho = 1.0 / sy;
                // H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
                std::array<std::array<double, 2>, 2> A;  // I - rho s y^T
                A[0][0] = 1.0 - rho * sv[0] * yv[0];
                A[0][1] = -rho * sv[0] * yv[1];
                A[1][0] = -rho * sv[1] * yv[0];
                A[1][1] = 1.0 - rho * sv[1] * yv[1];
                std::array<std::array<double, 2>, 2> T;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        T[i][j] = A[i][0] * Hinv[0][j] + A[i][1] * Hinv[1][j];
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        Hinv[i][j] = T[i][0] * A[j][0] + T[i][1] * A[j][1] +
                                     rho * sv[i] * sv[j];
            } else {
                Hinv = {{{1.0, 0.0}, {0.0, 1.0}}};
            }
        }

        const double df = std::abs(f - ls.f);
        const double smax = std::max(std::abs(sv[0]), std::abs(sv[1]));
        x = ls.x;
        f = ls.f;
        g = gn;
        if (smax < step_tol || df < f_tol) {
            ++iter;
            terminated = true;
            break;
        }
    }
    return finish(x, xi_max, opt, method, iter, terminated);
}

}  // namespace detail

// Local minimization of D from x_init with the chosen method. Hitting the
// iteration cap yields a non-converged result rather than an exception.
inline ShootingResult minimize(const InitialPoint& x_init, Method method, double xi_max,
                               const ShootingOptions& opt = {}) {
    if (!x_init.in_domain()) throw std::domain_error("minimize: start outside domain");
    switch (method) {
        case Method::nelder_mead: return detail::minimize_nelder_mead(x_init, xi_max, opt);
        case Method::bfgs:
        case Method::newton: return detail::minimize_quasi_newton(x_init, xi_max, opt, method);
    }
    throw std::logic_error("minimize: unreachable");
}

struct ScanPoint {
    double u = 0.0;
    double phi_u = 0.0;
    double d = 0.0;
    double xi_star = 0.0;
    int basin = 0;  // 0: none/raw scan, 1: phi* in [0,pi], 2: phi* in (pi,2pi)
};

struct ScanMap {
    int n = 0;
    double xi_max = 0.0;
    bool minimized = false;
    std::vector<ScanPoint> points;  // row-major over (i_u, i_phi), (n+1)^2 entries

    const ScanPoint& at(int i_u, int i_phi) const {
        return points[static_cast<std::size_t>(i_u) * static_cast<std::size_t>(n + 1) +
                      static_cast<std::size_t>(i_phi)];
    }

    void write_csv(std::ostream& os) const {
        os << "u,phi_u,D,xi_star\n";
        for (const auto& p : points)
            os << fmt_g17(p.u) << ',' << fmt_g17(p.phi_u) << ',' << fmt_g17(p.d) << ','
               << fmt_g17(p.xi_star) << '\n';
    }
};

// Samples u = i/n, phi_u = 2pi j/n over the full product grid. With
// minimize_each the map records where each start terminates (basin
// membership); otherwise it records the raw error D.
inline ScanMap grid_scan(int n, double xi_max, bool minimize_each,
                         const ShootingOptions& opt = {}, unsigned jobs = 0,
                         Method method = Method::nelder_mead) {
    if (n < 2) throw std::domain_error("grid_scan: n must be >= 2");
    ScanMap map;
    map.n = n;
    map.xi_max = xi_max;
    map.minimized = minimize_each;
    const std::size_t side = static_cast<std::size_t>(n) + 1;
    map.points.resize(side * side);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    parallel_for(side * side, jobs, [&](std::size_t idx) {
        const std::size_t i = idx / side;
        const std::size_t j = idx % side;
        ScanPoint p;
        p.u = static_cast<double>(i) / n;
        p.phi_u = two_pi * static_cast<double>(j) / n;
        const InitialPoint x0 = map_into_domain(p.u, p.phi_u);
        if (minimize_each) {
            const ShootingResult r = minimize(x0, method, xi_max, opt);
            p.d = r.d_error;
            p.xi_star = r.xi_qb;
            p.basin = r.converged ? (r.x_star.phi_u <= std::numbers::pi ? 1 : 2) : 0;
        } else {
            const ErrorD e = error_d(x0, xi_max, opt);
            p.d = e.d;
            p.xi_star = e.xi_star;
        }
        map.points[idx] = p;
    });
    return map;
}

struct MultistartOptions {
    int grid_n = 8;                       // grid_n x grid_n cell-centered starts
    Method method = Method::nelder_mead;
    unsigned jobs = 0;
};

// Runs minimize from a coarse grid of starts (cell centers of an
// grid_n x grid_n partition of the disc). Wide xi windows admit a family
// of longer solutions that also satisfy the final conditions, so among
// converged candidates the smallest conversion time wins (that is the
// quantity being minimized); without any converged candidate the smallest
// error wins. Ties resolve to the lowest start index, which makes the
// result deterministic under any thread count.
inline ShootingResult solve_multistart(double xi_max, const MultistartOptions& ms = {},
                                       const ShootingOptions& opt = {}) {
    if (ms.grid_n < 1) throw std::domain_error("solve_multistart: grid_n must be >= 1");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const std::size_t n_starts = static_cast<std::size_t>(ms.grid_n) * ms.grid_n;

    std::vector<ShootingResult> results(n_starts);
    parallel_for(n_starts, ms.jobs, [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / ms.grid_n;
        const int j = static_cast<int>(idx) % ms.grid_n;
        const InitialPoint start{(i + 0.5) / ms.grid_n, two_pi * (j + 0.5) / ms.grid_n};
        results[idx] = minimize(start, ms.method, xi_max, opt);
    });

    auto better = [](const ShootingResult& a, const ShootingResult& b) {
        if (a.converged != b.converged) return a.converged;
        if (a.converged) {
            if (a.xi_qb != b.xi_qb) return a.xi_qb < b.xi_qb;
        }
        return a.d_error < b.d_error;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i)
        if (better(results[i], results[best])) best = i;
    return results[best];
}

struct XiMaxEntry {
    double xi_max = 0.0;
    double best_d = 0.0;
    double xi = 0.0;
};

// For each upper bound, the global minimum of D over the disc and the
// corresponding conversion time.
inline std::vector<XiMaxEntry> verify_xi_max(const std::vector<double>& xi_values,
                                             const MultistartOptions& ms = {},
                                             const ShootingOptions& opt = {}) {
    if (xi_values.empty()) throw std::domain_error("verify_xi_max: empty list");
    for (double v : xi_values)
        if (!(v > 0.0)) throw std::domain_error("verify_xi_max: xi_max values must be > 0");
    std::vector<XiMaxEntry> table;
    table.reserve(xi_values.size());
    for (double xi_max : xi_values) {
        const ShootingResult r = solve_multistart(xi_max, ms, opt);
        table.push_back({xi_max, r.d_error, r.xi_qb});
    }
    return table;
}

}  // namespace qbrachy
