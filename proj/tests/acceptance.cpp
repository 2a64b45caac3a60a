// Acceptance suite: drives the solver end to end and prints one PASS/FAIL
// line per criterion. The headline and determinism criteria run the actual
// CLI binary (path in argv[1]); the remaining checks run in-process on an
// identically configured solve.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbrachy/pipeline.hpp"

using namespace qbrachy;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

int g_failures = 0;

void report(int criterion, const std::string& label, bool pass, const std::string& detail) {
    std::printf("%s  [%d] %s: %s\n", pass ? "PASS" : "FAIL", criterion, label.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string format(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) {
    return nlohmann::json::parse(read_text_file(p.string()));
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    return read_text_file(a.string()) == read_text_file(b.string());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-cli>\n");
        return 64;
    }
    const std::string cli = argv[1];
    const fs::path work = fs::temp_directory_path() /
                          ("qbrachy_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);
    std::printf("work dir: %s\n", work.string().c_str());

    // ---- criterion 1: headline numbers from a default CLI solve ----------
    const fs::path run_a = work / "solve_a";
    const auto t0 = std::chrono::steady_clock::now();
    const int rc1 = run_cli(cli, "solve --out-dir \"" + run_a.string() + "\"",
                            work / "solve_a.log");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool c1 = rc1 == 0;
    double t_qb = 0.0;
    if (c1) {
        const auto rep = read_json(run_a / "report.json");
        const double u = rep["u"];
        const double phi = rep["phi_u"];
        const double xi = rep["xi_qb"];
        const double d = rep["d_error"];
        t_qb = rep["t_qb_hbar_over_E"];
        const double phi_fold = std::min(phi, 2.0 * pi - phi);  // mirror solution accepted
        c1 = std::abs(u - 0.957) <= 0.002 && std::abs(phi_fold - 0.311 * pi) <= 0.002 * pi &&
             std::abs(xi - 2.72) <= 0.01 && std::abs(t_qb - 6.8) <= 0.1 && d < 1e-3 &&
             secs < 120.0;
        report(1, "headline reproduction",
               c1,
               format("u=%.5f phi_u=%.5f pi Xi=%.4f T=%.4f hbar/E D=%.2e (%.1f s)", u,
                      phi / pi, xi, t_qb, d, secs));
    } else {
        report(1, "headline reproduction", false, format("CLI exit code %d", rc1));
    }

    // ---- in-process reference solve (same defaults) -----------------------
    const SolveConfig cfg;
    const SolveReport rep = run_solve(cfg);
    const double lam = rep.best.xi_qb / rep.t_qb;

    // ---- criterion 2: the three minimizers agree --------------------------
    {
        bool ok = true;
        std::string detail;
        for (const InitialPoint start : {InitialPoint{0.9, 0.3 * pi}, InitialPoint{0.9, 1.7 * pi}}) {
            std::vector<ShootingResult> rs;
            for (Method m : {Method::nelder_mead, Method::bfgs, Method::newton})
                rs.push_back(minimize(start, m, 5.0));
            for (const auto& r : rs) ok = ok && r.converged;
            for (std::size_t i = 0; i < rs.size(); ++i)
                for (std::size_t j = i + 1; j < rs.size(); ++j)
                    ok = ok && std::abs(rs[i].x_star.u - rs[j].x_star.u) < 1e-3 &&
                         std::abs(rs[i].x_star.phi_u - rs[j].x_star.phi_u) < 1e-3;
            detail += format("start(%.2f,%.2fpi)->(%.4f,%.4fpi) ", start.u, start.phi_u / pi,
                             rs[0].x_star.u, rs[0].x_star.phi_u / pi);
        }
        report(2, "minimizer agreement", ok, detail);
    }

    // ---- criterion 3: trapezoid-protocol duration ratios ------------------
    {
        const fs::path ds_dir = work / "ds";
        const int rc = run_cli(cli,
                               format("ds-compare --t-qb %.17g --out-dir \"%s\"", t_qb,
                                      ds_dir.string().c_str()),
                               work / "ds.log");
        bool ok = rc == 0;
        double r0 = 0.0, r13 = 0.0;
        if (ok) {
            const auto table = read_json(ds_dir / "report.json")["table"];
            r0 = table[0]["ratio"];
            r13 = table[1]["ratio"];
            ok = std::abs(r0 - 1.33) <= 0.02 && std::abs(r13 - 1.66) <= 0.02;
        }
        report(3, "baseline ratios", ok,
               format("T_DS/T_QB(tau=0)=%.4f (1.33+-0.02), (tau=1/3)=%.4f (1.66+-0.02)", r0,
                      r13));
    }

    // ---- criterion 4: xi_max sweep -----------------------------------------
    {
        const auto table = verify_xi_max({2.0, 2.5, 3.0, 5.0, 10.0}, {8, Method::nelder_mead, 0});
        bool ok = true;
        std::string detail;
        for (const auto& row : table) {
            const bool below = row.xi_max < 2.7;
            const bool row_ok =
                below ? row.best_d > 1e-3 : (row.best_d < 1e-3 && std::abs(row.xi - 2.72) <= 0.01);
            ok = ok && row_ok;
            detail += format("ximax=%.1f: D=%.1e Xi=%.3f; ", row.xi_max, row.best_d, row.xi);
        }
        report(4, "xi_max sweep", ok, detail);
    }

    // ---- criterion 5: complex-propagation oracle equivalence --------------
    {
        bool ok = true;
        double worst_mismatch = 0.0, worst_fid = 1.0;
        for (const auto& [p1, p3] : {std::pair{0.0, 0.0}, std::pair{0.7, -1.2}}) {
            for (double vphi : {0.0, pi / 3, pi}) {
                const PhaseSet ph = derive_phases(p1, p3, vphi);
                const PhysicalPulses pulses =
                    to_physical(rep.traj, rep.best.x_star, rep.best.xi_qb, ph, cfg.energy);
                const Propagation prop =
                    propagate(ComplexState{{}, {1.0, 0.0}, {}, {}}, sample_pulses(pulses),
                              pulses.t_qb, pulses.size() - 1);
                for (std::size_t i = 0; i < prop.t.size(); ++i) {
                    const ScaledState ref =
                        rep.traj.at(std::min(prop.t[i] * lam, rep.traj.grid.xi_max));
                    const auto m = prop.states[i].moduli();
                    const std::array<double, 4> rm = {std::abs(ref.psi_g), std::abs(ref.psi_w),
                                                      std::abs(ref.psi_wp), std::abs(ref.psi_r)};
                    for (int k = 0; k < 4; ++k)
                        worst_mismatch = std::max(
                            worst_mismatch,
                            std::abs(m[static_cast<std::size_t>(k)] -
                                     rm[static_cast<std::size_t>(k)]));
                }
                worst_fid = std::min(worst_fid, fidelity_ghz(prop.states.back(), vphi));
            }
        }
        ok = worst_mismatch < 1e-6 && worst_fid >= 0.999;
        report(5, "oracle equivalence", ok,
               format("max |moduli mismatch|=%.2e (<1e-6), min fidelity=%.6f (>=0.999)",
                      worst_mismatch, worst_fid));
    }

    // ---- criterion 6: conservation suite -----------------------------------
    {
        const auto cons = rep.traj.conservation();
        const double p0 = rep.traj.states.front().pulse_norm2();
        const PhaseSet ph = derive_phases(0.0, 0.0, 0.0);
        const FTraceDrift tr = f_trace_invariants(rep.traj, ph);
        const double f_res = check_f_evolution(rep.traj, ph);
        const bool ok = cons.pulse_drift / p0 < 1e-6 && cons.costate_drift < 1e-6 &&
                        cons.norm_drift < 1e-6 && tr.tr2_rel < 1e-6 && tr.tr3_rel < 1e-6 &&
                        f_res < 1e-4;
        report(6, "conservation suite", ok,
               format("drifts: u=%.1e w=%.1e psi=%.1e trF2=%.1e trF3=%.1e; F-residual=%.1e",
                      cons.pulse_drift / p0, cons.costate_drift, cons.norm_drift, tr.tr2_rel,
                      tr.tr3_rel, f_res));
    }

    // ---- criterion 7: boundary structure -----------------------------------
    {
        const ScaledState end = rep.traj.at(rep.best.xi_qb);
        const double om3_0 = rep.pulses.mod[2].front();
        const double om2_T = rep.pulses.mod[1].back();
        const double wr_mismatch = std::abs(lam * (end.w_wr - end.u1));
        const double gwp_mismatch = std::abs(lam * (end.w_gwp - end.u3));
        const bool ok =
            om3_0 < 1e-3 && om2_T < 1e-3 && wr_mismatch < 1e-3 && gwp_mismatch < 1e-3;
        report(7, "boundary structure", ok,
               format("|Om3(0)|=%.1e |Om2(T)|=%.1e |lamWr-Om1|(T)=%.1e |lamgW'-Om3|(T)=%.1e",
                      om3_0, om2_T, wr_mismatch, gwp_mismatch));
    }

    // ---- criterion 8: robustness properties ---------------------------------
    {
        std::vector<double> fr;
        for (int i = 0; i <= 10; ++i) fr.push_back(0.02 * i);
        const std::vector<int> kappas = {1, 2, 3};
        std::array<std::vector<SweepCell>, 3> sweeps;
        for (int n = 1; n <= 3; ++n)
            sweeps[static_cast<std::size_t>(n - 1)] =
                infidelity_sweep(rep.pulses, n, kappas, fr, 0.0, 0);

        bool baseline_ok = true, monotone_ok = true;
        for (const auto& cells : sweeps) {
            double prev = -1.0;
            for (const auto& c : cells) {
                if (!c.ok) baseline_ok = false;
                if (c.t_frac == 0.0) baseline_ok = baseline_ok && c.infidelity < 1e-3;
                if (c.kappa == 1 && c.t_frac <= 0.15 + 1e-12) {
                    if (prev >= 0.0) monotone_ok = monotone_ok && c.infidelity >= prev - 1e-12;
                    prev = c.infidelity;
                }
            }
        }

        // strict ordering as stated, plus the same comparison with a 1e-9
        // significance floor (sub-nanoscale responses at kappa=3 genuinely
        // invert; see the analysis note in the repository docs)
        bool order_strict = true, order_floored = true;
        double worst_excess = 0.0;
        int inverted = 0;
        for (std::size_t i = 0; i < sweeps[0].size(); ++i) {
            const double i1 = sweeps[0][i].infidelity;
            const double i3 = sweeps[2][i].infidelity;
            if (i1 > i3) {
                order_strict = false;
                ++inverted;
                worst_excess = std::max(worst_excess, i1 - i3);
            }
            if (i1 > i3 + 1e-9) order_floored = false;
        }
        const bool ok = baseline_ok && monotone_ok && order_strict;
        report(8, "robustness properties", ok,
               format("baseline<1e-3: %s; monotone(kappa=1): %s; Om1<=Om3 strict: %s "
                      "(%d inverted cells, max excess %.1e; with 1e-9 floor: %s)",
                      baseline_ok ? "yes" : "no", monotone_ok ? "yes" : "no",
                      order_strict ? "yes" : "no", inverted, worst_excess,
                      order_floored ? "yes" : "no"));
    }

    // ---- criterion 9: byte-identical reruns ---------------------------------
    {
        const fs::path run_b = work / "solve_b";
        const int rc = run_cli(cli, "solve --out-dir \"" + run_b.string() + "\"",
                               work / "solve_b.log");
        bool ok = rc == 0 && rc1 == 0;
        std::string detail = "files: ";
        for (const char* f :
             {"report.json", "trajectory.csv", "pulses.csv", "fidelity.csv", "states.csv"}) {
            const bool same = ok && same_bytes(run_a / f, run_b / f);
            detail += format("%s=%s ", f, same ? "identical" : "DIFFERENT");
            ok = ok && same;
        }
        report(9, "determinism", ok, detail);
    }

    std::printf("%s (%d/9 criteria failed)\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
