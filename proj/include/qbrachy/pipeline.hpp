#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qbrachy/ds_baseline.hpp"
#include "qbrachy/io.hpp"
#include "qbrachy/phases.hpp"
#include "qbrachy/propagator.hpp"
#include "qbrachy/robustness.hpp"
#include "qbrachy/shooting.hpp"

namespace qbrachy {

using json = nlohmann::ordered_json;

struct SolveConfig {
    double xi_max = 5.0;
    ShootingOptions shooting{};
    int multistart_n = 8;
    Method method = Method::nelder_mead;
    double phi1 = 0.0;
    double phi3 = 0.0;
    double varphi = 0.0;
    double phi_w = 0.0;
    double energy = 1.0;
    unsigned jobs = 0;
};

struct SolveReport {
    ShootingResult best;
    double t_qb = 0.0;
    PhaseSet phases;
    Trajectory traj;
    PhysicalPulses pulses;  // empty unless converged
};

// Full solve: multistart minimization, canonicalization of the mirror
// branch (the two global minima map onto each other under
// phi_u -> 2pi - phi_u; the phi_u <= pi representative is reported), and
// pulse reconstruction.
inline SolveReport run_solve(const SolveConfig& cfg) {
    const MultistartOptions ms{cfg.multistart_n, cfg.method, cfg.jobs};
    ShootingResult best = solve_multistart(cfg.xi_max, ms, cfg.shooting);
    if (best.x_star.phi_u > std::numbers::pi) {
        best.x_star.phi_u = 2.0 * std::numbers::pi - best.x_star.phi_u;
        const ErrorD e = error_d(best.x_star, cfg.xi_max, cfg.shooting);
        best.xi_qb = e.xi_star;
        best.d_error = e.d;
        best.converged = best.converged && e.d < cfg.shooting.d_threshold;
    }

    SolveReport rep;
    rep.best = best;
    rep.phases = derive_phases(cfg.phi1, cfg.phi3, cfg.varphi, cfg.phi_w);
    rep.traj = integrate(best.x_star, XiGrid::with_step(cfg.xi_max, cfg.shooting.step));
    rep.t_qb = best.x_star.u * best.x_star.u * best.xi_qb * best.xi_qb / cfg.energy;
    if (best.converged)
        rep.pulses = to_physical(rep.traj, best.x_star, best.xi_qb, rep.phases, cfg.energy);
    return rep;
}

inline json shooting_result_json(const ShootingResult& r, double energy) {
    return json{
        {"u", r.x_star.u},
        {"phi_u", r.x_star.phi_u},
        {"xi_qb", r.xi_qb},
        {"d_error", r.d_error},
        {"method", to_string(r.method)},
        {"converged", r.converged},
        {"t_qb_hbar_over_E", r.x_star.u * r.x_star.u * r.xi_qb * r.xi_qb / energy},
    };
}

// Fidelity and state-component series of the reduced trajectory over the
// protocol interval, against physical time. Both depend on the moduli
// only, so the emitted bytes are independent of the chosen phases.
inline std::string trajectory_fidelity_csv(const SolveReport& rep) {
    std::ostringstream os;
    os << "t,fidelity\n";
    const double lam = rep.best.xi_qb / rep.t_qb;
    const auto& xs = rep.traj.grid.values;
    auto row = [&](double xi, const ScaledState& s) {
        const double f = (std::abs(s.psi_g) + std::abs(s.psi_r)) / std::numbers::sqrt2;
        os << fmt_g17(xi / lam) << ',' << fmt_g17(f) << '\n';
    };
    for (std::size_t i = 0; i < xs.size() && xs[i] < rep.best.xi_qb; ++i)
        row(xs[i], rep.traj.states[i]);
    row(rep.best.xi_qb, rep.traj.at(rep.best.xi_qb));
    return os.str();
}

inline std::string trajectory_states_csv(const SolveReport& rep) {
    std::ostringstream os;
    os << "t,abs_psi_g,abs_psi_w,abs_psi_wp,abs_psi_r\n";
    const double lam = rep.best.xi_qb / rep.t_qb;
    const auto& xs = rep.traj.grid.values;
    auto row = [&](double xi, const ScaledState& s) {
        os << fmt_g17(xi / lam) << ',' << fmt_g17(std::abs(s.psi_g)) << ','
           << fmt_g17(std::abs(s.psi_w)) << ',' << fmt_g17(std::abs(s.psi_wp)) << ','
           << fmt_g17(std::abs(s.psi_r)) << '\n';
    };
    for (std::size_t i = 0; i < xs.size() && xs[i] < rep.best.xi_qb; ++i)
        row(xs[i], rep.traj.states[i]);
    row(rep.best.xi_qb, rep.traj.at(rep.best.xi_qb));
    return os.str();
}

// Writes report.json plus, for converged solves, the trajectory, pulse,
// fidelity and state-component tables.
inline void write_solve_outputs(const SolveReport& rep, const SolveConfig& cfg,
                                const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    json report = shooting_result_json(rep.best, cfg.energy);
    report["iterations"] = rep.best.iterations;
    report["xi_max"] = cfg.xi_max;
    report["energy"] = cfg.energy;
    report["phi1"] = cfg.phi1;
    report["phi3"] = cfg.phi3;
    report["varphi"] = cfg.varphi;
    report["multistart"] = cfg.multistart_n;
    write_text_file(out_dir + "/report.json", report.dump(2) + "\n");

    if (!rep.best.converged) return;

    {
        std::ostringstream os;
        rep.traj.write_csv(os);
        write_text_file(out_dir + "/trajectory.csv", os.str());
    }
    {
        std::ostringstream os;
        rep.pulses.write_csv(os);
        write_text_file(out_dir + "/pulses.csv", os.str());
    }
    write_text_file(out_dir + "/fidelity.csv", trajectory_fidelity_csv(rep));
    write_text_file(out_dir + "/states.csv", trajectory_states_csv(rep));
}

}  // namespace qbrachy
