// Command-line front end: solves the time-optimal W-to-GHZ conversion,
// scans the initial-value landscape, sweeps the window bound, compares
// against the trapezoid reference protocol and maps pulse-distortion
// robustness. Outputs are plot-ready CSV/JSON files with deterministic
// content; rerunning a command reproduces them byte for byte.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qbrachy/pipeline.hpp"

namespace {

using namespace qbrachy;

constexpr double pi = std::numbers::pi;

struct CommonOpts {
    std::string out_dir = "qbrachy_out";
    unsigned jobs = 0;  // 0 = hardware concurrency
    std::string format = "csv";
};

std::string resolve_out_dir(const CommonOpts& c) {
    if (const char* env = std::getenv("QBRACHY_OUT"); env != nullptr && *env != '\0')
        return env;
    return c.out_dir;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("-o,--out-dir", c.out_dir,
                    "Output directory (env QBRACHY_OUT overrides)");
    cmd->add_option("-j,--jobs", c.jobs, "Worker thread cap (0 = hardware)");
    cmd->add_option("--format", c.format, "Data table format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
}

const std::map<std::string, Method> method_names{{"nelder-mead", Method::nelder_mead},
                                                 {"nm", Method::nelder_mead},
                                                 {"bfgs", Method::bfgs},
                                                 {"newton", Method::newton}};

void add_solve_opts(CLI::App* cmd, SolveConfig& cfg) {
    cmd->add_option("--xi-max", cfg.xi_max, "Upper bound of the scaled time window");
    cmd->add_option("--step", cfg.shooting.step, "Integration step in xi");
    cmd->add_option("--multistart", cfg.multistart_n, "Starts per axis of the coarse grid");
    cmd->add_option("--method", cfg.method, "Minimizer: nelder-mead | bfgs | newton")
        ->transform(CLI::CheckedTransformer(method_names));
    cmd->add_option("--phi1", cfg.phi1, "Free phase of pulse 1 (rad)");
    cmd->add_option("--phi3", cfg.phi3, "Free phase of pulse 3 (rad)");
    cmd->add_option("--varphi", cfg.varphi, "GHZ target phase (rad)");
    cmd->add_option("--phi-w", cfg.phi_w, "Free initial-state phase (rad)");
    cmd->add_option("--energy", cfg.energy, "Total pulse energy scale E");
}

void write_report(const std::string& out_dir, const json& report) {
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/report.json", report.dump(2) + "\n");
}

int fail_with(const std::string& out_dir, const std::string& msg) {
    write_report(out_dir, json{{"error", msg}});
    std::cerr << "error: " << msg << "\n";
    return 1;
}

// Writes rows either as CSV text or as a JSON array of objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void write(const std::string& path_base, const std::string& format) const {
        if (format == "json") {
            json arr = json::array();
            for (const auto& r : rows) {
                json obj;
                for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = r[c];
                arr.push_back(obj);
            }
            write_text_file(path_base + ".json", arr.dump(2) + "\n");
        } else {
            std::ostringstream os;
            for (std::size_t c = 0; c < columns.size(); ++c)
                os << (c ? "," : "") << columns[c];
            os << '\n';
            for (const auto& r : rows) {
                for (std::size_t c = 0; c < r.size(); ++c)
                    os << (c ? "," : "") << fmt_g17(r[c]);
                os << '\n';
            }
            write_text_file(path_base + ".csv", os.str());
        }
    }
};

int cmd_solve(const CommonOpts& common, SolveConfig cfg) {
    cfg.jobs = common.jobs;
    const std::string out_dir = resolve_out_dir(common);
    const SolveReport rep = run_solve(cfg);
    write_solve_outputs(rep, cfg, out_dir);
    const auto& b = rep.best;
    std::cout << "u = " << b.x_star.u << ", phi_u = " << b.x_star.phi_u / pi
              << " pi, Xi = " << b.xi_qb << ", D = " << b.d_error << ", T = " << rep.t_qb
              << " hbar/E, converged = " << b.converged << "\n";
    if (!b.converged) {
        std::cerr << "solve did not converge below the 0.1% threshold\n";
        return 2;
    }
    return 0;
}

int cmd_scan(const CommonOpts& common, int n, double xi_max, double step, bool minimize_each,
             Method method) {
    const std::string out_dir = resolve_out_dir(common);
    ShootingOptions opt;
    opt.step = step;
    const ScanMap map = grid_scan(n, xi_max, minimize_each, opt, common.jobs, method);

    std::filesystem::create_directories(out_dir);
    if (common.format == "json") {
        json arr = json::array();
        for (const auto& p : map.points)
            arr.push_back(json{{"u", p.u},
                               {"phi_u", p.phi_u},
                               {"D", p.d},
                               {"xi_star", p.xi_star},
                               {"basin", p.basin}});
        write_text_file(out_dir + "/scan.json", arr.dump(2) + "\n");
    } else {
        std::ostringstream os;
        map.write_csv(os);
        write_text_file(out_dir + "/scan.csv", os.str());
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < map.points.size(); ++i)
        if (map.points[i].d < map.points[best].d) best = i;
    const auto& bp = map.points[best];
    write_report(out_dir, json{{"n", n},
                               {"xi_max", xi_max},
                               {"minimized", minimize_each},
                               {"best", json{{"u", bp.u},
                                             {"phi_u", bp.phi_u},
                                             {"D", bp.d},
                                             {"xi_star", bp.xi_star}}}});
    std::cout << "scan minimum: D = " << bp.d << " at (u, phi_u) = (" << bp.u << ", "
              << bp.phi_u / pi << " pi)\n";
    return 0;
}

int cmd_verify_ximax(const CommonOpts& common, const std::vector<double>& xi_values,
                     int multistart_n, Method method, double step) {
    const std::string out_dir = resolve_out_dir(common);
    ShootingOptions opt;
    opt.step = step;
    const MultistartOptions ms{multistart_n, method, common.jobs};
    const auto table = verify_xi_max(xi_values, ms, opt);

    Table t;
    t.columns = {"xi_max", "best_d", "xi"};
    json rows = json::array();
    for (const auto& row : table) {
        t.rows.push_back({row.xi_max, row.best_d, row.xi});
        rows.push_back(json{{"xi_max", row.xi_max}, {"best_d", row.best_d}, {"xi", row.xi}});
        std::cout << "xi_max = " << row.xi_max << ": best D = " << row.best_d
                  << ", Xi = " << row.xi << "\n";
    }
    std::filesystem::create_directories(out_dir);
    t.write(out_dir + "/ximax_sweep", common.format);
    write_report(out_dir, json{{"table", rows}});
    return 0;
}

int cmd_ds_compare(const CommonOpts& common, SolveConfig cfg, const std::vector<double>& taus,
                   double t_qb_given) {
    cfg.jobs = common.jobs;
    const std::string out_dir = resolve_out_dir(common);

    double t_qb = t_qb_given;
    json solve_part;
    if (!(t_qb > 0.0)) {
        const SolveReport rep = run_solve(cfg);
        solve_part = shooting_result_json(rep.best, cfg.energy);
        if (!rep.best.converged) {
            write_report(out_dir, json{{"solve", solve_part},
                                       {"error", "reference solve did not converge"}});
            return 2;
        }
        t_qb = rep.t_qb;
    }

    Table t;
    t.columns = {"tau", "t_ds", "t_qb", "ratio"};
    json rows = json::array();
    for (double tau : taus) {
        const DsComparison c = compare_ds(tau, t_qb, cfg.energy);
        t.rows.push_back({c.tau, c.t_ds, c.t_qb, c.ratio});
        rows.push_back(
            json{{"tau", c.tau}, {"t_ds", c.t_ds}, {"t_qb", c.t_qb}, {"ratio", c.ratio}});
        std::cout << "tau = " << c.tau << ": T_DS = " << c.t_ds
                  << " hbar/E, ratio T_DS/T_QB = " << c.ratio << "\n";
    }
    std::filesystem::create_directories(out_dir);
    t.write(out_dir + "/ds_compare", common.format);
    json report{{"table", rows}};
    if (!solve_part.is_null()) report["solve"] = solve_part;
    write_report(out_dir, report);
    return 0;
}

int cmd_robustness(const CommonOpts& common, SolveConfig cfg,
                   const std::vector<int>& pulse_indices, const std::vector<int>& kappas,
                   const std::vector<double>& t_fracs) {
    cfg.jobs = common.jobs;
    const std::string out_dir = resolve_out_dir(common);
    const SolveReport rep = run_solve(cfg);
    if (!rep.best.converged) {
        write_report(out_dir, json{{"solve", shooting_result_json(rep.best, cfg.energy)},
                                   {"error", "reference solve did not converge"}});
        return 2;
    }

    std::vector<SweepCell> all;
    for (int n : pulse_indices) {
        const auto cells =
            infidelity_sweep(rep.pulses, n, kappas, t_fracs, cfg.varphi, common.jobs);
        all.insert(all.end(), cells.begin(), cells.end());
    }

    std::filesystem::create_directories(out_dir);
    if (common.format == "json") {
        json arr = json::array();
        for (const auto& c : all)
            arr.push_back(json{{"pulse_index", c.pulse_index},
                               {"kappa", c.kappa},
                               {"t_n_over_Tqb", c.t_frac},
                               {"infidelity", c.infidelity},
                               {"ok", c.ok}});
        write_text_file(out_dir + "/robustness.json", arr.dump(2) + "\n");
    } else {
        std::ostringstream os;
        write_sweep_csv(os, all);
        write_text_file(out_dir + "/robustness.csv", os.str());
    }

    std::size_t failed = 0;
    double worst = 0.0;
    for (const auto& c : all) {
        if (!c.ok)
            ++failed;
        else
            worst = std::max(worst, c.infidelity);
    }
    write_report(out_dir, json{{"solve", shooting_result_json(rep.best, cfg.energy)},
                               {"cells", all.size()},
                               {"failed_cells", failed},
                               {"max_infidelity", worst}});
    std::cout << "swept " << all.size() << " cells (" << failed
              << " failed), max infidelity = " << worst << "\n";
    return failed == 0 ? 0 : 2;
}

int cmd_selftest(const CommonOpts& common) {
    const std::string out_dir = resolve_out_dir(common);
    json checks = json::array();
    bool all_ok = true;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
        checks.push_back(json{{"name", name}, {"pass", ok}});
        all_ok = all_ok && ok;
    };

    const Trajectory traj = integrate({0.8, 1.1}, XiGrid::with_step(4.0, 1e-3));
    const auto cons = traj.conservation();
    check("pulse-norm conservation < 1e-8", cons.pulse_drift < 1e-8);
    check("costate-norm conservation < 1e-8", cons.costate_drift < 1e-8);
    check("state-norm conservation < 1e-8", cons.norm_drift < 1e-8);

    const ErrorD mirror_a = error_d({0.8, 1.1}, 4.0);
    const ErrorD mirror_b = error_d({0.8, 2.0 * pi - 1.1}, 4.0);
    check("landscape mirror symmetry", std::abs(mirror_a.d - mirror_b.d) < 1e-12);

    const ShootingResult r = minimize({0.9, 0.3 * pi}, Method::nelder_mead, 5.0);
    check("reference minimization converges", r.converged && r.d_error < 1e-3);
    check("conversion time near 2.72", std::abs(r.xi_qb - 2.72) < 0.01);

    const PhaseSet ph = derive_phases(0.0, 0.0, 0.0);
    const Trajectory conv = integrate(r.x_star, XiGrid::with_step(5.0, 1e-3));
    const PhysicalPulses pulses = to_physical(conv, r.x_star, r.xi_qb, ph);
    check("pulse energy round trip", std::abs(pulse_energy_trapezoid(pulses) - 1.0) < 1e-4);
    check("F evolution residual < 1e-4", check_f_evolution(conv, ph) < 1e-4);

    const Propagation prop = propagate(ComplexState{{}, {1.0, 0.0}, {}, {}},
                                       sample_pulses(pulses), pulses.t_qb, pulses.size() - 1);
    check("GHZ fidelity >= 0.999", fidelity_ghz(prop.states.back(), 0.0) >= 0.999);
    check("trapezoid shape integral identity",
          std::abs(trapezoid_f_sq_integral(1.0 / 3.0) - 5.0 / 9.0) < 1e-15);

    write_report(out_dir, json{{"checks", checks}, {"all_pass", all_ok}});
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-optimal W-to-GHZ state conversion solver"};
    app.require_subcommand(1);

    CommonOpts common;
    SolveConfig cfg;

    auto* solve = app.add_subcommand("solve", "Find the time-optimal conversion");
    add_common(solve, common);
    add_solve_opts(solve, cfg);

    auto* scan = app.add_subcommand("scan", "Map D over the initial-value disc");
    int scan_n = 100;
    double scan_xi_max = 5.0;
    double scan_step = 1e-3;
    bool scan_minimize = false;
    Method scan_method = Method::nelder_mead;
    add_common(scan, common);
    scan->add_option("-n,--n", scan_n, "Samples per axis");
    scan->add_option("--xi-max", scan_xi_max, "Window upper bound");
    scan->add_option("--step", scan_step, "Integration step in xi");
    scan->add_flag("--minimize", scan_minimize, "Minimize from every sample");
    scan->add_option("--method", scan_method, "Minimizer for --minimize")
        ->transform(CLI::CheckedTransformer(method_names));

    auto* verify =
        app.add_subcommand("verify-ximax", "Sweep the window bound and track the best error");
    std::vector<double> xi_values = {2.0, 2.5, 3.0, 5.0, 10.0};
    int verify_multistart = 8;
    Method verify_method = Method::nelder_mead;
    double verify_step = 1e-3;
    add_common(verify, common);
    verify->add_option("--xi-max-list", xi_values, "Window bounds to test")->delimiter(',');
    verify->add_option("--multistart", verify_multistart, "Starts per axis");
    verify->add_option("--method", verify_method, "Minimizer")
        ->transform(CLI::CheckedTransformer(method_names));
    verify->add_option("--step", verify_step, "Integration step in xi");

    auto* ds =
        app.add_subcommand("ds-compare", "Duration ratios against the trapezoid protocol");
    std::vector<double> taus = {0.0, 1.0 / 3.0};
    double t_qb_given = 0.0;
    add_common(ds, common);
    add_solve_opts(ds, cfg);
    ds->add_option("--tau-list", taus, "Rise fractions (each in [0, 1/3])")->delimiter(',');
    ds->add_option("--t-qb", t_qb_given, "Skip the solve and use this T_QB (hbar/E)");

    auto* rob = app.add_subcommand("robustness", "Distorted-pulse infidelity sweep");
    std::vector<int> pulse_indices = {1, 2, 3};
    std::vector<int> kappas = {1, 2, 3};
    std::vector<double> t_fracs;
    for (int i = 0; i <= 10; ++i) t_fracs.push_back(0.02 * i);
    add_common(rob, common);
    add_solve_opts(rob, cfg);
    rob->add_option("--pulse-indices", pulse_indices, "Pulses to distort")->delimiter(',');
    rob->add_option("--kappas", kappas, "Modulation rates")->delimiter(',');
    rob->add_option("--t-fracs", t_fracs, "Distortion timescales as fractions of T_QB")
        ->delimiter(',');

    auto* selftest = app.add_subcommand("selftest", "Run the invariant suite");
    add_common(selftest, common);

    CLI11_PARSE(app, argc, argv);

    const std::string out_dir = resolve_out_dir(common);
    try {
        if (solve->parsed()) return cmd_solve(common, cfg);
        if (scan->parsed())
            return cmd_scan(common, scan_n, scan_xi_max, scan_step, scan_minimize,
                            scan_method);
        if (verify->parsed())
            return cmd_verify_ximax(common, xi_values, verify_multistart, verify_method,
                                    verify_step);
        if (ds->parsed()) return cmd_ds_compare(common, cfg, taus, t_qb_given);
        if (rob->parsed()) return cmd_robustness(common, cfg, pulse_indices, kappas, t_fracs);
        if (selftest->parsed()) return cmd_selftest(common);
    } catch (const std::exception& e) {
        return fail_with(out_dir, e.what());
    }
    return 1;
}
