#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qbrachy/phases.hpp"
#include "qbrachy/shooting.hpp"

using namespace qbrachy;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double u_star = 0.957495683;
constexpr double phi_star = 0.310782129 * pi;
constexpr double xi_qb_ref = 2.723512815;

PhysicalPulses reference_pulses(double varphi = 0.0, double energy = 1.0) {
    const Trajectory traj = integrate({u_star, phi_star}, XiGrid::with_step(5.0, 1e-3));
    return to_physical(traj, {u_star, phi_star}, xi_qb_ref, derive_phases(0.0, 0.0, varphi),
                       energy);
}

}  // namespace

TEST_CASE("wrap_phase lands in (-pi, pi]") {
    REQUIRE(wrap_phase(pi) == pi);
    REQUIRE(wrap_phase(-pi) == pi);
    REQUIRE(wrap_phase(3.0 * pi) == Catch::Approx(pi).margin(1e-15));
    REQUIRE(wrap_phase(2.0 * pi) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(wrap_phase(0.3) == 0.3);
}

TEST_CASE("phase constraints at zero free phases") {
    const PhaseSet p = derive_phases(0.0, 0.0, 0.0).reduced();
    REQUIRE(p.phi2 == Catch::Approx(-pi / 2).margin(1e-15));
    REQUIRE(p.phi_gr == Catch::Approx(-pi / 2).margin(1e-15));
    REQUIRE(p.phi_wr == 0.0);
    REQUIRE(p.phi_gwp == 0.0);
}

TEST_CASE("phase constraints at generic free phases") {
    const PhaseSet p = derive_phases(pi / 4, pi / 3, pi).reduced();
    REQUIRE(p.phi2 ==
            Catch::Approx(wrap_phase(-pi / 4 - pi / 3 - pi - pi / 2)).margin(1e-15));
    REQUIRE(p.phi_wr == Catch::Approx(wrap_phase(-pi / 4 - pi)).margin(1e-15));
    REQUIRE(p.phi_gwp == Catch::Approx(wrap_phase(-pi / 3 - pi)).margin(1e-15));
    REQUIRE(p.phi_gr == Catch::Approx(wrap_phase(-pi - pi / 2)).margin(1e-15));
}

TEST_CASE("g and r state phases differ by exactly the GHZ phase") {
    for (double phi1 : {0.0, 0.7, -2.1})
        for (double phi3 : {0.0, 1.3})
            for (double varphi : {0.0, pi / 3, pi, 2.9})
                for (double phi_w : {0.0, -0.4}) {
                    const PhaseSet p = derive_phases(phi1, phi3, varphi, phi_w);
                    REQUIRE(p.phi_r - p.phi_g == Catch::Approx(varphi).margin(1e-15));
                }
    REQUIRE_THROWS_AS(derive_phases(std::nan(""), 0.0, 0.0), std::domain_error);
}

TEST_CASE("conversion time formula and scaling with the energy") {
    // T = u^2 Xi^2 hbar/E
    const PhysicalPulses p1 = reference_pulses(0.0, 1.0);
    REQUIRE(p1.t_qb == u_star * u_star * xi_qb_ref * xi_qb_ref);
    REQUIRE(p1.t_qb == Catch::Approx(6.8).margin(0.1));

    const PhysicalPulses p2 = reference_pulses(0.0, 2.0);
    REQUIRE(p2.t_qb == p1.t_qb / 2.0);
    REQUIRE(pulse_energy_trapezoid(p2) == Catch::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("emitted pulse energy integrates back to E") {
    const PhysicalPulses p = reference_pulses();
    REQUIRE(pulse_energy_trapezoid(p) == Catch::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("rescaling the pulse table recovers the scaled moduli") {
    const Trajectory traj = integrate({u_star, phi_star}, XiGrid::with_step(5.0, 1e-3));
    const PhysicalPulses p = reference_pulses();
    const double lam = xi_qb_ref / p.t_qb;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const ScaledState& s = traj.states[i];
        REQUIRE(p.mod[0][i] / lam == Catch::Approx(std::max(s.u1, 0.0)).margin(1e-12));
        REQUIRE(p.mod[1][i] / lam == Catch::Approx(std::max(s.u2, 0.0)).margin(1e-12));
        REQUIRE(p.mod[2][i] / lam == Catch::Approx(std::max(s.u3, 0.0)).margin(1e-12));
    }
}

TEST_CASE("pulse moduli do not depend on the GHZ phase") {
    const PhysicalPulses a = reference_pulses(0.0);
    const PhysicalPulses b = reference_pulses(pi);
    for (int n = 0; n < 3; ++n) {
        const auto k = static_cast<std::size_t>(n);
        REQUIRE(a.mod[k] == b.mod[k]);  // bitwise
    }
    REQUIRE(a.arg[1] != b.arg[1]);
    REQUIRE(a.t == b.t);
}

TEST_CASE("pulse args are constant across the table") {
    const PhysicalPulses p = reference_pulses(pi / 3);
    for (std::size_t i = 0; i < p.size(); i += p.size() / 7) {
        REQUIRE(std::arg(p.omega(1, i)) == std::arg(p.omega(1, 0)));
        REQUIRE(std::arg(p.omega(2, i)) == std::arg(p.omega(2, 0)));
        REQUIRE(std::arg(p.omega(3, i)) == std::arg(p.omega(3, 0)));
    }
    std::ostringstream os;
    p.write_csv(os);
    std::istringstream is(os.str());
    std::string header;
    REQUIRE(std::getline(is, header));
    REQUIRE(header == "t,abs_om1,arg_om1,abs_om2,arg_om2,abs_om3,arg_om3");
}

TEST_CASE("mirror-branch pulses come out sign-normalized") {
    const InitialPoint mirror{u_star, 2.0 * pi - phi_star};
    const Trajectory traj = integrate(mirror, XiGrid::with_step(5.0, 1e-3));
    const PhaseSet ph = derive_phases(0.0, 0.0, 0.0);
    const PhysicalPulses p = to_physical(traj, mirror, xi_qb_ref, ph);
    const PhysicalPulses ref = reference_pulses();
    for (int n = 0; n < 3; ++n) {
        const auto k = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < p.size(); i += 500) {
            REQUIRE(p.mod[k][i] >= 0.0);
            REQUIRE(p.mod[k][i] == Catch::Approx(ref.mod[k][i]).margin(1e-9));
        }
    }
    // u2, u3 flip sign on the mirror branch: a constant pi phase shift
    REQUIRE(p.arg[0] == ref.arg[0]);
    REQUIRE(p.arg[1] == Catch::Approx(wrap_phase(ref.arg[1] + pi)).margin(1e-15));
    REQUIRE(p.arg[2] == Catch::Approx(wrap_phase(ref.arg[2] + pi)).margin(1e-15));
}

TEST_CASE("degenerate and invalid reconstruction inputs are rejected") {
    const Trajectory traj = integrate({u_star, phi_star}, XiGrid::with_step(3.0, 1e-3));
    const PhaseSet ph = derive_phases(0.0, 0.0, 0.0);
    REQUIRE_THROWS_AS(to_physical(traj, {0.0, 0.0}, 2.72, ph), std::domain_error);
    REQUIRE_THROWS_AS(to_physical(traj, {u_star, phi_star}, 2.72, ph, 0.0),
                      std::domain_error);
    REQUIRE_THROWS_AS(to_physical(traj, {u_star, phi_star}, 3.5, ph), std::domain_error);
}
