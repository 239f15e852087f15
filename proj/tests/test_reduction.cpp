#include <doctest.h>

#include "forcedmech/errors.hpp"
#include "forcedmech/rayleigh.hpp"
#include "forcedmech/reduction.hpp"

#include <cmath>
#include <vector>

using namespace fm;

namespace {

Expr P(const std::string& name) { return Expr::symbol(name, SymbolKind::Parameter); }

// Central-force system on R^3 with a drag aligned with the position ray:
// R = (c/2)(q . qd)^2, so dR/dqd is parallel to q and rotations survive.
ForcedLagrangianSystem central_system(double c = 0.05) {
    ChartedSystem chart({"q1", "q2", "q3"}, {{"c", c}});
    Expr l = Expr::constant(0), radial = Expr::constant(0);
    for (std::size_t i = 0; i < 3; ++i) {
        l = l + (pow(chart.qd(i), 2) - pow(chart.q(i), 2)) / 2;
        radial = radial + chart.q(i) * chart.qd(i);
    }
    return ForcedLagrangianSystem::from_rayleigh(chart, simplify(l), P("c") * pow(radial, 2) / 2);
}

Expr isotropic_drag(const ChartedSystem& chart) {
    Expr r = Expr::constant(0);
    for (std::size_t i = 0; i < chart.dim(); ++i) r = r + pow(chart.qd(i), 2);
    return simplify(r / 2);
}

ForcedLagrangianSystem planar_central_system() {
    ChartedSystem chart({"r", "theta"}, {});
    Expr l = (pow(chart.qd(0), 2) + pow(chart.q(0), 2) * pow(chart.qd(1), 2)) / 2 - pow(chart.q(0), 2) / 2;
    return ForcedLagrangianSystem(chart, simplify(l), zero_force(chart));
}

Expr forced_symmetry_residual(const ChartedSystem& chart, const AlgebraAction& action,
                              const std::vector<Rational>& coeffs, const ForcedLagrangianSystem& sys) {
    std::vector<Expr> comps(chart.dim(), Expr::constant(0));
    for (std::size_t a = 0; a < coeffs.size(); ++a)
        for (std::size_t i = 0; i < chart.dim(); ++i)
            comps[i] = comps[i] + Expr::constant(coeffs[a]) * action.generators[a].comps[i];
    VectorFieldTQ xc = complete_lift(chart, VectorFieldQ{comps});
    Expr rate = apply_field(chart, xc, sys.lagrangian(), Side::Lagrangian);
    return simplify(rate - pairing(flatten(xc), semibasic_coeffs(sys.force())));
}

} // namespace

TEST_SUITE("reduction") {

TEST_CASE("action constructors validate shape, antisymmetry and closure") {
    ChartedSystem chart({"q1", "q2", "q3"}, {});
    AlgebraAction rot = rotation_action_3d(chart);
    CHECK(rot.generators.size() == 3);
    CHECK(rot.structure[0][1][2] == Rational(1));
    CHECK(rot.structure[1][0][2] == Rational(-1));

    // Flipping one bracket sign breaks closure.
    auto bad = rot.structure;
    bad[0][1][2] = Rational(-1);
    bad[1][0][2] = Rational(1);
    CHECK_THROWS_AS(make_algebra_action(chart, rot.generators, bad), PreconditionError);

    // Antisymmetry violations are rejected before any bracket is computed.
    auto asym = rot.structure;
    asym[1][0][2] = Rational(1);
    CHECK_THROWS_AS(make_algebra_action(chart, rot.generators, asym), PreconditionError);

    ChartedSystem small({"x"}, {});
    CHECK_THROWS_AS(rotation_action_3d(small), PreconditionError);
    CHECK_THROWS_AS(translation_action(small, {3}), PreconditionError);
    CHECK_THROWS_AS(make_algebra_action(small, rot.generators, rot.structure), PreconditionError);
}

TEST_CASE("momentum components reproduce the classical formulas") {
    ForcedLagrangianSystem sys = central_system();
    const ChartedSystem& c = sys.chart();
    AlgebraAction rot = rotation_action_3d(c);

    std::vector<Expr> j = momentum_map(rot, sys);
    CHECK(is_zero(j[0] - (c.q(1) * c.qd(2) - c.q(2) * c.qd(1))));
    CHECK(is_zero(j[1] - (c.q(2) * c.qd(0) - c.q(0) * c.qd(2))));
    CHECK(is_zero(j[2] - (c.q(0) * c.qd(1) - c.q(1) * c.qd(0))));

    ChartedSystem line({"q"}, {{"m", 2.0}});
    ForcedLagrangianSystem free_line(line, P("m") * pow(line.qd(0), 2) / 2, zero_force(line));
    AlgebraAction shift = translation_action(line, {0});
    CHECK(is_zero(momentum_component(shift, 0, free_line) - P("m") * line.qd(0)));

    ChartedSystem plane({"x", "y"}, {});
    ForcedLagrangianSystem free_plane(plane, (pow(plane.qd(0), 2) + pow(plane.qd(1), 2)) / 2,
                                      zero_force(plane));
    AlgebraAction spin = make_algebra_action(
        plane, {VectorFieldQ{{-plane.q(1), plane.q(0)}}},
        {std::vector<std::vector<Rational>>(1, std::vector<Rational>(1, Rational(0)))});
    CHECK(is_zero(momentum_component(spin, 0, free_plane) -
                  (plane.q(0) * plane.qd(1) - plane.q(1) * plane.qd(0))));
}

TEST_CASE("momentum components are Hamiltonian for the Lagrangian 2-form") {
    ForcedLagrangianSystem sys = central_system();
    const ChartedSystem& c = sys.chart();
    AlgebraAction rot = rotation_action_3d(c);
    for (std::size_t a = 0; a < 3; ++a) {
        Expr j = momentum_component(rot, a, sys);
        VectorFieldTQ xc = complete_lift(c, rot.generators[a]);
        std::vector<Expr> dj = flatten(exterior_derivative_applied(c, j, Side::Lagrangian));
        std::vector<Expr> contraction = interior_product(flatten(xc), sys.omega().m);
        for (std::size_t i = 0; i < dj.size(); ++i) CHECK(is_zero(dj[i] - contraction[i]));
        // Invariance of L propagates to the energy.
        CHECK(is_zero(apply_field(c, xc, sys.energy(), Side::Lagrangian)));
    }
}

TEST_CASE("membership tests against the force") {
    ForcedLagrangianSystem sys = central_system();
    AlgebraAction rot = rotation_action_3d(sys.chart());

    for (std::size_t a = 0; a < 3; ++a) {
        std::vector<Expr> coeffs(3, Expr::constant(0));
        coeffs[a] = Expr::constant(1);
        GBetaResult res = in_g_beta(rot, coeffs, sys);
        CHECK(res.member == Verdict::True);
    }
    GBetaResult combo = in_g_beta(rot, {Expr::integer(1), Expr::integer(2), Expr::integer(-1)}, sys);
    CHECK(combo.member == Verdict::True);

    // Isotropic linear drag removes angular momentum: the pairing residual is
    // exactly the momentum component.
    const ChartedSystem& c = sys.chart();
    ForcedLagrangianSystem dragged =
        ForcedLagrangianSystem::from_rayleigh(c, sys.lagrangian(), isotropic_drag(c));
    GBetaResult spin_z = in_g_beta(rot, {Expr::constant(0), Expr::constant(0), Expr::constant(1)}, dragged);
    CHECK(spin_z.member == Verdict::False);
    CHECK(is_zero(spin_z.pairing_residual - (c.q(0) * c.qd(1) - c.q(1) * c.qd(0))));

    ChartedSystem line({"q"}, {{"c", 0.7}});
    AlgebraAction shift = translation_action(line, {0});
    ForcedLagrangianSystem pushed(line, pow(line.qd(0), 2) / 2,
                                  make_semibasic_form(line, {P("c")}, Side::Lagrangian));
    GBetaResult res = in_g_beta(shift, {Expr::constant(1)}, pushed);
    CHECK(res.member == Verdict::False);
    CHECK(res.pairing_residual.same_as(simplify(P("c"))));

    ForcedLagrangianSystem unforced(line, pow(line.qd(0), 2) / 2, zero_force(line));
    CHECK(in_g_beta(shift, {Expr::constant(1)}, unforced).member == Verdict::True);

    ForcedLagrangianSystem tilted(line, simplify(pow(line.qd(0), 2) / 2 + line.q(0)), zero_force(line));
    CHECK_THROWS_AS(in_g_beta(shift, {Expr::constant(1)}, tilted), PreconditionError);
}

TEST_CASE("basis extraction over polynomial residuals") {
    ForcedLagrangianSystem sys = central_system();
    const ChartedSystem& c = sys.chart();
    AlgebraAction rot = rotation_action_3d(c);

    // Ray-aligned drag keeps every rotation.
    auto full = g_beta_basis(c, rot, sys.force());
    REQUIRE(full.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(full[i][j] == Rational(i == j ? 1 : 0));
    for (const auto& v : full) CHECK(is_zero(forced_symmetry_residual(c, rot, v, sys)));

    // Isotropic drag keeps nothing.
    SemibasicForm iso = force_from_dissipation(c, isotropic_drag(c));
    CHECK(g_beta_basis(c, rot, iso).empty());

    // Planar-aligned extra drag keeps only the rotation about the third axis.
    Expr planar = c.q(0) * c.qd(0) + c.q(1) * c.qd(1);
    Expr mixed = simplify(P("c") * pow(c.q(0) * c.qd(0) + c.q(1) * c.qd(1) + c.q(2) * c.qd(2), 2) / 2 +
                          pow(planar, 2) / 2);
    auto axis = g_beta_basis(c, rot, force_from_dissipation(c, mixed));
    REQUIRE(axis.size() == 1);
    CHECK(axis[0][0] == Rational(0));
    CHECK(axis[0][1] == Rational(0));
    CHECK(axis[0][2] == Rational(1));

    // A velocity-free dissipation term produces no force at all.
    CHECK(g_beta_basis(c, rot, force_from_dissipation(c, c.q(0))).size() == 3);

    // Constant push along x on the plane keeps only the y-translation.
    ChartedSystem plane({"x", "y"}, {{"c", 0.7}});
    AlgebraAction shifts = translation_action(plane, {0, 1});
    SemibasicForm push = make_semibasic_form(plane, {P("c"), Expr::constant(0)}, Side::Lagrangian);
    auto along_y = g_beta_basis(plane, shifts, push);
    REQUIRE(along_y.size() == 1);
    CHECK(along_y[0][0] == Rational(0));
    CHECK(along_y[0][1] == Rational(1));
}

TEST_CASE("basis extraction falls back to sampling for transcendental forces") {
    ChartedSystem plane({"x", "y"}, {});
    AlgebraAction shifts = translation_action(plane, {0, 1});
    SemibasicForm push = force_from_dissipation(plane, exp(plane.qd(0)));
    auto basis = g_beta_basis(plane, shifts, push);
    REQUIRE(basis.size() == 1);
    CHECK(basis[0][0] == Rational(0));
    CHECK(basis[0][1] == Rational(1));
}

TEST_CASE("dissipation-side conditions agree with the force-side conditions") {
    ForcedLagrangianSystem sys = central_system();
    const ChartedSystem& c = sys.chart();
    AlgebraAction rot = rotation_action_3d(c);

    for (const GRConditions& cond : g_R_conditions(c, rot, *sys.dissipation()))
        CHECK(cond.member == Verdict::True);

    // A single velocity component is only compatible with rotations that fix
    // its axis.
    auto skew = g_R_conditions(c, rot, c.qd(0));
    CHECK(skew[0].member == Verdict::True);
    CHECK(skew[1].member == Verdict::False);
    CHECK(skew[2].member == Verdict::False);
    CHECK(is_zero(skew[1].vertical_residual - c.q(2)));
    CHECK(is_zero(skew[2].vertical_residual + c.q(1)));

    // Velocity-free terms never obstruct membership.
    for (const GRConditions& cond : g_R_conditions(c, rot, c.q(0))) {
        CHECK(cond.vertical_residual.same_as(Expr::constant(0)));
        CHECK(cond.member == Verdict::True);
    }
}

TEST_CASE("momentum rates along the forced dynamics") {
    ForcedLagrangianSystem sys = central_system();
    AlgebraAction rot = rotation_action_3d(sys.chart());
    for (std::size_t a = 0; a < 3; ++a) CHECK(is_zero(momentum_conservation_check(rot, a, sys)));

    ChartedSystem line({"q"}, {{"m", 1.0}, {"k", 0.1}});
    AlgebraAction shift = translation_action(line, {0});
    ForcedLagrangianSystem fluid = ForcedLagrangianSystem::from_rayleigh(
        line, P("m") * pow(line.qd(0), 2) / 2, P("k") * pow(line.qd(0), 3) / 3);
    Expr rate = momentum_conservation_check(shift, 0, fluid);
    CHECK(is_zero(rate + P("k") * pow(line.qd(0), 2)));

    // Without invariance the rate simply reports the dynamics.
    ForcedLagrangianSystem falling(line, simplify(P("m") * pow(line.qd(0), 2) / 2 - line.q(0)),
                                   zero_force(line));
    CHECK(is_zero(momentum_conservation_check(shift, 0, falling) + 1));

    ForcedLagrangianSystem unforced(line, P("m") * pow(line.qd(0), 2) / 2, zero_force(line));
    CHECK(is_zero(momentum_conservation_check(shift, 0, unforced)));
}

TEST_CASE("cyclic reduction of the planar central force") {
    ForcedLagrangianSystem sys = planar_central_system();
    const ChartedSystem& c = sys.chart();
    CyclicReduction red = cyclic_reduce(sys, 1, Expr::integer(1));

    const ChartedSystem& rc = red.reduced.chart();
    REQUIRE(rc.dim() == 1);
    CHECK(rc.q(0).symbol_name() == "r");
    CHECK(is_zero(red.psi - pow(c.q(0), -2)));
    Expr expected =
        pow(rc.qd(0), 2) / 2 - pow(rc.q(0), 2) / 2 - pow(rc.q(0), -2) / 2;
    CHECK(is_zero(red.routhian - expected));

    // The reduced energy is exactly the restricted full energy.
    Expr restricted = substitute(sys.energy(), {{c.qd(1), red.psi}});
    CHECK(is_zero(red.reduced.energy() - restricted));

    // Reduced dynamics: one degree of freedom with the centrifugal barrier.
    VectorFieldTQ field = forced_el_field(red.reduced);
    CHECK(is_zero(field.fiber[0] - (pow(rc.q(0), -3) - rc.q(0))));

    // Momentum level through a declared parameter.
    ChartedSystem cp({"r", "theta"}, {{"ell", 0.5}});
    Expr lp = (pow(cp.qd(0), 2) + pow(cp.q(0), 2) * pow(cp.qd(1), 2)) / 2 - pow(cp.q(0), 2) / 2;
    ForcedLagrangianSystem sp(cp, simplify(lp), zero_force(cp));
    CyclicReduction redp = cyclic_reduce(sp, 1, P("ell"));
    CHECK(is_zero(redp.psi - P("ell") * pow(cp.q(0), -2)));

    CHECK_THROWS_AS(cyclic_reduce(sys, 0, Expr::integer(1)), PreconditionError); // r is not cyclic
    CHECK_THROWS_AS(cyclic_reduce(sys, 1, c.qd(0)), PreconditionError);
    CHECK_THROWS_AS(cyclic_reduce(sp, 1, P("undeclared")), PreconditionError);

    ChartedSystem cq({"r", "theta"}, {});
    Expr quartic = pow(cq.qd(0), 2) / 2 + pow(cq.qd(1), 4) / 4 - pow(cq.q(0), 2) / 2;
    ForcedLagrangianSystem sq(cq, simplify(quartic), zero_force(cq));
    CHECK_THROWS_AS(cyclic_reduce(sq, 1, Expr::integer(1)), PreconditionError);

    ChartedSystem cf({"x", "y"}, {});
    ForcedLagrangianSystem f2(cf, (pow(cf.qd(0), 2) + pow(cf.qd(1), 2)) / 2, zero_force(cf));
    CyclicReduction redf = cyclic_reduce(f2, 1, Expr::integer(0));
    CHECK(is_zero(redf.routhian - pow(cf.qd(0), 2) / 2));
    CHECK(is_zero(redf.psi));
}

TEST_CASE("reduction commutes with the dynamics on the central force") {
    ForcedLagrangianSystem sys = planar_central_system();
    double h = 1e-3, T = 10.0;
    double thetad0 = 1.0 / 1.44; // level mu = r0^2 * thetad0 = 1
    Trajectory full = integrate_lagrangian(sys, {1.2, 0.0, 0.0, thetad0}, h, T);
    REQUIRE(!full.truncated);

    CyclicReduction red = cyclic_reduce(sys, 1, Expr::integer(1));
    Trajectory reduced = integrate_lagrangian(red.reduced, {1.2, 0.0}, h, T);
    REQUIRE(!reduced.truncated);
    REQUIRE(reduced.times.size() == full.times.size());

    double worst_r = 0;
    for (std::size_t k = 0; k < full.times.size(); ++k)
        worst_r = std::max(worst_r, std::abs(full.states[k][0] - reduced.states[k][0]));
    CHECK(worst_r < 1e-8);

    Trajectory rebuilt = abelian_reconstruct(reduced, sys, 1, Expr::integer(1), 0.0);
    REQUIRE(rebuilt.times.size() == full.times.size());
    double worst_theta = 0, worst_thetad = 0;
    for (std::size_t k = 0; k < full.times.size(); ++k) {
        worst_theta = std::max(worst_theta, std::abs(full.states[k][1] - rebuilt.states[k][1]));
        worst_thetad = std::max(worst_thetad, std::abs(full.states[k][3] - rebuilt.states[k][3]));
    }
    CHECK(worst_theta < 1e-6);
    CHECK(worst_thetad < 1e-8);

    // At momentum level zero the angle never moves.
    CyclicReduction flat = cyclic_reduce(sys, 1, Expr::integer(0));
    Trajectory still = integrate_lagrangian(flat.reduced, {1.2, 0.0}, h, 1.0);
    Trajectory still_full = abelian_reconstruct(still, sys, 1, Expr::integer(0), 0.0);
    for (const auto& row : still_full.states) {
        CHECK(row[1] == 0.0);
        CHECK(row[3] == 0.0);
    }
}

TEST_CASE("reducing the spinning-contact system leaves the planar dynamics untouched") {
    ChartedSystem c({"x", "y", "theta"},
                    {{"m", 1.0}, {"r", 1.0}, {"mu", 0.1}, {"g", 9.8}, {"omega", 1.0}});
    Expr l = P("m") * (pow(c.qd(0), 2) + pow(c.qd(1), 2) + pow(P("r"), 2) * pow(c.qd(2), 2) +
                       pow(P("r"), 2) * pow(P("omega"), 2));
    Expr diss = 2 * P("mu") * P("m") * P("g") * P("r") * P("omega") +
                P("mu") * P("m") * P("g") / (2 * P("r") * P("omega")) *
                    (pow(c.qd(0), 2) + pow(c.qd(1), 2));
    ForcedLagrangianSystem sys = ForcedLagrangianSystem::from_rayleigh(c, simplify(l), simplify(diss));

    double h = 1e-3, T = 5.0, thetad0 = 0.2;
    Expr mu_level = Expr::rational(2, 5); // p_theta = 2 m r^2 thetad0
    CyclicReduction red = cyclic_reduce(sys, 2, mu_level);
    CHECK(red.reduced.dissipation().has_value());
    CHECK(is_zero(red.psi - Expr::rational(1, 5) / (P("m") * pow(P("r"), 2))));

    Trajectory full = integrate_lagrangian(sys, {1.0, 0.5, 0.0, 0.7, -0.3, thetad0}, h, T);
    Trajectory reduced = integrate_lagrangian(red.reduced, {1.0, 0.5, 0.7, -0.3}, h, T);
    REQUIRE(reduced.times.size() == full.times.size());
    double worst = 0;
    for (std::size_t k = 0; k < full.times.size(); ++k) {
        worst = std::max(worst, std::abs(full.states[k][0] - reduced.states[k][0]));
        worst = std::max(worst, std::abs(full.states[k][1] - reduced.states[k][1]));
        worst = std::max(worst, std::abs(full.states[k][3] - reduced.states[k][2]));
        worst = std::max(worst, std::abs(full.states[k][4] - reduced.states[k][3]));
    }
    CHECK(worst < 1e-8);

    // The spin angle grows linearly and is recovered by quadrature.
    Trajectory rebuilt = abelian_reconstruct(reduced, sys, 2, mu_level, 0.0);
    double worst_theta = 0;
    for (std::size_t k = 0; k < rebuilt.times.size(); ++k)
        worst_theta = std::max(worst_theta,
                               std::abs(rebuilt.states[k][2] - thetad0 * rebuilt.times[k]));
    CHECK(worst_theta < 1e-9);
}

TEST_CASE("angular momentum drifts below 1e-7 on the ray-damped central force") {
    ForcedLagrangianSystem sys = central_system();
    AlgebraAction rot = rotation_action_3d(sys.chart());
    Trajectory traj = integrate_lagrangian(sys, {1.0, 0.3, -0.5, 0.2, 0.9, 0.1}, 1e-3, 10.0,
                                           momentum_map(rot, sys));
    REQUIRE(!traj.truncated);
    for (const DriftStat& stat : drift_report(traj)) CHECK(stat.max_rel < 1e-7);
}

} // TEST_SUITE
