#include "forcedmech/symmetry.hpp"

#include "forcedmech/errors.hpp"

#include <utility>

namespace fm {

namespace {

Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::False || b == Verdict::False) return Verdict::False;
    if (a == Verdict::Indeterminate || b == Verdict::Indeterminate) return Verdict::Indeterminate;
    return Verdict::True;
}

Verdict all_zero(const std::vector<Expr>& es, std::uint64_t seed) {
    Verdict v = Verdict::True;
    for (const Expr& e : es) v = combine(v, zero_verdict(e, seed));
    return v;
}

Verdict matrix_zero(const Matrix& m, std::uint64_t seed) {
    Verdict v = Verdict::True;
    for (const auto& row : m)
        for (const Expr& e : row) v = combine(v, zero_verdict(e, seed));
    return v;
}

void require_agreement(Verdict direct, Verdict equivalent, const std::string& what) {
    if (direct == Verdict::Indeterminate || equivalent == Verdict::Indeterminate) return;
    if (direct != equivalent)
        throw Error("internal inconsistency: " + what + " disagrees with its equivalent criterion");
}

Expr pair_semibasic(const SemibasicForm& beta, const VectorFieldTQ& x) {
    Expr out = Expr::constant(0);
    for (std::size_t i = 0; i < beta.comps.size(); ++i) out = out + beta.comps[i] * x.base[i];
    return simplify(out);
}

void record(std::vector<std::pair<std::string, Expr>>& residuals, const std::string& name,
            const std::vector<Expr>& comps) {
    for (std::size_t i = 0; i < comps.size(); ++i)
        residuals.emplace_back(name + "[" + std::to_string(i) + "]", comps[i]);
}

} // namespace

PotentialResult radial_potential(const ChartedSystem& chart, const OneFormTQ& theta, Side side,
                                 std::uint64_t seed) {
    std::vector<Expr> zs = chart.phase_symbols(side);
    std::vector<Expr> comps = flatten(theta);
    PotentialResult out;
    out.closed = matrix_zero(exterior_derivative_coeffs(comps, zs), seed);
    if (out.closed != Verdict::True) return out;

    Expr t = Expr::symbol("~t", SymbolKind::Parameter);
    std::vector<std::pair<Expr, Expr>> scale;
    scale.reserve(zs.size());
    for (const Expr& z : zs) scale.emplace_back(z, t * z);
    Expr integrand = Expr::constant(0);
    for (std::size_t a = 0; a < zs.size(); ++a)
        integrand = integrand + substitute(comps[a], scale) * zs[a];
    integrand = simplify(integrand);

    if (auto poly = as_polynomial(integrand, {t})) {
        Expr f = Expr::constant(0);
        for (const auto& [expo, coeff] : *poly)
            f = f + coeff / Expr::constant(Rational(expo[0] + 1));
        out.f = simplify(f);
    } else {
        out.f = quadrature01(integrand, t);
    }
    return out;
}

Expr check_forced_symmetry(const VectorFieldQ& x, const ForcedLagrangianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    VectorFieldTQ xc = complete_lift(chart, x);
    Expr lhs = apply_field(chart, xc, sys.lagrangian(), Side::Lagrangian);
    return simplify(lhs - pair_semibasic(sys.force(), xc));
}

Expr noether_quantity(const VectorFieldQ& x, const ForcedLagrangianSystem& sys) {
    Expr residual = check_forced_symmetry(x, sys);
    if (zero_verdict(residual, sys.seed()) != Verdict::True)
        throw PreconditionError("candidate is not a symmetry of the forced system; residual = " +
                                residual.to_string());
    const ChartedSystem& chart = sys.chart();
    VectorFieldTQ xv = vertical_lift(chart, x);
    return simplify(apply_field(chart, xv, sys.lagrangian(), Side::Lagrangian));
}

std::vector<Expr> check_lie_symmetry(const VectorFieldQ& x, const ForcedLagrangianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    VectorFieldTQ xc = complete_lift(chart, x);
    VectorFieldTQ xi = forced_el_field(sys);
    std::vector<Expr> bracket = flatten(lie_bracket(chart, xc, xi, Side::Lagrangian));

    OneFormTQ moved = lie_derivative(chart, xc, sys.alpha(), Side::Lagrangian);
    std::vector<Expr> zs = chart.phase_symbols(Side::Lagrangian);
    if (matrix_zero(exterior_derivative_coeffs(flatten(moved), zs), sys.seed()) == Verdict::True) {
        OneFormTQ lbeta = lie_derivative(chart, xc, OneFormTQ{sys.force().comps, std::vector<Expr>(chart.dim(), Expr())},
                                         Side::Lagrangian);
        Expr xce = apply_field(chart, xc, sys.energy(), Side::Lagrangian);
        std::vector<Expr> grad = gradient(xce, zs);
        std::vector<Expr> alt = flatten(lbeta);
        for (std::size_t a = 0; a < alt.size(); ++a) alt[a] = simplify(alt[a] + grad[a]);
        require_agreement(all_zero(bracket, sys.seed()), all_zero(alt, sys.seed()), "Lie symmetry bracket test");
    }
    return bracket;
}

std::vector<Expr> check_dynamical_symmetry(const VectorFieldTQ& xt, const ForcedLagrangianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    VectorFieldTQ xi = forced_el_field(sys);
    std::vector<Expr> bracket = flatten(lie_bracket(chart, xt, xi, Side::Lagrangian));

    OneFormTQ moved = lie_derivative(chart, xt, sys.alpha(), Side::Lagrangian);
    std::vector<Expr> zs = chart.phase_symbols(Side::Lagrangian);
    if (matrix_zero(exterior_derivative_coeffs(flatten(moved), zs), sys.seed()) == Verdict::True) {
        OneFormTQ lbeta = lie_derivative(chart, xt, OneFormTQ{sys.force().comps, std::vector<Expr>(chart.dim(), Expr())},
                                         Side::Lagrangian);
        Expr xte = apply_field(chart, xt, sys.energy(), Side::Lagrangian);
        std::vector<Expr> grad = gradient(xte, zs);
        std::vector<Expr> alt = flatten(lbeta);
        for (std::size_t a = 0; a < alt.size(); ++a) alt[a] = simplify(alt[a] + grad[a]);
        require_agreement(all_zero(bracket, sys.seed()), all_zero(alt, sys.seed()),
                          "dynamical symmetry bracket test");
    }
    return bracket;
}

NoetherCheck check_noether_symmetry(const VectorFieldQ& x, const ForcedLagrangianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    VectorFieldTQ xc = complete_lift(chart, x);
    CartanCheck lifted = check_cartan_symmetry(xc, sys);
    // S X^c = X^v, so the Cartan data for the complete lift is exactly the
    // Noether data for X.
    return NoetherCheck{lifted.residual, lifted.closed, lifted.potential, lifted.conserved};
}

CartanCheck check_cartan_symmetry(const VectorFieldTQ& xt, const ForcedLagrangianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    CartanCheck out{Expr::constant(0), Verdict::Indeterminate, std::nullopt, std::nullopt};
    Expr xte = apply_field(chart, xt, sys.energy(), Side::Lagrangian);
    out.residual = simplify(xte + pair_semibasic(sys.force(), xt));

    OneFormTQ moved = lie_derivative(chart, xt, sys.alpha(), Side::Lagrangian);
    PotentialResult pot = radial_potential(chart, moved, Side::Lagrangian, sys.seed());
    out.closed = pot.closed;
    out.potential = pot.f;
    if (pot.f && zero_verdict(out.residual, sys.seed()) == Verdict::True) {
        Expr sxl = apply_field(chart, apply_S(xt), sys.lagrangian(), Side::Lagrangian);
        out.conserved = simplify(*pot.f - sxl);
    }
    return out;
}

bool check_relation_noether_lie(const VectorFieldQ& x, const ForcedLagrangianSystem& sys) {
    NoetherCheck nc = check_noether_symmetry(x, sys);
    Verdict residual_zero = zero_verdict(nc.residual, sys.seed());
    if (residual_zero != Verdict::True || nc.closed != Verdict::True)
        throw PreconditionError("candidate is not a Noether symmetry; residual = " + nc.residual.to_string());

    const ChartedSystem& chart = sys.chart();
    VectorFieldTQ xc = complete_lift(chart, x);
    std::vector<Expr> zs = chart.phase_symbols(Side::Lagrangian);
    Matrix dbeta = exterior_derivative_coeffs(semibasic_coeffs(sys.force()), zs);
    std::vector<Expr> contraction = interior_product(flatten(xc), dbeta);
    Verdict cond = all_zero(contraction, sys.seed());
    Verdict lie = all_zero(check_lie_symmetry(x, sys), sys.seed());
    require_agreement(cond, lie, "Noether/Lie relation");
    if (cond == Verdict::Indeterminate)
        throw IndeterminateError("cannot decide i_{X^c}dβ = 0 for the Noether/Lie relation");
    return cond == Verdict::True;
}

SymmetryReport analyze_point_candidate(const VectorFieldQ& x, const ForcedLagrangianSystem& sys) {
    SymmetryReport report;
    report.point_candidate = x;
    report.candidate = complete_lift(sys.chart(), x);
    report.side = Side::Lagrangian;

    Expr forced = check_forced_symmetry(x, sys);
    report.forced_lagrangian_symmetry = zero_verdict(forced, sys.seed());
    report.residuals.emplace_back("forced", forced);

    std::vector<Expr> lie = check_lie_symmetry(x, sys);
    report.lie = all_zero(lie, sys.seed());
    record(report.residuals, "lie", lie);

    NoetherCheck nc = check_noether_symmetry(x, sys);
    Verdict noether_residual = zero_verdict(nc.residual, sys.seed());
    report.noether = combine(noether_residual, nc.closed);
    report.residuals.emplace_back("noether", nc.residual);
    report.potential = nc.potential;

    std::vector<Expr> dyn = check_dynamical_symmetry(report.candidate, sys);
    report.dynamical = all_zero(dyn, sys.seed());
    record(report.residuals, "dynamical", dyn);

    CartanCheck cc = check_cartan_symmetry(report.candidate, sys);
    report.cartan = combine(zero_verdict(cc.residual, sys.seed()), cc.closed);
    report.residuals.emplace_back("cartan", cc.residual);

    if (*report.forced_lagrangian_symmetry == Verdict::True)
        report.conserved_quantity = noether_quantity(x, sys);
    else if (nc.conserved)
        report.conserved_quantity = nc.conserved;
    return report;
}

SymmetryReport analyze_tq_candidate(const VectorFieldTQ& xt, const ForcedLagrangianSystem& sys) {
    SymmetryReport report;
    report.candidate = xt;
    report.side = Side::Lagrangian;

    std::vector<Expr> dyn = check_dynamical_symmetry(xt, sys);
    report.dynamical = all_zero(dyn, sys.seed());
    record(report.residuals, "dynamical", dyn);

    CartanCheck cc = check_cartan_symmetry(xt, sys);
    report.cartan = combine(zero_verdict(cc.residual, sys.seed()), cc.closed);
    report.residuals.emplace_back("cartan", cc.residual);
    report.potential = cc.potential;
    report.conserved_quantity = cc.conserved;
    return report;
}

namespace {

// Pull a field on T*Q back to the Legendre-related field on TQ:
// base components compose with Leg, fibre components solve
// W B = B̂∘Leg − (∂P/∂q) A.
VectorFieldTQ leg_related_field(const VectorFieldTQ& xhat, const ForcedLagrangianSystem& lsys,
                                const LegendreMap& leg) {
    const ChartedSystem& chart = lsys.chart();
    std::size_t n = chart.dim();
    std::vector<std::pair<Expr, Expr>> pull;
    pull.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pull.emplace_back(chart.p(i), leg.p_of[i]);

    std::vector<Expr> base;
    base.reserve(n);
    for (std::size_t i = 0; i < n; ++i) base.push_back(simplify(substitute(xhat.base[i], pull)));

    std::vector<Expr> rhs;
    rhs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Expr r = substitute(xhat.fiber[i], pull);
        for (std::size_t j = 0; j < n; ++j) r = r - diff(leg.p_of[i], chart.q(j)) * base[j];
        rhs.push_back(simplify(r));
    }
    Matrix inv = lsys.hessian_inverse() ? *lsys.hessian_inverse() : symbolic_inverse(lsys.hessian().w, lsys.seed());
    std::vector<Expr> fiber = mat_vec(inv, rhs);
    for (Expr& f : fiber) f = simplify(f);
    return VectorFieldTQ{std::move(base), std::move(fiber)};
}

} // namespace

SymmetryReport hamiltonian_symmetry_checks(const VectorFieldTQ& xhat, const ForcedHamiltonianSystem& hsys,
                                           const ForcedLagrangianSystem* lsys) {
    const ChartedSystem& chart = hsys.chart();
    std::uint64_t seed = lsys ? lsys->seed() : 0;
    SymmetryReport report;
    report.candidate = xhat;
    report.side = Side::Hamiltonian;

    VectorFieldTQ xh = forced_hamilton_field(hsys);
    std::vector<Expr> commute = flatten(lie_bracket(chart, xhat, xh, Side::Hamiltonian));
    report.dynamical = all_zero(commute, seed);
    record(report.residuals, "commute", commute);

    OneFormTQ alpha_q = canonical_1form(chart);
    OneFormTQ moved = lie_derivative(chart, xhat, alpha_q, Side::Hamiltonian);
    PotentialResult pot = radial_potential(chart, moved, Side::Hamiltonian, seed);
    report.potential = pot.f;

    Expr residual = simplify(apply_field(chart, xhat, hsys.hamiltonian(), Side::Hamiltonian) +
                             pair_semibasic(hsys.force(), xhat));
    report.cartan = combine(zero_verdict(residual, seed), pot.closed);
    report.residuals.emplace_back("cartan", residual);
    if (pot.f && *report.cartan == Verdict::True) {
        Expr alpha_on_x = pairing(xhat.base, alpha_q.dq);
        report.conserved_quantity = simplify(*pot.f - alpha_on_x);
    }

    std::vector<Expr> zs = chart.phase_symbols(Side::Hamiltonian);
    if (pot.closed == Verdict::True) {
        // Commutation is equivalent to d(X̂(H)) = −L_{X̂}γ and to i_{X̂}dγ = 0.
        OneFormTQ lgamma = lie_derivative(
            chart, xhat, OneFormTQ{hsys.force().comps, std::vector<Expr>(chart.dim(), Expr())}, Side::Hamiltonian);
        std::vector<Expr> grad = gradient(apply_field(chart, xhat, hsys.hamiltonian(), Side::Hamiltonian), zs);
        std::vector<Expr> alt = flatten(lgamma);
        for (std::size_t a = 0; a < alt.size(); ++a) alt[a] = simplify(alt[a] + grad[a]);
        require_agreement(*report.dynamical, all_zero(alt, seed), "Hamiltonian commutation test");

        Matrix dgamma = exterior_derivative_coeffs(semibasic_coeffs(hsys.force()), zs);
        std::vector<Expr> contraction = interior_product(flatten(xhat), dgamma);
        require_agreement(*report.dynamical, all_zero(contraction, seed), "Hamiltonian dγ contraction test");
    }

    if (lsys) {
        LegendreMap leg = legendre(lsys->chart(), lsys->lagrangian(), lsys->seed());
        VectorFieldTQ xt = leg_related_field(xhat, *lsys, leg);
        std::vector<std::pair<Expr, Expr>> pull;
        for (std::size_t i = 0; i < chart.dim(); ++i) pull.emplace_back(chart.p(i), leg.p_of[i]);

        Verdict dyn_l = all_zero(check_dynamical_symmetry(xt, *lsys), lsys->seed());
        require_agreement(*report.dynamical, dyn_l, "Legendre-related commutation equivalence");

        // L_{X̃}α_L must be the Legendre pullback of L_{X̂}α_Q.
        OneFormTQ moved_l = lie_derivative(lsys->chart(), xt, lsys->alpha(), Side::Lagrangian);
        std::vector<Expr> zl = lsys->chart().phase_symbols(Side::Lagrangian);
        std::vector<Expr> pulled(2 * chart.dim(), Expr());
        for (std::size_t i = 0; i < chart.dim(); ++i) {
            Expr dq_part = substitute(moved.dq[i], pull);
            for (std::size_t j = 0; j < chart.dim(); ++j)
                dq_part = dq_part + substitute(moved.dv[j], pull) * diff(leg.p_of[j], lsys->chart().q(i));
            pulled[i] = simplify(dq_part);
            Expr dv_part = Expr::constant(0);
            for (std::size_t j = 0; j < chart.dim(); ++j)
                dv_part = dv_part + substitute(moved.dv[j], pull) * diff(leg.p_of[j], lsys->chart().qd(i));
            pulled[chart.dim() + i] = simplify(dv_part);
        }
        std::vector<Expr> flat_l = flatten(moved_l);
        std::vector<Expr> gap;
        gap.reserve(flat_l.size());
        for (std::size_t a = 0; a < flat_l.size(); ++a) gap.push_back(simplify(flat_l[a] - pulled[a]));
        require_agreement(Verdict::True, all_zero(gap, seed), "Legendre pullback of L_X alpha");

        Verdict closed_l =
            matrix_zero(exterior_derivative_coeffs(flat_l, zl), lsys->seed());
        require_agreement(pot.closed, closed_l, "exactness equivalence across the Legendre map");

        if (pot.closed == Verdict::True) {
            Expr residual_l = simplify(apply_field(lsys->chart(), xt, lsys->energy(), Side::Lagrangian) +
                                       pair_semibasic(lsys->force(), xt));
            require_agreement(zero_verdict(residual, seed), zero_verdict(residual_l, lsys->seed()),
                              "energy residual equivalence across the Legendre map");

            if (pot.f) {
                // Conservation rates computed without differentiating f:
                // X(f) = (L_X alpha)(dynamics field) on each side.
                Expr alpha_on_xhat = pairing(xhat.base, alpha_q.dq);
                Expr rate_h = simplify(pairing(flatten(xh), flatten(moved)) -
                                       apply_field(chart, xh, alpha_on_xhat, Side::Hamiltonian));
                VectorFieldTQ xi = forced_el_field(*lsys);
                Expr alpha_on_xt = pairing(flatten(xt), flatten(lsys->alpha()));
                Expr rate_l = simplify(pairing(flatten(xi), flat_l) -
                                       apply_field(lsys->chart(), xi, alpha_on_xt, Side::Lagrangian));
                require_agreement(zero_verdict(rate_h, seed), zero_verdict(rate_l, lsys->seed()),
                                  "conserved-quantity equivalence across the Legendre map");
                require_agreement(zero_verdict(residual, seed), zero_verdict(rate_h, seed),
                                  "Hamiltonian conserved-quantity criterion");
            }
        }
    }
    return report;
}

} // namespace fm
