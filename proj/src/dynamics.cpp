#include "forcedmech/dynamics.hpp"

#include "forcedmech/errors.hpp"

#include <utility>

namespace fm {

namespace {

void check_same_chart(const ChartedSystem& a, const ChartedSystem& b) {
    bool same = a.dim() == b.dim();
    for (std::size_t i = 0; same && i < a.dim(); ++i)
        same = a.q(i).symbol_name() == b.q(i).symbol_name();
    if (!same) throw PreconditionError("systems live on different charts");
}

SemibasicForm rayleigh_force(const ChartedSystem& chart, const Expr& dissipation) {
    chart.require_on_side(dissipation, Side::Lagrangian, "dissipation function");
    OneFormTQ theta = apply_S_star(chart, dissipation);
    return make_semibasic_form(chart, theta.dq, Side::Lagrangian);
}

} // namespace

ForcedLagrangianSystem::ForcedLagrangianSystem(ChartedSystem chart, Expr lagrangian, SemibasicForm force,
                                               std::uint64_t seed)
    : chart_(std::move(chart)), lagrangian_(simplify(lagrangian)),
      force_(make_semibasic_form(chart_, std::move(force.comps), force.side)), seed_(seed) {
    chart_.require_on_side(lagrangian_, Side::Lagrangian, "Lagrangian");
    if (force_.side != Side::Lagrangian)
        throw PreconditionError("force 1-form must be given in (q, q̇) variables");
    hessian_ = fm::hessian(chart_, lagrangian_, seed_);
    if (hessian_.regular == Verdict::False)
        throw PreconditionError("Lagrangian is not regular: Hessian determinant vanishes identically");
    if (hessian_.regular == Verdict::Indeterminate)
        throw IndeterminateError("cannot decide Hessian regularity");
    if (chart_.dim() <= 4) hessian_inverse_ = symbolic_inverse(hessian_.w, seed_);
    alpha_ = poincare_cartan_1form(chart_, lagrangian_);
    omega_ = poincare_cartan_2form(chart_, lagrangian_);
    energy_ = fm::energy(chart_, lagrangian_);
}

ForcedLagrangianSystem ForcedLagrangianSystem::from_rayleigh(ChartedSystem chart, Expr lagrangian, Expr dissipation,
                                                             std::uint64_t seed) {
    SemibasicForm beta = rayleigh_force(chart, dissipation);
    ForcedLagrangianSystem sys(std::move(chart), std::move(lagrangian), std::move(beta), seed);
    sys.dissipation_ = simplify(dissipation);
    return sys;
}

ForcedHamiltonianSystem::ForcedHamiltonianSystem(ChartedSystem chart, Expr hamiltonian, SemibasicForm force)
    : chart_(std::move(chart)), hamiltonian_(simplify(hamiltonian)),
      force_(make_semibasic_form(chart_, std::move(force.comps), force.side)) {
    chart_.require_on_side(hamiltonian_, Side::Hamiltonian, "Hamiltonian");
    if (force_.side != Side::Hamiltonian)
        throw PreconditionError("force 1-form must be given in (q, p) variables");
}

VectorFieldTQ forced_el_field(const ForcedLagrangianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    std::size_t n = chart.dim();
    const Expr& L = sys.lagrangian();
    Matrix inv = sys.hessian_inverse() ? *sys.hessian_inverse() : symbolic_inverse(sys.hessian().w, sys.seed());
    std::vector<Expr> rhs;
    rhs.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        Expr dldqdj = diff(L, chart.qd(j));
        Expr r = diff(L, chart.q(j)) - sys.force().comps[j];
        for (std::size_t k = 0; k < n; ++k) r = r - chart.qd(k) * diff(dldqdj, chart.q(k));
        rhs.push_back(simplify(r));
    }
    std::vector<Expr> accel = mat_vec(inv, rhs);
    for (Expr& a : accel) a = simplify(a);
    return make_vector_field_tq(chart, chart.velocities(), std::move(accel));
}

Expr forced_el_residual(const ForcedLagrangianSystem& sys, std::size_t i) {
    const ChartedSystem& chart = sys.chart();
    VectorFieldTQ xi = forced_el_field(sys);
    Expr momentum_rate = apply_field(chart, xi, diff(sys.lagrangian(), chart.qd(i)), Side::Lagrangian);
    return simplify(momentum_rate - diff(sys.lagrangian(), chart.q(i)) + sys.force().comps[i]);
}

VectorFieldTQ forced_hamilton_field(const ForcedHamiltonianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    std::size_t n = chart.dim();
    std::vector<Expr> base, fiber;
    base.reserve(n);
    fiber.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        base.push_back(diff(sys.hamiltonian(), chart.p(i)));
        fiber.push_back(Expr::constant(0) - diff(sys.hamiltonian(), chart.q(i)) - sys.force().comps[i]);
    }
    return make_vector_field_tq(chart, std::move(base), std::move(fiber));
}

bool check_leg_related(const ForcedLagrangianSystem& lsys, const ForcedHamiltonianSystem& hsys) {
    const ChartedSystem& chart = lsys.chart();
    check_same_chart(chart, hsys.chart());
    std::size_t n = chart.dim();
    LegendreMap leg = legendre(chart, lsys.lagrangian(), lsys.seed());

    std::vector<std::pair<Expr, Expr>> pull;
    pull.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pull.emplace_back(chart.p(i), leg.p_of[i]);

    VectorFieldTQ xi = forced_el_field(lsys);
    VectorFieldTQ xh = forced_hamilton_field(hsys);
    std::vector<Expr> residuals;
    residuals.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i)
        residuals.push_back(xi.base[i] - substitute(xh.base[i], pull));
    for (std::size_t i = 0; i < n; ++i) {
        Expr pushed = apply_field(chart, xi, leg.p_of[i], Side::Lagrangian);
        residuals.push_back(pushed - substitute(xh.fiber[i], pull));
    }
    bool ok = true;
    for (const Expr& r : residuals) {
        switch (zero_verdict(simplify(r), lsys.seed())) {
        case Verdict::True: break;
        case Verdict::False: ok = false; break;
        case Verdict::Indeterminate:
            throw IndeterminateError("cannot decide Legendre relatedness: " + simplify(r).to_string());
        }
    }
    return ok;
}

Expr poisson_bracket(const ChartedSystem& chart, const Expr& f, const Expr& g) {
    chart.require_on_side(f, Side::Hamiltonian, "Poisson bracket argument");
    chart.require_on_side(g, Side::Hamiltonian, "Poisson bracket argument");
    Expr out = Expr::constant(0);
    for (std::size_t i = 0; i < chart.dim(); ++i)
        out = out + diff(f, chart.q(i)) * diff(g, chart.p(i)) - diff(f, chart.p(i)) * diff(g, chart.q(i));
    return simplify(out);
}

Expr hamiltonian_conservation_criterion(const Expr& f, const ForcedHamiltonianSystem& hsys) {
    const ChartedSystem& chart = hsys.chart();
    chart.require_on_side(f, Side::Hamiltonian, "candidate integral");
    Expr out = poisson_bracket(chart, f, hsys.hamiltonian());
    for (std::size_t i = 0; i < chart.dim(); ++i)
        out = out - hsys.force().comps[i] * diff(f, chart.p(i));
    return simplify(out);
}

ForcedHamiltonianSystem legendre_transform(const ForcedLagrangianSystem& lsys) {
    const ChartedSystem& chart = lsys.chart();
    LegendreMap leg = legendre(chart, lsys.lagrangian(), lsys.seed());
    if (!leg.qd_of)
        throw PreconditionError("Legendre map has no symbolic inverse; cannot form the Hamiltonian side");
    std::vector<std::pair<Expr, Expr>> inv;
    inv.reserve(chart.dim());
    for (std::size_t i = 0; i < chart.dim(); ++i) inv.emplace_back(chart.qd(i), (*leg.qd_of)[i]);
    Expr h = simplify(substitute(lsys.energy(), inv));
    std::vector<Expr> gamma;
    gamma.reserve(chart.dim());
    for (const Expr& b : lsys.force().comps) gamma.push_back(simplify(substitute(b, inv)));
    return ForcedHamiltonianSystem(chart, h, make_semibasic_form(chart, std::move(gamma), Side::Hamiltonian));
}

} // namespace fm
