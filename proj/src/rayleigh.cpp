#include "forcedmech/rayleigh.hpp"

#include "forcedmech/errors.hpp"

namespace fm {

SemibasicForm force_from_dissipation(const ChartedSystem& chart, const Expr& dissipation) {
    chart.require_on_side(dissipation, Side::Lagrangian, "dissipation function");
    OneFormTQ theta = apply_S_star(chart, dissipation);
    return make_semibasic_form(chart, theta.dq, Side::Lagrangian);
}

bool gauge_equivalence(const ChartedSystem& chart, const Expr& dissipation, const Expr& f) {
    Expr g = expand(f);
    if (g.depends_on_kind(SymbolKind::Velocity))
        throw PreconditionError("gauge term must not depend on velocities: " + g.to_string());
    SemibasicForm a = force_from_dissipation(chart, dissipation);
    SemibasicForm b = force_from_dissipation(chart, simplify(dissipation + g));
    for (std::size_t i = 0; i < chart.dim(); ++i)
        if (!a.comps[i].same_as(b.comps[i])) return false;
    return true;
}

RayleighLemmaResiduals verify_rayleigh_lemma(const ChartedSystem& chart, const Expr& dissipation,
                                             const VectorFieldQ& x, const VectorFieldTQ& xt) {
    SemibasicForm rbar = force_from_dissipation(chart, dissipation);
    VectorFieldTQ xc = complete_lift(chart, x);
    VectorFieldTQ xv = vertical_lift(chart, x);

    Expr lhs1 = pairing(xc.base, rbar.comps);
    Expr rhs1 = apply_field(chart, xv, dissipation, Side::Lagrangian);
    Expr r1 = simplify(lhs1 - rhs1);

    OneFormTQ semib{rbar.comps, std::vector<Expr>(chart.dim(), Expr())};
    OneFormTQ moved = lie_derivative(chart, xc, semib, Side::Lagrangian);
    OneFormTQ target = apply_S_star(chart, apply_field(chart, xc, dissipation, Side::Lagrangian));
    std::vector<Expr> r2;
    std::vector<Expr> lhs = flatten(moved);
    std::vector<Expr> rhs = flatten(target);
    r2.reserve(lhs.size());
    for (std::size_t a = 0; a < lhs.size(); ++a) r2.push_back(simplify(lhs[a] - rhs[a]));

    Expr lhs3 = pairing(xt.base, rbar.comps);
    Expr rhs3 = apply_field(chart, apply_S(xt), dissipation, Side::Lagrangian);
    Expr r3 = simplify(lhs3 - rhs3);

    return RayleighLemmaResiduals{r1, std::move(r2), r3};
}

Expr energy_dissipation_residual(const ForcedLagrangianSystem& sys) {
    if (!sys.dissipation())
        throw PreconditionError("system was not built from a dissipation function");
    const ChartedSystem& chart = sys.chart();
    Expr rate = apply_field(chart, forced_el_field(sys), sys.energy(), Side::Lagrangian);
    Expr dissipated = apply_field(chart, liouville(chart), *sys.dissipation(), Side::Lagrangian);
    return simplify(rate + dissipated);
}

LinearRayleigh linear_rayleigh(const ChartedSystem& chart, const Matrix& tensor, std::uint64_t seed) {
    std::size_t n = chart.dim();
    if (tensor.size() != n)
        throw PreconditionError("dissipation tensor must be " + std::to_string(n) + "x" + std::to_string(n));
    for (const auto& row : tensor) {
        if (row.size() != n)
            throw PreconditionError("dissipation tensor must be square");
        for (const Expr& e : row) {
            if (e.depends_on_kind(SymbolKind::Velocity) || e.depends_on_kind(SymbolKind::Momentum))
                throw PreconditionError("dissipation tensor entries must depend on coordinates only");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            switch (zero_verdict(simplify(tensor[i][j] - tensor[j][i]), seed)) {
            case Verdict::True: break;
            case Verdict::False:
                throw PreconditionError("dissipation tensor must be symmetric");
            case Verdict::Indeterminate:
                throw IndeterminateError("cannot decide dissipation tensor symmetry");
            }
        }

    Expr r = Expr::constant(0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            r = r + tensor[i][j] * chart.qd(i) * chart.qd(j) / 2;
    r = simplify(r);

    std::vector<Expr> comps(n, Expr());
    std::vector<Expr> fiber(n, Expr());
    for (std::size_t j = 0; j < n; ++j) {
        Expr cj = Expr::constant(0);
        for (std::size_t i = 0; i < n; ++i) cj = cj + tensor[i][j] * chart.qd(i);
        comps[j] = simplify(cj);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Expr fi = Expr::constant(0);
        for (std::size_t j = 0; j < n; ++j) fi = fi + tensor[i][j] * chart.qd(j);
        fiber[i] = simplify(fi);
    }
    LinearRayleigh out{DissipationFunction{r, tensor},
                       make_semibasic_form(chart, std::move(comps), Side::Lagrangian),
                       FibredMorphism{std::move(fiber)}};
    return out;
}

} // namespace fm
