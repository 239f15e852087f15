#include "forcedmech/reduction.hpp"

#include "forcedmech/errors.hpp"
#include "forcedmech/rayleigh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>

namespace fm {

namespace {

void require_verdict(Verdict v, const std::string& what) {
    if (v == Verdict::False) throw PreconditionError(what);
    if (v == Verdict::Indeterminate) throw IndeterminateError(what + " (indeterminate)");
}

Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::False || b == Verdict::False) return Verdict::False;
    if (a == Verdict::Indeterminate || b == Verdict::Indeterminate) return Verdict::Indeterminate;
    return Verdict::True;
}

Verdict all_zero(const std::vector<Expr>& comps, std::uint64_t seed) {
    Verdict v = Verdict::True;
    for (const Expr& c : comps) v = combine(v, zero_verdict(c, seed));
    return v;
}

void check_action_shape(const ChartedSystem& chart, const AlgebraAction& action) {
    const std::size_t d = action.generators.size();
    if (d == 0) throw PreconditionError("algebra action needs at least one generator");
    for (const VectorFieldQ& g : action.generators)
        if (g.comps.size() != chart.dim())
            throw PreconditionError("generator dimension does not match the chart");
    if (action.structure.size() != d)
        throw PreconditionError("structure constants must be indexed over the generators");
    for (const auto& row : action.structure) {
        if (row.size() != d) throw PreconditionError("structure constants must be indexed over the generators");
        for (const auto& entry : row)
            if (entry.size() != d)
                throw PreconditionError("structure constants must be indexed over the generators");
    }
}

// xi_Q = sum_a coeffs[a] * gen_a as a vector field on Q.
VectorFieldQ combine_generators(const ChartedSystem& chart, const AlgebraAction& action,
                                const std::vector<Expr>& coeffs) {
    if (coeffs.size() != action.generators.size())
        throw PreconditionError("coefficient vector length does not match the generators");
    for (const Expr& c : coeffs)
        if (c.depends_on_kind(SymbolKind::Coordinate) || c.depends_on_kind(SymbolKind::Velocity) ||
            c.depends_on_kind(SymbolKind::Momentum))
            throw PreconditionError("algebra coefficients must be constant on phase space");
    std::vector<Expr> comps(chart.dim(), Expr::constant(0));
    for (std::size_t a = 0; a < coeffs.size(); ++a)
        for (std::size_t i = 0; i < chart.dim(); ++i)
            comps[i] = comps[i] + coeffs[a] * action.generators[a].comps[i];
    for (Expr& c : comps) c = simplify(c);
    return VectorFieldQ{std::move(comps)};
}

void require_invariant_lagrangian(const ChartedSystem& chart, const AlgebraAction& action,
                                  const ForcedLagrangianSystem& sys) {
    for (std::size_t a = 0; a < action.generators.size(); ++a) {
        Expr rate = apply_field(chart, complete_lift(chart, action.generators[a]), sys.lagrangian(),
                                Side::Lagrangian);
        require_verdict(zero_verdict(rate, sys.seed()),
                        "the action does not leave the Lagrangian invariant (generator " +
                            std::to_string(a) + ")");
    }
}

// beta(xi^c) followed by the 2n coefficients of i_{xi^c} d(beta).
std::vector<Expr> membership_residuals(const ChartedSystem& chart, const VectorFieldQ& xi,
                                       const SemibasicForm& beta) {
    VectorFieldTQ xc = complete_lift(chart, xi);
    OneFormTQ beta_form{beta.comps, std::vector<Expr>(chart.dim(), Expr::constant(0))};
    TwoFormTQ dbeta = exterior_derivative(chart, beta_form, Side::Lagrangian);
    std::vector<Expr> out;
    out.push_back(simplify(pairing(flatten(xc), flatten(beta_form))));
    for (Expr& c : interior_product(flatten(xc), dbeta.m)) out.push_back(simplify(c));
    return out;
}

std::vector<Expr> coefficient_vector_exprs(const std::vector<Rational>& v) {
    std::vector<Expr> out;
    out.reserve(v.size());
    for (const Rational& r : v) out.push_back(Expr::constant(r));
    return out;
}

} // namespace

AlgebraAction make_algebra_action(const ChartedSystem& chart, std::vector<VectorFieldQ> generators,
                                  std::vector<std::vector<std::vector<Rational>>> structure,
                                  std::uint64_t seed) {
    AlgebraAction action{std::move(generators), std::move(structure)};
    check_action_shape(chart, action);
    const std::size_t d = action.generators.size();
    // Re-validate generator components through the charted constructor.
    for (const VectorFieldQ& g : action.generators) make_vector_field_q(chart, g.comps);

    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
            for (std::size_t dd = 0; dd < d; ++dd)
                if (action.structure[a][b][dd] != -action.structure[b][a][dd])
                    throw PreconditionError("structure constants must be antisymmetric in the lower indices");

    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            std::vector<Expr> bracket = lie_bracket_coeffs(action.generators[a].comps,
                                                           action.generators[b].comps, chart.coordinates());
            for (std::size_t i = 0; i < chart.dim(); ++i) {
                Expr residual = bracket[i];
                for (std::size_t dd = 0; dd < d; ++dd)
                    residual = residual +
                               Expr::constant(action.structure[a][b][dd]) * action.generators[dd].comps[i];
                require_verdict(zero_verdict(simplify(residual), seed),
                                "generator brackets do not close on the structure constants");
            }
        }
    }
    return action;
}

AlgebraAction rotation_action_3d(const ChartedSystem& chart) {
    if (chart.dim() != 3) throw PreconditionError("the rotation action needs a 3-dimensional chart");
    Expr z = Expr::constant(0);
    std::vector<VectorFieldQ> gens = {
        VectorFieldQ{{z, -chart.q(2), chart.q(1)}},
        VectorFieldQ{{chart.q(2), z, -chart.q(0)}},
        VectorFieldQ{{-chart.q(1), chart.q(0), z}},
    };
    std::vector<std::vector<std::vector<Rational>>> c(
        3, std::vector<std::vector<Rational>>(3, std::vector<Rational>(3, Rational(0))));
    c[0][1][2] = Rational(1);
    c[1][0][2] = Rational(-1);
    c[1][2][0] = Rational(1);
    c[2][1][0] = Rational(-1);
    c[2][0][1] = Rational(1);
    c[0][2][1] = Rational(-1);
    return make_algebra_action(chart, std::move(gens), std::move(c));
}

AlgebraAction translation_action(const ChartedSystem& chart, const std::vector<std::size_t>& axes) {
    if (axes.empty()) throw PreconditionError("translation action needs at least one axis");
    std::vector<VectorFieldQ> gens;
    for (std::size_t axis : axes) {
        if (axis >= chart.dim()) throw PreconditionError("translation axis out of range");
        std::vector<Expr> comps(chart.dim(), Expr::constant(0));
        comps[axis] = Expr::constant(1);
        gens.push_back(VectorFieldQ{std::move(comps)});
    }
    std::vector<std::vector<std::vector<Rational>>> c(
        axes.size(),
        std::vector<std::vector<Rational>>(axes.size(), std::vector<Rational>(axes.size(), Rational(0))));
    return make_algebra_action(chart, std::move(gens), std::move(c));
}

Expr momentum_component(const AlgebraAction& action, std::size_t a, const ForcedLagrangianSystem& sys) {
    if (a >= action.generators.size()) throw PreconditionError("generator index out of range");
    check_action_shape(sys.chart(), action);
    VectorFieldTQ xc = complete_lift(sys.chart(), action.generators[a]);
    return simplify(pairing(flatten(xc), flatten(sys.alpha())));
}

std::vector<Expr> momentum_map(const AlgebraAction& action, const ForcedLagrangianSystem& sys) {
    std::vector<Expr> out;
    out.reserve(action.generators.size());
    for (std::size_t a = 0; a < action.generators.size(); ++a)
        out.push_back(momentum_component(action, a, sys));
    return out;
}

GBetaResult in_g_beta(const AlgebraAction& action, const std::vector<Expr>& coeffs,
                      const ForcedLagrangianSystem& sys) {
    const ChartedSystem& chart = sys.chart();
    check_action_shape(chart, action);
    require_invariant_lagrangian(chart, action, sys);

    VectorFieldQ xi = combine_generators(chart, action, coeffs);
    std::vector<Expr> residuals = membership_residuals(chart, xi, sys.force());

    GBetaResult out;
    out.pairing_residual = residuals.front();
    out.invariance_residual.assign(residuals.begin() + 1, residuals.end());
    out.member = combine(zero_verdict(out.pairing_residual, sys.seed()),
                         all_zero(out.invariance_residual, sys.seed()));
    return out;
}

std::vector<std::vector<Rational>> g_beta_basis(const ChartedSystem& chart, const AlgebraAction& action,
                                                const SemibasicForm& beta, std::uint64_t seed) {
    check_action_shape(chart, action);
    if (beta.side != Side::Lagrangian)
        throw PreconditionError("g_beta extraction works on the Lagrangian side");
    const std::size_t d = action.generators.size();

    std::vector<std::vector<Expr>> residuals(d);
    for (std::size_t a = 0; a < d; ++a)
        residuals[a] = membership_residuals(chart, action.generators[a], beta);
    const std::size_t n_comp = residuals.front().size();

    // Primary path: exact monomial matching over the phase symbols, with
    // parameter-dependent coefficients resolved at exact rational samples.
    std::vector<Expr> vars = chart.tq_symbols();
    bool polynomial = true;
    std::vector<std::vector<std::map<std::vector<std::int64_t>, Expr>>> mono(d);
    for (std::size_t a = 0; a < d && polynomial; ++a) {
        mono[a].resize(n_comp);
        for (std::size_t k = 0; k < n_comp && polynomial; ++k) {
            auto poly = as_polynomial(expand(residuals[a][k]), vars);
            if (!poly) polynomial = false;
            else mono[a][k] = std::move(*poly);
        }
    }

    std::vector<std::vector<Rational>> basis;
    bool done = false;
    if (polynomial) {
        std::set<std::string> param_names;
        for (const auto& per_gen : mono)
            for (const auto& per_comp : per_gen)
                for (const auto& [key, coeff] : per_comp)
                    for (const Expr& s : coeff.free_symbols()) param_names.insert(s.symbol_name());

        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        auto random_rational = [&rng]() {
            std::int64_t num = 1 + static_cast<std::int64_t>(rng() % 12);
            std::int64_t den = 1 + static_cast<std::int64_t>(rng() % 7);
            if (rng() % 2) num = -num;
            return Rational(num) / Rational(den);
        };
        const int n_assignments = param_names.empty() ? 1 : 3;
        std::vector<std::vector<std::pair<Expr, Expr>>> assignments(n_assignments);
        for (int t = 0; t < n_assignments; ++t)
            for (const std::string& name : param_names)
                assignments[t].push_back({Expr::symbol(name, SymbolKind::Parameter),
                                          Expr::constant(random_rational())});

        std::vector<std::vector<Rational>> rows;
        bool resolvable = true;
        for (std::size_t k = 0; k < n_comp && resolvable; ++k) {
            std::set<std::vector<std::int64_t>> keys;
            for (std::size_t a = 0; a < d; ++a)
                for (const auto& [key, coeff] : mono[a][k]) keys.insert(key);
            for (const auto& key : keys) {
                std::vector<Expr> entries(d, Expr::constant(0));
                bool constant_row = true;
                for (std::size_t a = 0; a < d; ++a) {
                    auto it = mono[a][k].find(key);
                    if (it != mono[a][k].end()) entries[a] = it->second;
                    if (!entries[a].is_constant()) constant_row = false;
                }
                if (constant_row) {
                    std::vector<Rational> row;
                    for (const Expr& e : entries) row.push_back(e.constant_value());
                    rows.push_back(std::move(row));
                    continue;
                }
                for (int t = 0; t < n_assignments && resolvable; ++t) {
                    std::vector<Rational> row;
                    for (const Expr& e : entries) {
                        Expr v = simplify(substitute(e, assignments[t]));
                        if (!v.is_constant()) {
                            resolvable = false;
                            break;
                        }
                        row.push_back(v.constant_value());
                    }
                    if (resolvable) rows.push_back(std::move(row));
                }
            }
        }
        if (resolvable) {
            basis = rational_nullspace(std::move(rows), d);
            done = true;
        }
    }

    if (!done) {
        // Sampling fallback: evaluate the residuals at random points and take
        // a numeric nullspace; candidates are rationalized and re-verified.
        std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
        std::uniform_real_distribution<double> mag(0.1, 2.0);
        std::set<std::string> names;
        for (const auto& per_gen : residuals)
            for (const Expr& r : per_gen)
                for (const Expr& s : r.free_symbols()) names.insert(s.symbol_name());

        const int n_samples = 12;
        std::vector<std::vector<double>> rows;
        for (int s = 0; s < n_samples; ++s) {
            for (int attempt = 0;; ++attempt) {
                if (attempt >= 200)
                    throw IndeterminateError("could not sample the membership residuals");
                Bindings b;
                for (const std::string& name : names)
                    b.set(name, (rng() % 2 ? 1.0 : -1.0) * mag(rng));
                std::vector<std::vector<double>> sample_rows;
                bool ok = true;
                for (std::size_t k = 0; k < n_comp && ok; ++k) {
                    std::vector<double> row(d);
                    for (std::size_t a = 0; a < d; ++a) {
                        try {
                            row[a] = eval(residuals[a][k], b);
                        } catch (const EvalError&) {
                            ok = false;
                            break;
                        }
                    }
                    if (ok) sample_rows.push_back(std::move(row));
                }
                if (ok) {
                    for (auto& r : sample_rows) rows.push_back(std::move(r));
                    break;
                }
            }
        }
        for (const auto& v : numeric_nullspace(std::move(rows), d, 1e-8)) {
            std::vector<Rational> rv;
            rv.reserve(d);
            for (double x : v) rv.push_back(rationalize(x));
            VectorFieldQ xi = combine_generators(chart, action, coefficient_vector_exprs(rv));
            for (const Expr& r : membership_residuals(chart, xi, beta))
                if (zero_verdict(r, seed) != Verdict::True)
                    throw IndeterminateError(
                        "sampled membership basis failed symbolic re-verification");
            basis.push_back(std::move(rv));
        }
    }

    // The span must close under the algebra bracket.
    if (basis.size() >= 2) {
        std::size_t base_rank = rational_rank(basis, d);
        for (std::size_t i = 0; i < basis.size(); ++i) {
            for (std::size_t j = i + 1; j < basis.size(); ++j) {
                std::vector<Rational> w(d, Rational(0));
                for (std::size_t a = 0; a < d; ++a)
                    for (std::size_t b = 0; b < d; ++b)
                        for (std::size_t dd = 0; dd < d; ++dd)
                            w[dd] += basis[i][a] * basis[j][b] * action.structure[a][b][dd];
                std::vector<std::vector<Rational>> stacked = basis;
                stacked.push_back(std::move(w));
                if (rational_rank(stacked, d) != base_rank)
                    throw Error("extracted membership basis is not bracket-closed");
            }
        }
    }
    return basis;
}

std::vector<GRConditions> g_R_conditions(const ChartedSystem& chart, const AlgebraAction& action,
                                         const Expr& dissipation, std::uint64_t seed) {
    check_action_shape(chart, action);
    SemibasicForm beta = force_from_dissipation(chart, dissipation);

    std::vector<GRConditions> out;
    out.reserve(action.generators.size());
    for (const VectorFieldQ& gen : action.generators) {
        GRConditions cond;
        cond.vertical_residual =
            simplify(apply_field(chart, vertical_lift(chart, gen), dissipation, Side::Lagrangian));
        Expr xc_r = apply_field(chart, complete_lift(chart, gen), dissipation, Side::Lagrangian);
        cond.basic_residual = apply_S_star(chart, xc_r).dq;
        for (Expr& c : cond.basic_residual) c = simplify(c);
        cond.member = combine(zero_verdict(cond.vertical_residual, seed),
                              all_zero(cond.basic_residual, seed));

        Verdict force_side = all_zero(membership_residuals(chart, gen, beta), seed);
        if (cond.member != Verdict::Indeterminate && force_side != Verdict::Indeterminate &&
            cond.member != force_side)
            throw Error("dissipation-side and force-side membership conditions disagree");
        out.push_back(std::move(cond));
    }
    return out;
}

Expr momentum_conservation_check(const AlgebraAction& action, std::size_t a,
                                 const ForcedLagrangianSystem& sys) {
    if (a >= action.generators.size()) throw PreconditionError("generator index out of range");
    const ChartedSystem& chart = sys.chart();
    check_action_shape(chart, action);

    Expr j = momentum_component(action, a, sys);
    Expr rate = simplify(apply_field(chart, forced_el_field(sys), j, Side::Lagrangian));

    VectorFieldTQ xc = complete_lift(chart, action.generators[a]);
    Verdict invariant =
        zero_verdict(apply_field(chart, xc, sys.lagrangian(), Side::Lagrangian), sys.seed());
    if (invariant == Verdict::True) {
        Verdict rate_zero = zero_verdict(rate, sys.seed());
        Verdict pairing_zero =
            zero_verdict(pairing(flatten(xc), semibasic_coeffs(sys.force())), sys.seed());
        if (rate_zero != Verdict::Indeterminate && pairing_zero != Verdict::Indeterminate &&
            rate_zero != pairing_zero)
            throw Error("momentum rate disagrees with the force pairing on an invariant Lagrangian");
    }
    return rate;
}

CyclicReduction cyclic_reduce(const ForcedLagrangianSystem& sys, std::size_t cyclic_index,
                              const Expr& mu, std::uint64_t seed) {
    const ChartedSystem& chart = sys.chart();
    const std::size_t n = chart.dim();
    if (cyclic_index >= n) throw PreconditionError("cyclic index out of range");
    if (n < 2) throw PreconditionError("reduction needs at least two degrees of freedom");

    if (mu.depends_on_kind(SymbolKind::Coordinate) || mu.depends_on_kind(SymbolKind::Velocity) ||
        mu.depends_on_kind(SymbolKind::Momentum))
        throw PreconditionError("the momentum level must be constant on phase space");
    for (const Expr& s : mu.free_symbols())
        if (!chart.has_parameter(s.symbol_name()))
            throw PreconditionError("momentum level uses an undeclared parameter '" + s.symbol_name() +
                                    "'");

    const Expr& qc = chart.q(cyclic_index);
    const Expr& qdc = chart.qd(cyclic_index);
    const std::string cyclic_name = qc.symbol_name();

    require_verdict(zero_verdict(diff(sys.lagrangian(), qc), seed),
                    "non-cyclic coordinate: the Lagrangian depends on " + cyclic_name);
    for (std::size_t j = 0; j < n; ++j)
        require_verdict(zero_verdict(diff(sys.force().comps[j], qc), seed),
                        "non-cyclic coordinate: the force depends on " + cyclic_name);
    require_verdict(zero_verdict(sys.force().comps[cyclic_index], seed),
                    "non-cyclic coordinate: the force acts along " + cyclic_name);

    Expr p_c = diff(sys.lagrangian(), qdc);
    Expr a = diff(p_c, qdc);
    require_verdict(zero_verdict(diff(a, qdc), seed),
                    "unsolvable momentum relation: the momentum is not linear in the cyclic velocity");
    Verdict a_zero = zero_verdict(a, seed);
    if (a_zero == Verdict::True)
        throw PreconditionError("unsolvable momentum relation: the cyclic velocity does not enter");
    if (a_zero == Verdict::Indeterminate)
        throw IndeterminateError("unsolvable momentum relation (indeterminate coefficient)");

    Expr b = simplify(p_c - a * qdc);
    Expr psi = simplify((mu - b) / a);
    Expr routhian = simplify(substitute(sys.lagrangian() - mu * qdc, {{qdc, psi}}));

    std::vector<std::string> reduced_names;
    for (std::size_t i = 0; i < n; ++i)
        if (i != cyclic_index) reduced_names.push_back(chart.q(i).symbol_name());
    ChartedSystem reduced_chart(reduced_names, chart.parameters());

    auto build = [&]() -> ForcedLagrangianSystem {
        if (sys.dissipation() && zero_verdict(diff(*sys.dissipation(), qc), seed) == Verdict::True) {
            Expr reduced_r = simplify(substitute(*sys.dissipation(), {{qdc, psi}}));
            return ForcedLagrangianSystem::from_rayleigh(reduced_chart, routhian, reduced_r, seed);
        }
        std::vector<Expr> comps;
        for (std::size_t j = 0; j < n; ++j)
            if (j != cyclic_index)
                comps.push_back(simplify(substitute(sys.force().comps[j], {{qdc, psi}})));
        return ForcedLagrangianSystem(reduced_chart, routhian,
                                      make_semibasic_form(reduced_chart, comps, Side::Lagrangian), seed);
    };
    return CyclicReduction{build(), cyclic_index, mu, psi, routhian};
}

Trajectory abelian_reconstruct(const Trajectory& reduced_traj, const ForcedLagrangianSystem& sys,
                               std::size_t cyclic_index, const Expr& mu, double q_c0,
                               const Bindings& overrides) {
    CyclicReduction red = cyclic_reduce(sys, cyclic_index, mu);
    const ChartedSystem& rchart = red.reduced.chart();
    const std::size_t n = sys.chart().dim();
    const std::size_t k_rows = reduced_traj.times.size();
    for (const auto& row : reduced_traj.states)
        if (row.size() != 2 * (n - 1))
            throw PreconditionError("reduced trajectory does not match the reduced chart");

    Bindings constants = sys.chart().parameter_bindings();
    constants.merge(overrides);
    std::vector<Expr> in_syms = rchart.phase_symbols(Side::Lagrangian);
    in_syms.push_back(Expr::symbol("t", SymbolKind::Time));
    CompiledProgram prog = CompiledProgram::compile({red.psi}, in_syms, constants);

    std::vector<double> scratch, in(in_syms.size()), f(k_rows);
    for (std::size_t k = 0; k < k_rows; ++k) {
        for (std::size_t i = 0; i < reduced_traj.states[k].size(); ++i) in[i] = reduced_traj.states[k][i];
        in.back() = reduced_traj.times[k];
        prog.eval(in.data(), &f[k], scratch);
    }

    // Cumulative integral of psi by the per-interval parabolic rule.
    std::vector<double> integral(k_rows, 0.0);
    const double h = reduced_traj.h;
    if (k_rows == 2) {
        integral[1] = h / 2.0 * (f[0] + f[1]);
    } else if (k_rows >= 3) {
        integral[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
        for (std::size_t k = 2; k < k_rows; ++k)
            integral[k] = integral[k - 1] + h / 12.0 * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k]);
    }

    Trajectory out;
    out.h = reduced_traj.h;
    out.times = reduced_traj.times;
    out.monitors = reduced_traj.monitors;
    out.truncated = reduced_traj.truncated;
    out.states.reserve(k_rows);
    for (std::size_t k = 0; k < k_rows; ++k) {
        const auto& rrow = reduced_traj.states[k];
        std::vector<double> row(2 * n);
        for (std::size_t i = 0, ri = 0; i < n; ++i) {
            if (i == cyclic_index) continue;
            row[i] = rrow[ri];
            row[n + i] = rrow[(n - 1) + ri];
            ++ri;
        }
        row[cyclic_index] = q_c0 + integral[k];
        row[n + cyclic_index] = f[k];
        out.states.push_back(std::move(row));
    }
    return out;
}

} // namespace fm
