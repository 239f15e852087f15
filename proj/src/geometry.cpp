#include "forcedmech/geometry.hpp"

#include "forcedmech/errors.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace fm {

namespace {

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

void check_dim(std::size_t got, std::size_t want, const std::string& what) {
    if (got != want)
        throw PreconditionError(what + ": expected " + std::to_string(want) + " components, got " +
                                std::to_string(got));
}

} // namespace

ChartedSystem::ChartedSystem(std::vector<std::string> coordinate_names, std::map<std::string, double> parameters)
    : params_(std::move(parameters)) {
    if (coordinate_names.empty()) throw PreconditionError("a chart needs at least one coordinate");
    std::set<std::string> seen;
    for (const std::string& name : coordinate_names) {
        if (!valid_identifier(name)) throw PreconditionError("invalid coordinate name '" + name + "'");
        for (const std::string& derived : {name, name + "d", "p_" + name})
            if (!seen.insert(derived).second)
                throw PreconditionError("name collision on '" + derived + "' in chart");
        q_.push_back(Expr::symbol(name, SymbolKind::Coordinate));
        qd_.push_back(Expr::symbol(name + "d", SymbolKind::Velocity));
        p_.push_back(Expr::symbol("p_" + name, SymbolKind::Momentum));
    }
    for (const auto& [name, value] : params_) {
        if (!valid_identifier(name)) throw PreconditionError("invalid parameter name '" + name + "'");
        if (!seen.insert(name).second) throw PreconditionError("name collision on parameter '" + name + "'");
        (void)value;
    }
}

std::vector<Expr> ChartedSystem::tq_symbols() const {
    std::vector<Expr> zs = q_;
    zs.insert(zs.end(), qd_.begin(), qd_.end());
    return zs;
}

std::vector<Expr> ChartedSystem::tsq_symbols() const {
    std::vector<Expr> zs = q_;
    zs.insert(zs.end(), p_.begin(), p_.end());
    return zs;
}

std::vector<Expr> ChartedSystem::phase_symbols(Side side) const {
    return side == Side::Lagrangian ? tq_symbols() : tsq_symbols();
}

Bindings ChartedSystem::parameter_bindings() const {
    Bindings b;
    for (const auto& [name, value] : params_) b.set(name, value);
    return b;
}

Expr ChartedSystem::parameter(const std::string& name) const {
    if (!has_parameter(name)) throw PreconditionError("unknown parameter '" + name + "'");
    return Expr::symbol(name, SymbolKind::Parameter);
}

void ChartedSystem::require_on_side(const Expr& e, Side side, const std::string& what) const {
    SymbolKind banned = side == Side::Lagrangian ? SymbolKind::Momentum : SymbolKind::Velocity;
    if (e.depends_on_kind(banned))
        throw PreconditionError(what + " must not involve " +
                                (banned == SymbolKind::Momentum ? "momentum" : "velocity") +
                                " symbols: " + e.to_string());
}

VectorFieldQ make_vector_field_q(const ChartedSystem& chart, std::vector<Expr> comps) {
    check_dim(comps.size(), chart.dim(), "vector field on Q");
    for (Expr& c : comps) {
        if (c.depends_on_kind(SymbolKind::Velocity) || c.depends_on_kind(SymbolKind::Momentum))
            throw PreconditionError("vector field on Q must depend on coordinates only: " + c.to_string());
        c = simplify(c);
    }
    return VectorFieldQ{std::move(comps)};
}

VectorFieldTQ make_vector_field_tq(const ChartedSystem& chart, std::vector<Expr> base, std::vector<Expr> fiber) {
    check_dim(base.size(), chart.dim(), "vector field base part");
    check_dim(fiber.size(), chart.dim(), "vector field fiber part");
    for (Expr& c : base) c = simplify(c);
    for (Expr& c : fiber) c = simplify(c);
    return VectorFieldTQ{std::move(base), std::move(fiber)};
}

SemibasicForm make_semibasic_form(const ChartedSystem& chart, std::vector<Expr> comps, Side side) {
    check_dim(comps.size(), chart.dim(), "semibasic form");
    for (Expr& c : comps) {
        chart.require_on_side(c, side, "semibasic form coefficient");
        c = simplify(c);
    }
    return SemibasicForm{std::move(comps), side};
}

SemibasicForm zero_force(const ChartedSystem& chart, Side side) {
    return SemibasicForm{std::vector<Expr>(chart.dim(), Expr()), side};
}

// --- Generic exterior calculus ----------------------------------------------

std::vector<Expr> gradient(const Expr& f, const std::vector<Expr>& zs) {
    std::vector<Expr> out;
    out.reserve(zs.size());
    for (const Expr& z : zs) out.push_back(diff(f, z));
    return out;
}

Matrix exterior_derivative_coeffs(const std::vector<Expr>& theta, const std::vector<Expr>& zs) {
    check_dim(theta.size(), zs.size(), "exterior derivative");
    std::size_t n = zs.size();
    Matrix m = zero_matrix(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            Expr v = simplify(diff(theta[b], zs[a]) - diff(theta[a], zs[b]));
            m[a][b] = v;
            m[b][a] = simplify(-v);
        }
    return m;
}

std::vector<Expr> interior_product(const std::vector<Expr>& x, const Matrix& m) {
    check_dim(m.size(), x.size(), "interior product");
    std::size_t n = x.size();
    std::vector<Expr> out;
    out.reserve(n);
    for (std::size_t b = 0; b < n; ++b) {
        std::vector<Expr> terms;
        for (std::size_t a = 0; a < n; ++a)
            if (!x[a].is_zero_constant() && !m[a][b].is_zero_constant()) terms.push_back(x[a] * m[a][b]);
        out.push_back(simplify(add(std::move(terms))));
    }
    return out;
}

Expr pairing(const std::vector<Expr>& x, const std::vector<Expr>& theta) {
    check_dim(theta.size(), x.size(), "pairing");
    std::vector<Expr> terms;
    for (std::size_t a = 0; a < x.size(); ++a) terms.push_back(x[a] * theta[a]);
    return simplify(add(std::move(terms)));
}

std::vector<Expr> lie_derivative_coeffs(const std::vector<Expr>& x, const std::vector<Expr>& theta,
                                        const std::vector<Expr>& zs) {
    // Cartan: L_X θ = i_X dθ + d(θ(X)).
    Matrix dtheta = exterior_derivative_coeffs(theta, zs);
    std::vector<Expr> part1 = interior_product(x, dtheta);
    std::vector<Expr> part2 = gradient(pairing(x, theta), zs);
    std::vector<Expr> out;
    out.reserve(zs.size());
    for (std::size_t a = 0; a < zs.size(); ++a) out.push_back(simplify(part1[a] + part2[a]));
    return out;
}

std::vector<Expr> lie_bracket_coeffs(const std::vector<Expr>& x, const std::vector<Expr>& y,
                                     const std::vector<Expr>& zs) {
    check_dim(x.size(), zs.size(), "lie bracket");
    check_dim(y.size(), zs.size(), "lie bracket");
    std::size_t n = zs.size();
    std::vector<Expr> out;
    out.reserve(n);
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<Expr> terms;
        for (std::size_t b = 0; b < n; ++b) {
            if (!x[b].is_zero_constant()) terms.push_back(x[b] * diff(y[a], zs[b]));
            if (!y[b].is_zero_constant()) terms.push_back(-(y[b] * diff(x[a], zs[b])));
        }
        out.push_back(simplify(add(std::move(terms))));
    }
    return out;
}

Expr apply_vector_field(const std::vector<Expr>& x, const Expr& f, const std::vector<Expr>& zs) {
    check_dim(x.size(), zs.size(), "vector field application");
    std::vector<Expr> terms;
    for (std::size_t a = 0; a < zs.size(); ++a)
        if (!x[a].is_zero_constant()) terms.push_back(x[a] * diff(f, zs[a]));
    return simplify(add(std::move(terms)));
}

std::vector<Expr> flatten(const VectorFieldTQ& x) {
    std::vector<Expr> out = x.base;
    out.insert(out.end(), x.fiber.begin(), x.fiber.end());
    return out;
}

std::vector<Expr> flatten(const OneFormTQ& theta) {
    std::vector<Expr> out = theta.dq;
    out.insert(out.end(), theta.dv.begin(), theta.dv.end());
    return out;
}

VectorFieldTQ unflatten_vf(std::vector<Expr> comps) {
    if (comps.size() % 2 != 0) throw PreconditionError("phase vector field needs 2n components");
    std::size_t n = comps.size() / 2;
    return VectorFieldTQ{std::vector<Expr>(comps.begin(), comps.begin() + n),
                         std::vector<Expr>(comps.begin() + n, comps.end())};
}

OneFormTQ unflatten_form(std::vector<Expr> comps) {
    if (comps.size() % 2 != 0) throw PreconditionError("phase 1-form needs 2n coefficients");
    std::size_t n = comps.size() / 2;
    return OneFormTQ{std::vector<Expr>(comps.begin(), comps.begin() + n),
                     std::vector<Expr>(comps.begin() + n, comps.end())};
}

std::vector<Expr> semibasic_coeffs(const SemibasicForm& beta) {
    std::vector<Expr> out = beta.comps;
    out.insert(out.end(), beta.comps.size(), Expr());
    return out;
}

// --- Lifts and canonical structures ------------------------------------------

VectorFieldTQ vertical_lift(const ChartedSystem& chart, const VectorFieldQ& x) {
    check_dim(x.comps.size(), chart.dim(), "vertical lift");
    return VectorFieldTQ{std::vector<Expr>(chart.dim(), Expr()), x.comps};
}

VectorFieldTQ complete_lift(const ChartedSystem& chart, const VectorFieldQ& x) {
    check_dim(x.comps.size(), chart.dim(), "complete lift");
    std::size_t n = chart.dim();
    std::vector<Expr> fiber;
    fiber.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Expr> terms;
        for (std::size_t j = 0; j < n; ++j) terms.push_back(chart.qd(j) * diff(x.comps[i], chart.q(j)));
        fiber.push_back(simplify(add(std::move(terms))));
    }
    return VectorFieldTQ{x.comps, std::move(fiber)};
}

VectorFieldTQ apply_S(const VectorFieldTQ& x) {
    return VectorFieldTQ{std::vector<Expr>(x.base.size(), Expr()), x.base};
}

OneFormTQ apply_S_star(const ChartedSystem& chart, const Expr& f) {
    std::size_t n = chart.dim();
    OneFormTQ out{std::vector<Expr>(), std::vector<Expr>(n, Expr())};
    out.dq.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.dq.push_back(diff(f, chart.qd(i)));
    return out;
}

VectorFieldTQ liouville(const ChartedSystem& chart) {
    return VectorFieldTQ{std::vector<Expr>(chart.dim(), Expr()), chart.velocities()};
}

OneFormTQ poincare_cartan_1form(const ChartedSystem& chart, const Expr& lagrangian) {
    chart.require_on_side(lagrangian, Side::Lagrangian, "Lagrangian");
    return apply_S_star(chart, lagrangian); // α_L = S*(dL)
}

TwoFormTQ poincare_cartan_2form(const ChartedSystem& chart, const Expr& lagrangian) {
    OneFormTQ alpha = poincare_cartan_1form(chart, lagrangian);
    Matrix d = exterior_derivative_coeffs(flatten(alpha), chart.tq_symbols());
    for (auto& row : d)
        for (Expr& e : row) e = simplify(-e); // ω_L = −dα_L
    return TwoFormTQ{std::move(d)};
}

OneFormTQ exterior_derivative_applied(const ChartedSystem& chart, const Expr& f, Side side) {
    return unflatten_form(gradient(f, chart.phase_symbols(side)));
}

TwoFormTQ exterior_derivative(const ChartedSystem& chart, const OneFormTQ& theta, Side side) {
    return TwoFormTQ{exterior_derivative_coeffs(flatten(theta), chart.phase_symbols(side))};
}

OneFormTQ lie_derivative(const ChartedSystem& chart, const VectorFieldTQ& x, const OneFormTQ& theta, Side side) {
    return unflatten_form(lie_derivative_coeffs(flatten(x), flatten(theta), chart.phase_symbols(side)));
}

VectorFieldTQ lie_bracket(const ChartedSystem& chart, const VectorFieldTQ& x, const VectorFieldTQ& y, Side side) {
    return unflatten_vf(lie_bracket_coeffs(flatten(x), flatten(y), chart.phase_symbols(side)));
}

Expr apply_field(const ChartedSystem& chart, const VectorFieldTQ& x, const Expr& f, Side side) {
    return apply_vector_field(flatten(x), f, chart.phase_symbols(side));
}

HessianResult hessian(const ChartedSystem& chart, const Expr& lagrangian, std::uint64_t seed) {
    std::size_t n = chart.dim();
    Matrix w = zero_matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        Expr dLi = diff(lagrangian, chart.qd(i));
        for (std::size_t j = 0; j < n; ++j) w[i][j] = diff(dLi, chart.qd(j));
    }
    Expr det = determinant(w);
    Verdict zero = zero_verdict(det, seed);
    Verdict regular = zero == Verdict::True    ? Verdict::False
                      : zero == Verdict::False ? Verdict::True
                                               : Verdict::Indeterminate;
    return HessianResult{std::move(w), std::move(det), regular};
}

Expr energy(const ChartedSystem& chart, const Expr& lagrangian) {
    Expr delta_l = apply_field(chart, liouville(chart), lagrangian, Side::Lagrangian);
    return simplify(delta_l - lagrangian);
}

LegendreMap legendre(const ChartedSystem& chart, const Expr& lagrangian, std::uint64_t seed) {
    std::size_t n = chart.dim();
    HessianResult h = hessian(chart, lagrangian, seed);
    if (h.regular == Verdict::False)
        throw PreconditionError("Legendre transform needs a regular Lagrangian; det W = " + h.det.to_string());
    LegendreMap leg;
    leg.p_of.reserve(n);
    for (std::size_t i = 0; i < n; ++i) leg.p_of.push_back(diff(lagrangian, chart.qd(i)));

    // Symbolic inverse when L is quadratic in the velocities: p = W(q)·q̇ + b(q)
    // with W velocity-independent, so q̇ = W⁻¹(p − b).
    bool quadratic = true;
    for (const auto& row : h.w)
        for (const Expr& e : row)
            if (e.depends_on_kind(SymbolKind::Velocity)) quadratic = false;
    if (quadratic && n <= 4 && h.regular == Verdict::True) {
        std::vector<std::pair<Expr, Expr>> at_zero;
        for (std::size_t i = 0; i < n; ++i) at_zero.emplace_back(chart.qd(i), Expr());
        std::vector<Expr> rhs;
        rhs.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            Expr b = substitute(leg.p_of[i], at_zero);
            rhs.push_back(simplify(chart.p(i) - b));
        }
        Matrix winv = symbolic_inverse(h.w, seed);
        leg.qd_of = mat_vec(winv, rhs);
        leg.hyperregular = Verdict::True;
    } else {
        leg.qd_of = std::nullopt;
        leg.hyperregular = h.regular == Verdict::True && quadratic ? Verdict::True : Verdict::Indeterminate;
    }
    return leg;
}

OneFormTQ canonical_1form(const ChartedSystem& chart) {
    return OneFormTQ{chart.momenta(), std::vector<Expr>(chart.dim(), Expr())};
}

TwoFormTQ canonical_2form(const ChartedSystem& chart) {
    // ω_Q = dq^i ∧ dp_i = −d(α_Q).
    Matrix d = exterior_derivative_coeffs(flatten(canonical_1form(chart)), chart.tsq_symbols());
    for (auto& row : d)
        for (Expr& e : row) e = simplify(-e);
    return TwoFormTQ{std::move(d)};
}

FibredMorphism form_to_morphism(const ChartedSystem& chart, const SemibasicForm& beta) {
    check_dim(beta.comps.size(), chart.dim(), "form_to_morphism");
    return FibredMorphism{beta.comps};
}

SemibasicForm morphism_to_form(const ChartedSystem& chart, const FibredMorphism& d, Side side) {
    return make_semibasic_form(chart, d.fiber, side);
}

} // namespace fm
