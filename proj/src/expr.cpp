#include "forcedmech/expr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace fm {

using detail::Node;

const char* to_string(FuncKind f) {
    switch (f) {
    case FuncKind::Exp: return "exp";
    case FuncKind::Log: return "log";
    case FuncKind::Sin: return "sin";
    case FuncKind::Cos: return "cos";
    case FuncKind::Abs: return "abs";
    }
    return "?";
}

int kind_rank(SymbolKind k) {
    switch (k) {
    case SymbolKind::Coordinate: return 0;
    case SymbolKind::Velocity: return 1;
    case SymbolKind::Momentum: return 2;
    case SymbolKind::Parameter: return 3;
    case SymbolKind::Time: return 4;
    }
    return 5;
}

class ExprBuilder {
  public:
    static Expr wrap(std::shared_ptr<const Node> n) { return Expr(std::move(n)); }
};

namespace {

std::size_t hash_combine(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t rational_hash(const Rational& r) {
    return std::hash<std::string>{}(rational_to_string(r));
}

std::size_t node_hash(const Node& n) {
    std::size_t h = static_cast<std::size_t>(n.kind) * 0x9e3779b97f4a7c15ULL + 1;
    switch (n.kind) {
    case NodeKind::Constant: h = hash_combine(h, rational_hash(n.value)); break;
    case NodeKind::Symbol:
        h = hash_combine(h, static_cast<std::size_t>(kind_rank(n.sym_kind)));
        h = hash_combine(h, std::hash<std::string>{}(n.sym_name));
        break;
    case NodeKind::Pow: h = hash_combine(h, rational_hash(n.expo)); break;
    case NodeKind::Func: h = hash_combine(h, static_cast<std::size_t>(n.fk)); break;
    case NodeKind::Quadrature: h = hash_combine(h, std::hash<std::string>{}(n.quad_var)); break;
    default: break;
    }
    for (const Expr& k : n.kids) h = hash_combine(h, k.hash());
    return h;
}

Expr finish(Node n) {
    n.hash = node_hash(n);
    return ExprBuilder::wrap(std::make_shared<const Node>(std::move(n)));
}

int node_rank(NodeKind k) {
    switch (k) {
    case NodeKind::Constant: return 0;
    case NodeKind::Symbol: return 1;
    case NodeKind::Func: return 2;
    case NodeKind::Pow: return 3;
    case NodeKind::Mul: return 4;
    case NodeKind::Add: return 5;
    case NodeKind::Quadrature: return 6;
    }
    return 7;
}

int compare_rational(const Rational& a, const Rational& b) {
    if (a < b) return -1;
    if (b < a) return 1;
    return 0;
}

Expr make_constant(Rational v) {
    Node n;
    n.kind = NodeKind::Constant;
    n.value = std::move(v);
    n.canonical = true;
    return finish(std::move(n));
}

const Expr& zero_expr() {
    static const Expr z = make_constant(Rational(0));
    return z;
}
const Expr& one_expr() {
    static const Expr o = make_constant(Rational(1));
    return o;
}

} // namespace

Expr::Expr() : node_(zero_expr().node_) {}

Expr Expr::constant(Rational v) { return make_constant(std::move(v)); }
Expr Expr::integer(std::int64_t v) { return make_constant(Rational(v)); }
Expr Expr::rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw EvalError("rational with zero denominator");
    return make_constant(Rational(num) / den);
}

Expr Expr::symbol(std::string name, SymbolKind kind) {
    if (name.empty()) throw PreconditionError("symbol name must be non-empty");
    Node n;
    n.kind = NodeKind::Symbol;
    n.sym_name = std::move(name);
    n.sym_kind = kind;
    n.canonical = true;
    return finish(std::move(n));
}

bool Expr::is_zero_constant() const {
    return node_->kind == NodeKind::Constant && node_->value == 0;
}
bool Expr::is_one_constant() const {
    return node_->kind == NodeKind::Constant && node_->value == 1;
}
const Rational& Expr::constant_value() const {
    if (!is_constant()) throw PreconditionError("constant_value on non-constant expression");
    return node_->value;
}
const std::string& Expr::symbol_name() const {
    if (!is_symbol()) throw PreconditionError("symbol_name on non-symbol expression");
    return node_->sym_name;
}
SymbolKind Expr::symbol_kind() const {
    if (!is_symbol()) throw PreconditionError("symbol_kind on non-symbol expression");
    return node_->sym_kind;
}

bool Expr::same_as(const Expr& other) const {
    if (node_ == other.node_) return true;
    if (node_->hash != other.node_->hash) return false;
    return compare(*this, other) == 0;
}

int compare(const Expr& a, const Expr& b) {
    if (a.raw() == b.raw()) return 0;
    const Node* na = a.raw();
    const Node* nb = b.raw();
    if (na->kind != nb->kind) return node_rank(na->kind) < node_rank(nb->kind) ? -1 : 1;
    switch (na->kind) {
    case NodeKind::Constant: return compare_rational(na->value, nb->value);
    case NodeKind::Symbol: {
        int ra = kind_rank(na->sym_kind), rb = kind_rank(nb->sym_kind);
        if (ra != rb) return ra < rb ? -1 : 1;
        int c = na->sym_name.compare(nb->sym_name);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case NodeKind::Pow: {
        int c = compare(na->kids[0], nb->kids[0]);
        if (c != 0) return c;
        return compare_rational(na->expo, nb->expo);
    }
    case NodeKind::Func: {
        if (na->fk != nb->fk) return static_cast<int>(na->fk) < static_cast<int>(nb->fk) ? -1 : 1;
        return compare(na->kids[0], nb->kids[0]);
    }
    case NodeKind::Quadrature: {
        int c = na->quad_var.compare(nb->quad_var);
        if (c != 0) return c < 0 ? -1 : 1;
        return compare(na->kids[0], nb->kids[0]);
    }
    case NodeKind::Add:
    case NodeKind::Mul: {
        std::size_t m = std::min(na->kids.size(), nb->kids.size());
        for (std::size_t i = 0; i < m; ++i) {
            int c = compare(na->kids[i], nb->kids[i]);
            if (c != 0) return c;
        }
        if (na->kids.size() != nb->kids.size()) return na->kids.size() < nb->kids.size() ? -1 : 1;
        return 0;
    }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Raw constructors. They build plain trees; simplify() produces canonical form.
// ---------------------------------------------------------------------------

Expr add(std::vector<Expr> terms) {
    if (terms.empty()) return zero_expr();
    if (terms.size() == 1) return terms[0];
    Node n;
    n.kind = NodeKind::Add;
    n.kids = std::move(terms);
    return finish(std::move(n));
}

Expr mul(std::vector<Expr> factors) {
    if (factors.empty()) return one_expr();
    if (factors.size() == 1) return factors[0];
    Node n;
    n.kind = NodeKind::Mul;
    n.kids = std::move(factors);
    return finish(std::move(n));
}

Expr pow(const Expr& base, const Rational& exponent) {
    Node n;
    n.kind = NodeKind::Pow;
    n.kids = {base};
    n.expo = exponent;
    return finish(std::move(n));
}

Expr pow(const Expr& base, std::int64_t exponent) { return pow(base, Rational(exponent)); }

namespace {
Expr raw_func(FuncKind fk, const Expr& arg) {
    Node n;
    n.kind = NodeKind::Func;
    n.fk = fk;
    n.kids = {arg};
    return finish(std::move(n));
}
} // namespace

Expr exp(const Expr& x) { return raw_func(FuncKind::Exp, x); }
Expr log(const Expr& x) { return raw_func(FuncKind::Log, x); }
Expr sin(const Expr& x) { return raw_func(FuncKind::Sin, x); }
Expr cos(const Expr& x) { return raw_func(FuncKind::Cos, x); }
Expr abs(const Expr& x) { return raw_func(FuncKind::Abs, x); }
Expr sqrt(const Expr& x) { return pow(x, Rational(1) / 2); }

Expr quadrature01(const Expr& integrand, const Expr& var) {
    if (!var.is_symbol()) throw PreconditionError("quadrature variable must be a symbol");
    Node n;
    n.kind = NodeKind::Quadrature;
    n.kids = {integrand};
    n.quad_var = var.symbol_name();
    return finish(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator-(const Expr& a) { return mul({Expr::integer(-1), a}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, -b}); }
Expr operator/(const Expr& a, const Expr& b) { return mul({a, pow(b, -1)}); }
Expr operator+(const Expr& a, std::int64_t b) { return a + Expr::integer(b); }
Expr operator+(std::int64_t a, const Expr& b) { return Expr::integer(a) + b; }
Expr operator-(const Expr& a, std::int64_t b) { return a - Expr::integer(b); }
Expr operator-(std::int64_t a, const Expr& b) { return Expr::integer(a) - b; }
Expr operator*(const Expr& a, std::int64_t b) { return a * Expr::integer(b); }
Expr operator*(std::int64_t a, const Expr& b) { return Expr::integer(a) * b; }
Expr operator/(const Expr& a, std::int64_t b) { return a / Expr::integer(b); }
Expr operator/(std::int64_t a, const Expr& b) { return Expr::integer(a) / b; }

// ---------------------------------------------------------------------------
// Bindings
// ---------------------------------------------------------------------------

std::optional<double> Bindings::get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

void Bindings::merge(const Bindings& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

// ---------------------------------------------------------------------------
// Canonical simplification
// ---------------------------------------------------------------------------

namespace {

Expr make_add(std::vector<Expr> terms);
Expr make_mul(std::vector<Expr> factors);
Expr make_pow(const Expr& base, const Rational& e);
Expr make_func(FuncKind fk, const Expr& arg);

Expr mark_canonical(Node n) {
    n.canonical = true;
    return finish(std::move(n));
}

// Canonical n-ary node from already-sorted canonical children (>= 2 of them).
Expr canonical_nary(NodeKind kind, std::vector<Expr> kids) {
    Node n;
    n.kind = kind;
    n.kids = std::move(kids);
    return mark_canonical(std::move(n));
}

// Split a canonical term into (rational coefficient, coefficient-free core).
std::pair<Rational, Expr> coeff_core(const Expr& term) {
    if (term.kind() == NodeKind::Mul && term.operands()[0].is_constant()) {
        const auto& kids = term.operands();
        Rational c = kids[0].constant_value();
        if (kids.size() == 2) return {c, kids[1]};
        std::vector<Expr> rest(kids.begin() + 1, kids.end());
        return {c, canonical_nary(NodeKind::Mul, std::move(rest))};
    }
    return {Rational(1), term};
}

// Rebuild coefficient * core with both parts canonical.
Expr with_coeff(const Rational& c, const Expr& core) {
    if (c == 0) return zero_expr();
    if (c == 1) return core;
    std::vector<Expr> kids;
    kids.push_back(make_constant(c));
    if (core.kind() == NodeKind::Mul) {
        for (const Expr& k : core.operands()) kids.push_back(k);
    } else if (core.is_one_constant()) {
        return make_constant(c);
    } else {
        kids.push_back(core);
    }
    return canonical_nary(NodeKind::Mul, std::move(kids));
}

Expr make_add(std::vector<Expr> terms) {
    Rational csum(0);
    std::map<Expr, Rational, ExprLess> collected;
    std::vector<Expr> stack(terms.rbegin(), terms.rend());
    while (!stack.empty()) {
        Expr t = stack.back();
        stack.pop_back();
        if (t.kind() == NodeKind::Add) {
            for (auto it = t.operands().rbegin(); it != t.operands().rend(); ++it) stack.push_back(*it);
            continue;
        }
        if (t.is_constant()) {
            csum += t.constant_value();
            continue;
        }
        auto [c, core] = coeff_core(t);
        collected[core] += c;
    }
    std::vector<Expr> out;
    if (csum != 0) out.push_back(make_constant(csum));
    for (const auto& [core, c] : collected) {
        if (c == 0) continue;
        out.push_back(with_coeff(c, core));
    }
    if (out.empty()) return zero_expr();
    std::sort(out.begin(), out.end(), ExprLess{});
    if (out.size() == 1) return out[0];
    return canonical_nary(NodeKind::Add, std::move(out));
}

// Exact integer power of a rational (n may be negative; base 0 with n < 0 throws).
Rational rational_pow(const Rational& c, std::int64_t n) {
    if (n == 0) return Rational(1);
    bool inv = n < 0;
    auto m = static_cast<unsigned long>(inv ? -n : n);
    Rational r(boost::multiprecision::pow(numerator(c), m), boost::multiprecision::pow(denominator(c), m));
    if (inv) {
        if (r == 0) throw EvalError("division by zero while folding a constant power");
        r = Rational(1) / r;
    }
    return r;
}

bool fits_int64(const BigInt& v) {
    return v <= std::numeric_limits<std::int64_t>::max() && v >= std::numeric_limits<std::int64_t>::min();
}

Expr make_pow(const Expr& base, const Rational& e) {
    if (e == 0) return one_expr(); // includes 0^0 = 1 (empty-product convention)
    if (e == 1) return base;
    if (base.is_constant()) {
        const Rational& c = base.constant_value();
        if (c == 1) return one_expr();
        if (c == 0) {
            if (e > 0) return zero_expr();
            throw EvalError("division by zero while folding a constant power");
        }
        if (rational_is_integer(e) && fits_int64(numerator(e)))
            return make_constant(rational_pow(c, rational_to_int(e)));
        if (!rational_is_integer(e) && fits_int64(numerator(e)) && fits_int64(denominator(e))) {
            auto den = static_cast<std::int64_t>(denominator(e));
            auto num = static_cast<std::int64_t>(numerator(e));
            if (den <= 64 && !(c < 0 && den % 2 == 0)) {
                BigInt rn, rd;
                if (exact_integer_root(numerator(c), static_cast<unsigned>(den), rn) &&
                    exact_integer_root(denominator(c), static_cast<unsigned>(den), rd))
                    return make_constant(rational_pow(Rational(rn, rd), num));
            }
        }
        Node n;
        n.kind = NodeKind::Pow;
        n.kids = {base};
        n.expo = e;
        return mark_canonical(std::move(n));
    }
    if (base.kind() == NodeKind::Pow) {
        const Rational& f = base.exponent();
        bool outer_int = rational_is_integer(e);
        bool inner_odd = rational_is_integer(f) && numerator(f) % 2 != 0;
        if (outer_int || inner_odd) return make_pow(base.base(), e * f);
    }
    if (base.kind() == NodeKind::Func && base.func_kind() == FuncKind::Exp)
        return make_func(FuncKind::Exp, make_mul({make_constant(e), base.argument()}));
    if (base.kind() == NodeKind::Mul && rational_is_integer(e)) {
        std::vector<Expr> parts;
        parts.reserve(base.operands().size());
        for (const Expr& k : base.operands()) parts.push_back(make_pow(k, e));
        return make_mul(std::move(parts));
    }
    Node n;
    n.kind = NodeKind::Pow;
    n.kids = {base};
    n.expo = e;
    return mark_canonical(std::move(n));
}

Expr make_mul(std::vector<Expr> factors) {
    Rational cprod(1);
    std::map<Expr, Rational, ExprLess> powers; // base -> exponent sum
    std::vector<Expr> exp_args;
    bool reshaped = false;
    std::vector<Expr> out;

    std::vector<Expr> stack(factors.rbegin(), factors.rend());
    while (!stack.empty()) {
        Expr f = stack.back();
        stack.pop_back();
        if (f.kind() == NodeKind::Mul) {
            for (auto it = f.operands().rbegin(); it != f.operands().rend(); ++it) stack.push_back(*it);
            continue;
        }
        if (f.is_constant()) {
            cprod *= f.constant_value();
            if (cprod == 0) return zero_expr();
            continue;
        }
        if (f.kind() == NodeKind::Func && f.func_kind() == FuncKind::Exp) {
            exp_args.push_back(f.argument());
            continue;
        }
        if (f.kind() == NodeKind::Pow)
            powers[f.base()] += f.exponent();
        else
            powers[f] += Rational(1);
    }
    for (const auto& [base, e] : powers) {
        if (e == 0) continue;
        Expr r = make_pow(base, e);
        if (r.is_constant()) {
            cprod *= r.constant_value();
            if (cprod == 0) return zero_expr();
        } else if (r.kind() == NodeKind::Func && r.func_kind() == FuncKind::Exp) {
            exp_args.push_back(r.argument());
        } else if (r.kind() == NodeKind::Mul) {
            out.push_back(r);
            reshaped = true;
        } else {
            out.push_back(r);
        }
    }
    if (!exp_args.empty()) {
        Expr merged = make_func(FuncKind::Exp, make_add(std::move(exp_args)));
        if (merged.is_constant())
            cprod *= merged.constant_value();
        else
            out.push_back(merged);
    }
    if (reshaped) {
        out.push_back(make_constant(cprod));
        return make_mul(std::move(out));
    }
    if (cprod == 0 || out.empty()) return make_constant(cprod);
    if (out.size() == 1 && out[0].kind() == NodeKind::Add && cprod != 1) {
        // Distribute the scalar over the sum so that sums of sums collect.
        std::vector<Expr> terms;
        for (const Expr& t : out[0].operands()) {
            if (t.is_constant()) {
                terms.push_back(make_constant(cprod * t.constant_value()));
            } else {
                auto [tc, core] = coeff_core(t);
                terms.push_back(with_coeff(cprod * tc, core));
            }
        }
        return make_add(std::move(terms));
    }
    std::sort(out.begin(), out.end(), ExprLess{});
    if (cprod != 1) out.insert(out.begin(), make_constant(cprod));
    if (out.size() == 1) return out[0];
    return canonical_nary(NodeKind::Mul, std::move(out));
}

// If e carries a negative rational up front, give back the sign-flipped form.
std::optional<Expr> as_negated(const Expr& e) {
    if (e.is_constant() && e.constant_value() < 0) return make_constant(-e.constant_value());
    if (e.kind() == NodeKind::Mul && e.operands()[0].is_constant() && e.operands()[0].constant_value() < 0) {
        auto [c, core] = coeff_core(e);
        return with_coeff(-c, core);
    }
    return std::nullopt;
}

bool is_even_integer(const Rational& r) { return rational_is_integer(r) && numerator(r) % 2 == 0; }

Expr make_func(FuncKind fk, const Expr& arg) {
    if (arg.is_constant()) {
        const Rational& c = arg.constant_value();
        switch (fk) {
        case FuncKind::Exp:
            if (c == 0) return one_expr();
            break;
        case FuncKind::Log:
            if (c == 1) return zero_expr();
            break;
        case FuncKind::Sin:
            if (c == 0) return zero_expr();
            break;
        case FuncKind::Cos:
            if (c == 0) return one_expr();
            break;
        case FuncKind::Abs: return make_constant(c < 0 ? -c : c);
        }
    }
    switch (fk) {
    case FuncKind::Exp:
        if (arg.kind() == NodeKind::Func && arg.func_kind() == FuncKind::Log) return arg.argument();
        break;
    case FuncKind::Log:
        if (arg.kind() == NodeKind::Func && arg.func_kind() == FuncKind::Exp) return arg.argument();
        break;
    case FuncKind::Sin:
        if (auto neg = as_negated(arg)) return make_mul({make_constant(Rational(-1)), make_func(FuncKind::Sin, *neg)});
        break;
    case FuncKind::Cos:
        if (auto neg = as_negated(arg)) return make_func(FuncKind::Cos, *neg);
        break;
    case FuncKind::Abs: {
        if (arg.kind() == NodeKind::Func &&
            (arg.func_kind() == FuncKind::Abs || arg.func_kind() == FuncKind::Exp))
            return arg; // |.| idempotent; exp is positive
        if (arg.kind() == NodeKind::Pow) {
            const Rational& f = arg.exponent();
            // Even integer powers and principal fractional powers are non-negative;
            // odd powers commute with |.|.
            if (is_even_integer(f) || !rational_is_integer(f)) return arg;
            return make_pow(make_func(FuncKind::Abs, arg.base()), f);
        }
        if (arg.kind() == NodeKind::Mul) {
            std::vector<Expr> parts;
            for (const Expr& k : arg.operands())
                parts.push_back(k.is_constant() ? make_constant(boost::multiprecision::abs(k.constant_value()))
                                                : make_func(FuncKind::Abs, k));
            return make_mul(std::move(parts));
        }
        break;
    }
    }
    Node n;
    n.kind = NodeKind::Func;
    n.fk = fk;
    n.kids = {arg};
    return mark_canonical(std::move(n));
}

bool depends_on_name(const Expr& e, const std::string& name, SymbolKind kind);

Expr make_quadrature(const Expr& integrand, const std::string& var) {
    if (integrand.is_zero_constant()) return zero_expr();
    if (!depends_on_name(integrand, var, SymbolKind::Parameter)) return integrand; // ∫ over [0,1] of a constant-in-var
    Node n;
    n.kind = NodeKind::Quadrature;
    n.kids = {integrand};
    n.quad_var = var;
    return mark_canonical(std::move(n));
}

bool depends_on_name(const Expr& e, const std::string& name, SymbolKind kind) {
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Constant: return false;
    case NodeKind::Symbol: return n->sym_kind == kind && n->sym_name == name;
    case NodeKind::Quadrature:
        if (kind == SymbolKind::Parameter && n->quad_var == name) return false; // bound
        return depends_on_name(n->kids[0], name, kind);
    default:
        for (const Expr& k : n->kids)
            if (depends_on_name(k, name, kind)) return true;
        return false;
    }
}

} // namespace

Expr simplify(const Expr& e) {
    if (e.canonical()) return e;
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Constant: return make_constant(n->value);
    case NodeKind::Symbol: return Expr::symbol(n->sym_name, n->sym_kind);
    case NodeKind::Add: {
        std::vector<Expr> kids;
        kids.reserve(n->kids.size());
        for (const Expr& k : n->kids) kids.push_back(simplify(k));
        return make_add(std::move(kids));
    }
    case NodeKind::Mul: {
        std::vector<Expr> kids;
        kids.reserve(n->kids.size());
        for (const Expr& k : n->kids) kids.push_back(simplify(k));
        return make_mul(std::move(kids));
    }
    case NodeKind::Pow: return make_pow(simplify(n->kids[0]), n->expo);
    case NodeKind::Func: return make_func(n->fk, simplify(n->kids[0]));
    case NodeKind::Quadrature: return make_quadrature(simplify(n->kids[0]), n->quad_var);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Symbol queries
// ---------------------------------------------------------------------------

bool Expr::depends_on(const Expr& sym) const {
    if (!sym.is_symbol()) throw PreconditionError("depends_on expects a symbol");
    return depends_on_name(*this, sym.symbol_name(), sym.symbol_kind());
}

namespace {
void collect_symbols(const Expr& e, std::set<Expr, ExprLess>& out) {
    const Node* n = e.raw();
    if (n->kind == NodeKind::Symbol) {
        out.insert(e);
        return;
    }
    if (n->kind == NodeKind::Quadrature) {
        std::set<Expr, ExprLess> inner;
        collect_symbols(n->kids[0], inner);
        inner.erase(Expr::symbol(n->quad_var, SymbolKind::Parameter));
        out.insert(inner.begin(), inner.end());
        return;
    }
    for (const Expr& k : n->kids) collect_symbols(k, out);
}
} // namespace

std::vector<Expr> Expr::free_symbols() const {
    std::set<Expr, ExprLess> s;
    collect_symbols(*this, s);
    return std::vector<Expr>(s.begin(), s.end());
}

bool Expr::depends_on_kind(SymbolKind kind) const {
    for (const Expr& s : free_symbols())
        if (s.symbol_kind() == kind) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace {
Expr diff_raw(const Expr& e, const std::string& name, SymbolKind kind) {
    if (!depends_on_name(e, name, kind)) return zero_expr();
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Constant: return zero_expr();
    case NodeKind::Symbol: return one_expr();
    case NodeKind::Add: {
        std::vector<Expr> parts;
        for (const Expr& k : n->kids) parts.push_back(diff_raw(k, name, kind));
        return add(std::move(parts));
    }
    case NodeKind::Mul: {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < n->kids.size(); ++i) {
            if (!depends_on_name(n->kids[i], name, kind)) continue;
            std::vector<Expr> fs = n->kids;
            fs[i] = diff_raw(n->kids[i], name, kind);
            terms.push_back(mul(std::move(fs)));
        }
        return add(std::move(terms));
    }
    case NodeKind::Pow: {
        const Expr& b = n->kids[0];
        return mul({make_constant(n->expo), pow(b, n->expo - 1), diff_raw(b, name, kind)});
    }
    case NodeKind::Func: {
        const Expr& u = n->kids[0];
        Expr du = diff_raw(u, name, kind);
        switch (n->fk) {
        case FuncKind::Exp: return mul({e, du});
        case FuncKind::Log: return mul({du, pow(u, -1)});
        case FuncKind::Sin: return mul({cos(u), du});
        case FuncKind::Cos: return mul({Expr::integer(-1), sin(u), du});
        case FuncKind::Abs: throw DerivativeUnavailableError("derivative of abs() is not available");
        }
        break;
    }
    case NodeKind::Quadrature:
        throw DerivativeUnavailableError("derivative of a quadrature node is not available");
    }
    return zero_expr();
}
} // namespace

Expr diff(const Expr& e, const Expr& sym) {
    if (!sym.is_symbol()) throw PreconditionError("diff expects a symbol to differentiate by");
    return simplify(diff_raw(simplify(e), sym.symbol_name(), sym.symbol_kind()));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

double check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("non-finite value in ") + what);
    return v;
}

double eval_node(const Expr& e, const Bindings& b);

// Adaptive Simpson quadrature on [a, b] with error control via interval halving.
double simpson_rec(const std::function<double(double)>& f, double a, double m, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
    double lm = (a + m) / 2, rm = (m + b) / 2;
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, lm, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_rec(f, m, rm, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double adaptive_simpson01(const std::function<double(double)>& f, double tol) {
    double fa = f(0.0), fm = f(0.5), fb = f(1.0);
    double whole = (fa + 4 * fm + fb) / 6.0;
    return simpson_rec(f, 0.0, 0.5, 1.0, fa, fm, fb, whole, tol, 30);
}

double eval_pow(double vb, const Rational& e) {
    if (rational_is_integer(e)) {
        if (vb == 0 && e < 0) throw EvalError("division by zero");
        return std::pow(vb, rational_to_double(e));
    }
    if (vb < 0) throw EvalError("fractional power of a negative base");
    if (vb == 0 && e < 0) throw EvalError("division by zero");
    return std::pow(vb, rational_to_double(e));
}

double eval_node(const Expr& e, const Bindings& b) {
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Constant: return rational_to_double(n->value);
    case NodeKind::Symbol: {
        auto v = b.get(n->sym_name);
        if (!v) throw EvalError("unbound symbol '" + n->sym_name + "'");
        return *v;
    }
    case NodeKind::Add: {
        double s = 0;
        for (const Expr& k : n->kids) s += eval_node(k, b);
        return check_finite(s, "sum");
    }
    case NodeKind::Mul: {
        double p = 1;
        for (const Expr& k : n->kids) p *= eval_node(k, b);
        return check_finite(p, "product");
    }
    case NodeKind::Pow: return check_finite(eval_pow(eval_node(n->kids[0], b), n->expo), "power");
    case NodeKind::Func: {
        double u = eval_node(n->kids[0], b);
        switch (n->fk) {
        case FuncKind::Exp: return check_finite(std::exp(u), "exp");
        case FuncKind::Log:
            if (u <= 0) throw EvalError("log of a non-positive value");
            return check_finite(std::log(u), "log");
        case FuncKind::Sin: return std::sin(u);
        case FuncKind::Cos: return std::cos(u);
        case FuncKind::Abs: return std::abs(u);
        }
        break;
    }
    case NodeKind::Quadrature: {
        Bindings local = b;
        const Expr& g = n->kids[0];
        const std::string& var = n->quad_var;
        auto f = [&](double t) {
            local.set(var, t);
            return eval_node(g, local);
        };
        return check_finite(adaptive_simpson01(f, 1e-12), "quadrature");
    }
    }
    throw EvalError("unhandled node in eval");
}

} // namespace

double eval(const Expr& e, const Bindings& b) { return eval_node(e, b); }

double eval_abs_scale(const Expr& e, const Bindings& b) {
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Constant: return std::abs(rational_to_double(n->value));
    case NodeKind::Symbol: return std::abs(eval_node(e, b));
    case NodeKind::Add: {
        double s = 0;
        for (const Expr& k : n->kids) s += eval_abs_scale(k, b);
        return check_finite(s, "scale sum");
    }
    case NodeKind::Mul: {
        double p = 1;
        for (const Expr& k : n->kids) p *= eval_abs_scale(k, b);
        return check_finite(p, "scale product");
    }
    case NodeKind::Pow:
        if (n->expo > 0)
            return check_finite(eval_pow(eval_abs_scale(n->kids[0], b), n->expo), "scale power");
        return std::abs(eval_node(e, b));
    default: return std::abs(eval_node(e, b));
    }
}

// ---------------------------------------------------------------------------
// Substitution, expansion, polynomial view
// ---------------------------------------------------------------------------

namespace {
Expr substitute_raw(const Expr& e, const std::map<Expr, Expr, ExprLess>& table) {
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Constant: return e;
    case NodeKind::Symbol: {
        auto it = table.find(e);
        return it == table.end() ? e : it->second;
    }
    case NodeKind::Add: {
        std::vector<Expr> kids;
        for (const Expr& k : n->kids) kids.push_back(substitute_raw(k, table));
        return add(std::move(kids));
    }
    case NodeKind::Mul: {
        std::vector<Expr> kids;
        for (const Expr& k : n->kids) kids.push_back(substitute_raw(k, table));
        return mul(std::move(kids));
    }
    case NodeKind::Pow: return pow(substitute_raw(n->kids[0], table), n->expo);
    case NodeKind::Func: return raw_func(n->fk, substitute_raw(n->kids[0], table));
    case NodeKind::Quadrature:
        return quadrature01(substitute_raw(n->kids[0], table), Expr::symbol(n->quad_var, SymbolKind::Parameter));
    }
    return e;
}
} // namespace

Expr substitute(const Expr& e, const std::vector<std::pair<Expr, Expr>>& replacements) {
    std::map<Expr, Expr, ExprLess> table;
    for (const auto& [from, to] : replacements) {
        if (!from.is_symbol()) throw PreconditionError("substitute expects symbols on the left");
        table.insert({from, to});
    }
    return simplify(substitute_raw(e, table));
}

namespace {

std::vector<Expr> term_list(const Expr& e) {
    if (e.kind() == NodeKind::Add) return e.operands();
    return {e};
}

// Product of two canonical sums with full distribution.
Expr distribute_product(const Expr& a, const Expr& b) {
    std::vector<Expr> out;
    for (const Expr& t : term_list(a))
        for (const Expr& u : term_list(b)) out.push_back(simplify(t * u));
    return simplify(add(std::move(out)));
}

Expr expand_rec(const Expr& e) {
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Add: {
        std::vector<Expr> kids;
        for (const Expr& k : n->kids) kids.push_back(expand_rec(k));
        return simplify(add(std::move(kids)));
    }
    case NodeKind::Mul: {
        Expr acc = one_expr();
        for (const Expr& k : n->kids) acc = distribute_product(acc, expand_rec(k));
        return acc;
    }
    case NodeKind::Pow: {
        Expr eb = expand_rec(n->kids[0]);
        const Rational& f = n->expo;
        if (eb.kind() == NodeKind::Add && rational_is_integer(f) && f > 1 && f <= 64) {
            std::int64_t m = rational_to_int(f);
            Expr acc = eb;
            for (std::int64_t i = 1; i < m; ++i) acc = distribute_product(acc, eb);
            return acc;
        }
        return simplify(pow(eb, f));
    }
    case NodeKind::Func: return simplify(raw_func(n->fk, expand_rec(n->kids[0])));
    case NodeKind::Quadrature:
        return simplify(quadrature01(expand_rec(n->kids[0]), Expr::symbol(n->quad_var, SymbolKind::Parameter)));
    default: return e;
    }
}

} // namespace

Expr expand(const Expr& e) { return expand_rec(simplify(e)); }

std::optional<std::map<std::vector<std::int64_t>, Expr>> as_polynomial(const Expr& e,
                                                                       const std::vector<Expr>& vars) {
    for (const Expr& v : vars)
        if (!v.is_symbol()) throw PreconditionError("as_polynomial expects symbol variables");
    auto var_index = [&](const Expr& s) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < vars.size(); ++i)
            if (vars[i].same_as(s)) return i;
        return std::nullopt;
    };
    auto depends_on_any = [&](const Expr& x) {
        for (const Expr& v : vars)
            if (x.depends_on(v)) return true;
        return false;
    };

    Expr ex = expand(e);
    std::map<std::vector<std::int64_t>, Expr> out;
    for (const Expr& term : term_list(ex)) {
        std::vector<std::int64_t> expv(vars.size(), 0);
        std::vector<Expr> coeff;
        std::vector<Expr> factors = term.kind() == NodeKind::Mul ? term.operands() : std::vector<Expr>{term};
        for (const Expr& f : factors) {
            if (f.is_symbol()) {
                if (auto i = var_index(f)) {
                    expv[*i] += 1;
                    continue;
                }
            }
            if (f.kind() == NodeKind::Pow && f.base().is_symbol()) {
                if (auto i = var_index(f.base())) {
                    const Rational& p = f.exponent();
                    if (!rational_is_integer(p) || p < 0) return std::nullopt;
                    expv[*i] += rational_to_int(p);
                    continue;
                }
            }
            if (depends_on_any(f)) return std::nullopt;
            coeff.push_back(f);
        }
        Expr c = simplify(mul(std::move(coeff)));
        auto it = out.find(expv);
        if (it == out.end())
            out.emplace(std::move(expv), c);
        else
            it->second = simplify(it->second + c);
    }
    for (auto it = out.begin(); it != out.end();) {
        if (it->second.is_zero_constant())
            it = out.erase(it);
        else
            ++it;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Probabilistic zero test
// ---------------------------------------------------------------------------

namespace {
// Portable uniform double in [0, 1) from the top 53 bits of the generator.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::optional<bool> zero_core(const Expr& e, std::uint64_t seed) {
    Expr s = simplify(e);
    if (s.is_constant()) return s.constant_value() == 0;
    std::vector<Expr> syms = s.free_symbols();
    std::mt19937_64 rng(seed);
    int successes = 0, attempts = 0;
    while (successes < 100) {
        if (++attempts > 1000) return std::nullopt;
        Bindings b;
        for (const Expr& sym : syms) {
            double mag = 0.1 + 1.9 * uniform01(rng);
            double sgn = (rng() & 1u) ? -1.0 : 1.0;
            b.set(sym.symbol_name(), sgn * mag);
        }
        double v, scale;
        try {
            v = eval(s, b);
            scale = eval_abs_scale(s, b);
        } catch (const EvalError&) {
            continue;
        }
        if (std::abs(v) > 1e-9 * (1.0 + scale)) return false;
        ++successes;
    }
    return true;
}
} // namespace

bool is_zero(const Expr& e, std::uint64_t seed) {
    auto r = zero_core(e, seed);
    if (!r) throw IndeterminateError("zero test exhausted its sampling budget (domain errors on every draw)");
    return *r;
}

Verdict zero_verdict(const Expr& e, std::uint64_t seed) {
    auto r = zero_core(e, seed);
    if (!r) return Verdict::Indeterminate;
    return *r ? Verdict::True : Verdict::False;
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

std::string print(const Expr& e);

std::string print_pow(const Expr& base, const Rational& expo) {
    std::string bs = print(base);
    bool parens = false;
    switch (base.kind()) {
    case NodeKind::Add:
    case NodeKind::Mul:
    case NodeKind::Pow: parens = true; break;
    case NodeKind::Constant: parens = base.constant_value() < 0 || !rational_is_integer(base.constant_value()); break;
    default: break;
    }
    if (parens) bs = "(" + bs + ")";
    std::string es = rational_to_string(expo);
    if (!rational_is_integer(expo) || expo < 0) es = "(" + es + ")";
    return bs + "^" + es;
}

std::string print_factor(const Expr& f) {
    if (f.kind() == NodeKind::Add) return "(" + print(f) + ")";
    if (f.is_constant() && (f.constant_value() < 0 || !rational_is_integer(f.constant_value())))
        return "(" + print(f) + ")";
    return print(f);
}

// A lone denominator binds against '/', so products need parentheses too.
std::string print_den_factor(const Expr& f) {
    if (f.kind() == NodeKind::Mul) return "(" + print(f) + ")";
    return print_factor(f);
}

std::string print_mul(const Expr& e) {
    Rational c(1);
    std::vector<Expr> rest = e.operands();
    if (!rest.empty() && rest[0].is_constant()) {
        c = rest[0].constant_value();
        rest.erase(rest.begin());
    }
    bool neg = c < 0;
    if (neg) c = -c;
    std::vector<std::string> num, den;
    if (numerator(c) != 1) num.push_back(numerator(c).str());
    for (const Expr& f : rest) {
        if (f.kind() == NodeKind::Pow && f.exponent() < 0) {
            Rational pe = -f.exponent();
            den.push_back(pe == 1 ? print_den_factor(f.base()) : print_pow(f.base(), pe));
        } else {
            num.push_back(print_factor(f));
        }
    }
    if (denominator(c) != 1) den.push_back(denominator(c).str());
    std::string ns;
    if (num.empty()) {
        ns = "1";
    } else {
        for (std::size_t i = 0; i < num.size(); ++i) ns += (i ? "*" : "") + num[i];
    }
    std::string result = ns;
    if (!den.empty()) {
        if (den.size() == 1) {
            result += "/" + den[0];
        } else {
            std::string ds;
            for (std::size_t i = 0; i < den.size(); ++i) ds += (i ? "*" : "") + den[i];
            result += "/(" + ds + ")";
        }
    }
    return (neg ? "-" : "") + result;
}

std::string print(const Expr& e) {
    const Node* n = e.raw();
    switch (n->kind) {
    case NodeKind::Constant: return rational_to_string(n->value);
    case NodeKind::Symbol: return n->sym_name;
    case NodeKind::Func: return std::string(to_string(n->fk)) + "(" + print(n->kids[0]) + ")";
    case NodeKind::Quadrature: return "quad01(" + n->quad_var + ", " + print(n->kids[0]) + ")";
    case NodeKind::Pow:
        if (n->expo < 0) {
            Rational pe = -n->expo;
            return "1/" + (pe == 1 ? print_den_factor(n->kids[0]) : print_pow(n->kids[0], pe));
        }
        return print_pow(n->kids[0], n->expo);
    case NodeKind::Mul: return print_mul(e);
    case NodeKind::Add: {
        std::string out;
        for (std::size_t i = 0; i < n->kids.size(); ++i) {
            const Expr& t = n->kids[i];
            auto neg = as_negated(t);
            const Expr& shown = neg ? *neg : t;
            std::string s = print(shown);
            if (shown.kind() == NodeKind::Add) s = "(" + s + ")";
            if (neg)
                out += (i == 0 ? "-" : " - ") + s;
            else
                out += (i == 0 ? "" : " + ") + s;
        }
        return out;
    }
    }
    return "?";
}

} // namespace

std::string Expr::to_string() const { return print(*this); }

} // namespace fm
