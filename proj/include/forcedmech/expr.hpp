#pragma once

#include "errors.hpp"
#include "rational.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fm {

enum class SymbolKind { Coordinate, Velocity, Momentum, Parameter, Time };
enum class NodeKind { Constant, Symbol, Add, Mul, Pow, Func, Quadrature };
enum class FuncKind { Exp, Log, Sin, Cos, Abs };

const char* to_string(FuncKind f);
int kind_rank(SymbolKind k); // Coordinate < Velocity < Momentum < Parameter < Time

class Expr;
namespace detail {
struct Node {
    NodeKind kind = NodeKind::Constant;
    Rational value;             // Constant
    std::string sym_name;       // Symbol
    SymbolKind sym_kind = SymbolKind::Parameter;
    std::vector<Expr> kids;     // Add/Mul children; Pow base, Func arg, Quadrature integrand at [0]
    Rational expo;              // Pow exponent (always rational)
    FuncKind fk = FuncKind::Exp;
    std::string quad_var;       // Quadrature integration symbol (Parameter kind)
    std::size_t hash = 0;
    bool canonical = false;     // produced by simplify; stable under re-simplification
};
} // namespace detail

// Immutable symbolic expression. Value semantics over a shared structural tree.
class Expr {
  public:
    Expr(); // the constant 0

    static Expr constant(Rational v);
    static Expr integer(std::int64_t v);
    static Expr rational(std::int64_t num, std::int64_t den);
    static Expr symbol(std::string name, SymbolKind kind);

    NodeKind kind() const { return node_->kind; }
    bool is_constant() const { return node_->kind == NodeKind::Constant; }
    bool is_zero_constant() const;
    bool is_one_constant() const;
    const Rational& constant_value() const;
    bool is_symbol() const { return node_->kind == NodeKind::Symbol; }
    const std::string& symbol_name() const;
    SymbolKind symbol_kind() const;
    const std::vector<Expr>& operands() const { return node_->kids; }
    const Expr& base() const { return node_->kids[0]; }     // Pow
    const Rational& exponent() const { return node_->expo; } // Pow
    FuncKind func_kind() const { return node_->fk; }         // Func
    const Expr& argument() const { return node_->kids[0]; }  // Func / Quadrature
    const std::string& quadrature_var() const { return node_->quad_var; }

    std::size_t hash() const { return node_->hash; }
    bool canonical() const { return node_->canonical; }
    bool same_as(const Expr& other) const; // structural equality

    // Deterministic canonical infix form; reparseable by parse_expression.
    std::string to_string() const;

    // Free symbols sorted by the total symbol order (kind rank, then name).
    std::vector<Expr> free_symbols() const;
    bool depends_on(const Expr& sym) const;
    bool depends_on_kind(SymbolKind kind) const;

    const detail::Node* raw() const { return node_.get(); }

  private:
    friend class ExprBuilder;
    explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::Node> node_;
};

// Total structural order used for canonical sorting; returns <0, 0, >0.
int compare(const Expr& a, const Expr& b);

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// Construction (trees are built raw; call simplify for canonical form).
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, std::int64_t b);
Expr operator+(std::int64_t a, const Expr& b);
Expr operator-(const Expr& a, std::int64_t b);
Expr operator-(std::int64_t a, const Expr& b);
Expr operator*(const Expr& a, std::int64_t b);
Expr operator*(std::int64_t a, const Expr& b);
Expr operator/(const Expr& a, std::int64_t b);
Expr operator/(std::int64_t a, const Expr& b);

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& base, const Rational& exponent);
Expr pow(const Expr& base, std::int64_t exponent);
Expr exp(const Expr& x);
Expr log(const Expr& x);
Expr sin(const Expr& x);
Expr cos(const Expr& x);
Expr abs(const Expr& x);
Expr sqrt(const Expr& x); // pow(x, 1/2)
// Definite integral over var in [0,1], kept as an opaque numeric node.
Expr quadrature01(const Expr& integrand, const Expr& var);

// Symbol-name -> value map used by eval. Deterministic iteration order.
class Bindings {
  public:
    Bindings() = default;
    Bindings(std::initializer_list<std::pair<const std::string, double>> init) : values_(init) {}
    void set(const std::string& name, double value) { values_[name] = value; }
    std::optional<double> get(const std::string& name) const;
    bool contains(const std::string& name) const { return values_.count(name) != 0; }
    void merge(const Bindings& other); // other's entries win
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }
    std::size_t size() const { return values_.size(); }

  private:
    std::map<std::string, double> values_;
};

// Canonical form: flattened, sorted, folded. Idempotent.
Expr simplify(const Expr& e);

// Exact partial derivative with respect to a symbol; result simplified.
// Symbols of different kinds (and names) are independent.
Expr diff(const Expr& e, const Expr& sym);

// IEEE double evaluation. Throws EvalError on unbound symbols, domain
// violations and non-finite intermediates.
double eval(const Expr& e, const Bindings& b);

// Magnitude scale of e at b: |.| pushed through sums/products/powers so that
// cancellation in sums is ignored. Always >= |eval(e, b)|.
double eval_abs_scale(const Expr& e, const Bindings& b);

// Parallel substitution of symbols by expressions; result simplified.
Expr substitute(const Expr& e, const std::vector<std::pair<Expr, Expr>>& replacements);

// Distribute products/integer powers over sums; result simplified.
Expr expand(const Expr& e);

// Monomial decomposition over `vars` (which must be symbols): maps exponent
// vectors to coefficient expressions free of `vars`. Empty optional when e is
// not polynomial in `vars` (negative/fractional powers, vars inside functions).
std::optional<std::map<std::vector<std::int64_t>, Expr>>
as_polynomial(const Expr& e, const std::vector<Expr>& vars);

// Probabilistic zero test: canonical simplification plus N=100 seeded random
// probes drawn uniformly from [-2,-0.1] u [0.1,2]; domain-violating draws are
// resampled (at most 1000 attempts in total). Deterministic for a fixed seed.
bool is_zero(const Expr& e, std::uint64_t seed = 0);

// Non-throwing variant: Indeterminate instead of IndeterminateError.
Verdict zero_verdict(const Expr& e, std::uint64_t seed = 0);

} // namespace fm
