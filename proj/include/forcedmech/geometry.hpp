#pragma once

#include "expr.hpp"
#include "linalg.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fm {

enum class Side { Lagrangian, Hamiltonian };

// Single global chart on Q ⊂ ℝⁿ with induced bundle coordinates: velocities
// are named "<q>d" and momenta "p_<q>".
class ChartedSystem {
  public:
    ChartedSystem(std::vector<std::string> coordinate_names, std::map<std::string, double> parameters);

    std::size_t dim() const { return q_.size(); }
    const Expr& q(std::size_t i) const { return q_.at(i); }
    const Expr& qd(std::size_t i) const { return qd_.at(i); }
    const Expr& p(std::size_t i) const { return p_.at(i); }
    const std::vector<Expr>& coordinates() const { return q_; }
    const std::vector<Expr>& velocities() const { return qd_; }
    const std::vector<Expr>& momenta() const { return p_; }

    // Phase-space symbol lists: base coordinates first, then fiber.
    std::vector<Expr> tq_symbols() const;
    std::vector<Expr> tsq_symbols() const;
    std::vector<Expr> phase_symbols(Side side) const;

    const std::map<std::string, double>& parameters() const { return params_; }
    Bindings parameter_bindings() const;
    bool has_parameter(const std::string& name) const { return params_.count(name) != 0; }
    Expr parameter(const std::string& name) const;

    // True when e uses only the given side's fiber symbols (plus coordinates
    // and parameters).
    void require_on_side(const Expr& e, Side side, const std::string& what) const;

  private:
    std::vector<Expr> q_, qd_, p_;
    std::map<std::string, double> params_;
};

struct VectorFieldQ {
    std::vector<Expr> comps; // X^i(q)
};

// Vector field on TQ (base/fiber = ∂/∂q^i, ∂/∂q̇^i) or on T*Q (fiber = ∂/∂p_i).
struct VectorFieldTQ {
    std::vector<Expr> base;
    std::vector<Expr> fiber;
};

struct SemibasicForm {
    std::vector<Expr> comps; // β_i(q,q̇) dq^i or γ_i(q,p) dq^i
    Side side = Side::Lagrangian;
};

struct OneFormTQ {
    std::vector<Expr> dq; // coefficients on dq^i
    std::vector<Expr> dv; // coefficients on dq̇^i (or dp_i)
};

struct TwoFormTQ {
    Matrix m; // 2n x 2n antisymmetric coefficients over (dq^i, dq̇^i)
};

// Fibred map over the identity: (q, v) ↦ (q, fiber_i(q, v)).
struct FibredMorphism {
    std::vector<Expr> fiber;
};

struct HessianResult {
    Matrix w;        // W_ij = ∂²L/∂q̇^i∂q̇^j
    Expr det;
    Verdict regular; // det not identically zero
};

struct LegendreMap {
    std::vector<Expr> p_of;                 // p_i(q, q̇) = ∂L/∂q̇^i
    std::optional<std::vector<Expr>> qd_of; // q̇^i(q, p) when symbolically invertible
    Verdict hyperregular;                   // symbolic-inverse availability verdict
};

// Validated constructors.
VectorFieldQ make_vector_field_q(const ChartedSystem& chart, std::vector<Expr> comps);
VectorFieldTQ make_vector_field_tq(const ChartedSystem& chart, std::vector<Expr> base, std::vector<Expr> fiber);
SemibasicForm make_semibasic_form(const ChartedSystem& chart, std::vector<Expr> comps, Side side);
SemibasicForm zero_force(const ChartedSystem& chart, Side side = Side::Lagrangian);

// --- Generic exterior calculus over an explicit phase-symbol list zs --------

std::vector<Expr> gradient(const Expr& f, const std::vector<Expr>& zs);
// (dθ)_ab = ∂θ_b/∂z_a − ∂θ_a/∂z_b
Matrix exterior_derivative_coeffs(const std::vector<Expr>& theta, const std::vector<Expr>& zs);
// (i_X M)_b = Σ_a X^a M_ab for antisymmetric M
std::vector<Expr> interior_product(const std::vector<Expr>& x, const Matrix& m);
Expr pairing(const std::vector<Expr>& x, const std::vector<Expr>& theta); // θ(X)
std::vector<Expr> lie_derivative_coeffs(const std::vector<Expr>& x, const std::vector<Expr>& theta,
                                        const std::vector<Expr>& zs);
std::vector<Expr> lie_bracket_coeffs(const std::vector<Expr>& x, const std::vector<Expr>& y,
                                     const std::vector<Expr>& zs);
Expr apply_vector_field(const std::vector<Expr>& x, const Expr& f, const std::vector<Expr>& zs);

// Flattened 2n-component views (base then fiber).
std::vector<Expr> flatten(const VectorFieldTQ& x);
std::vector<Expr> flatten(const OneFormTQ& theta);
VectorFieldTQ unflatten_vf(std::vector<Expr> comps);
OneFormTQ unflatten_form(std::vector<Expr> comps);
std::vector<Expr> semibasic_coeffs(const SemibasicForm& beta); // (β_i, 0)

// --- Lifts and canonical structures on TQ -----------------------------------

VectorFieldTQ vertical_lift(const ChartedSystem& chart, const VectorFieldQ& x);
VectorFieldTQ complete_lift(const ChartedSystem& chart, const VectorFieldQ& x);
VectorFieldTQ apply_S(const VectorFieldTQ& x);           // (A, B) ↦ (0, A)
OneFormTQ apply_S_star(const ChartedSystem& chart, const Expr& f); // S*(df) = (∂f/∂q̇^i) dq^i
VectorFieldTQ liouville(const ChartedSystem& chart);     // (0, q̇)

OneFormTQ poincare_cartan_1form(const ChartedSystem& chart, const Expr& lagrangian);
TwoFormTQ poincare_cartan_2form(const ChartedSystem& chart, const Expr& lagrangian);
OneFormTQ exterior_derivative_applied(const ChartedSystem& chart, const Expr& f, Side side); // df
TwoFormTQ exterior_derivative(const ChartedSystem& chart, const OneFormTQ& theta, Side side);
OneFormTQ lie_derivative(const ChartedSystem& chart, const VectorFieldTQ& x, const OneFormTQ& theta, Side side);
VectorFieldTQ lie_bracket(const ChartedSystem& chart, const VectorFieldTQ& x, const VectorFieldTQ& y, Side side);
Expr apply_field(const ChartedSystem& chart, const VectorFieldTQ& x, const Expr& f, Side side);

HessianResult hessian(const ChartedSystem& chart, const Expr& lagrangian, std::uint64_t seed = 0);
Expr energy(const ChartedSystem& chart, const Expr& lagrangian);

// Legendre transform; throws PreconditionError when the Hessian is singular.
LegendreMap legendre(const ChartedSystem& chart, const Expr& lagrangian, std::uint64_t seed = 0);

// Canonical 1-form α_Q = p_i dq^i and symplectic coefficients on T*Q.
OneFormTQ canonical_1form(const ChartedSystem& chart);
TwoFormTQ canonical_2form(const ChartedSystem& chart);

FibredMorphism form_to_morphism(const ChartedSystem& chart, const SemibasicForm& beta);
SemibasicForm morphism_to_form(const ChartedSystem& chart, const FibredMorphism& d, Side side);

} // namespace fm
