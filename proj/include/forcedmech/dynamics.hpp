#pragma once

#include "geometry.hpp"

#include <cstdint>
#include <optional>

namespace fm {

// A regular Lagrangian L(q, q̇) together with an external force 1-form
// β = β_i(q, q̇) dq^i. Derived geometric data is computed once on construction.
class ForcedLagrangianSystem {
  public:
    ForcedLagrangianSystem(ChartedSystem chart, Expr lagrangian, SemibasicForm force, std::uint64_t seed = 0);

    // Build the force from a dissipation function: β = S*(d𝓡).
    static ForcedLagrangianSystem from_rayleigh(ChartedSystem chart, Expr lagrangian, Expr dissipation,
                                                std::uint64_t seed = 0);

    const ChartedSystem& chart() const { return chart_; }
    const Expr& lagrangian() const { return lagrangian_; }
    const SemibasicForm& force() const { return force_; }
    // Set only when the system was built from a dissipation function.
    const std::optional<Expr>& dissipation() const { return dissipation_; }
    const OneFormTQ& alpha() const { return alpha_; }
    const TwoFormTQ& omega() const { return omega_; }
    const HessianResult& hessian() const { return hessian_; }
    // Symbolic inverse of the Hessian; cached for dim ≤ 4.
    const std::optional<Matrix>& hessian_inverse() const { return hessian_inverse_; }
    const Expr& energy() const { return energy_; }
    std::uint64_t seed() const { return seed_; }

  private:
    ChartedSystem chart_;
    Expr lagrangian_;
    SemibasicForm force_;
    std::optional<Expr> dissipation_;
    OneFormTQ alpha_;
    TwoFormTQ omega_;
    HessianResult hessian_;
    std::optional<Matrix> hessian_inverse_;
    Expr energy_;
    std::uint64_t seed_;
};

// A Hamiltonian H(q, p) together with an external force 1-form γ = γ_i(q, p) dq^i.
class ForcedHamiltonianSystem {
  public:
    ForcedHamiltonianSystem(ChartedSystem chart, Expr hamiltonian, SemibasicForm force);

    const ChartedSystem& chart() const { return chart_; }
    const Expr& hamiltonian() const { return hamiltonian_; }
    const SemibasicForm& force() const { return force_; }

  private:
    ChartedSystem chart_;
    Expr hamiltonian_;
    SemibasicForm force_;
};

// Second-order field ξ = q̇^i ∂/∂q^i + B^i ∂/∂q̇^i with
// W_ji B^i = ∂L/∂q^j − q̇^k ∂²L/∂q^k∂q̇^j − β_j, i.e. the unique field with
// i_ξ ω_L = dE_L + β. Throws PreconditionError on a singular Hessian.
VectorFieldTQ forced_el_field(const ForcedLagrangianSystem& sys);

// d/dt(∂L/∂q̇^i) − ∂L/∂q^i + β_i with d/dt expanded along the forced field;
// identically zero when the construction is consistent.
Expr forced_el_residual(const ForcedLagrangianSystem& sys, std::size_t i);

// X_{H,γ} = (∂H/∂p_i) ∂/∂q^i − (∂H/∂q^i + γ_i) ∂/∂p_i.
VectorFieldTQ forced_hamilton_field(const ForcedHamiltonianSystem& sys);

// True iff T(Leg) maps the forced Lagrangian field onto X_{H,γ} ∘ Leg,
// checked componentwise by the probabilistic zero test (100 sample points).
// Throws IndeterminateError when no verdict can be reached.
bool check_leg_related(const ForcedLagrangianSystem& lsys, const ForcedHamiltonianSystem& hsys);

// Canonical Poisson bracket Σ_i (∂f/∂q^i ∂g/∂p_i − ∂f/∂p_i ∂g/∂q^i).
Expr poisson_bracket(const ChartedSystem& chart, const Expr& f, const Expr& g);

// {F, H} − γ(X_F); F is a constant of the forced motion iff this is zero.
Expr hamiltonian_conservation_criterion(const Expr& f, const ForcedHamiltonianSystem& hsys);

// Push a hyperregular forced Lagrangian system to the Hamiltonian side:
// H ∘ Leg = E_L and Leg*γ = β. Requires a symbolic Legendre inverse.
ForcedHamiltonianSystem legendre_transform(const ForcedLagrangianSystem& lsys);

} // namespace fm
