#pragma once

#include "dynamics.hpp"

#include <optional>

namespace fm {

// Dissipation function 𝓡(q, q̇); the tensor is set when the function was
// declared linear, i.e. 𝓡 = ½ R_ij(q) q̇^i q̇^j with symmetric R.
struct DissipationFunction {
    Expr r;
    std::optional<Matrix> tensor;
};

// β = S*(d𝓡), i.e. β_i = ∂𝓡/∂q̇^i.
SemibasicForm force_from_dissipation(const ChartedSystem& chart, const Expr& dissipation);

// Dissipation functions differing by a velocity-free function induce the same
// force. Throws PreconditionError when f depends on velocities.
bool gauge_equivalence(const ChartedSystem& chart, const Expr& dissipation, const Expr& f);

struct RayleighLemmaResiduals {
    Expr pairing_identity;          // R̄(X^c) − X^v(𝓡)
    std::vector<Expr> lie_identity; // L_{X^c}R̄ − S*(d(X^c(𝓡))), 2n components
    Expr field_identity;            // R̄(X̃) − (S X̃)(𝓡)
};
RayleighLemmaResiduals verify_rayleigh_lemma(const ChartedSystem& chart, const Expr& dissipation,
                                             const VectorFieldQ& x, const VectorFieldTQ& xt);

// ξ_{L,β}(E_L) + Δ(𝓡) for a system built from a dissipation function;
// identically zero. Throws PreconditionError when the system carries no
// dissipation function.
Expr energy_dissipation_residual(const ForcedLagrangianSystem& sys);

struct LinearRayleigh {
    DissipationFunction dissipation; // 𝓡 = ½ R_ij q̇^i q̇^j
    SemibasicForm force;             // R̄ = R_ij q̇^i dq^j
    FibredMorphism morphism;         // (q, q̇) ↦ (q, R_ij q̇^j)
};

// Builds the linear special case from a symmetric velocity-free tensor.
// Throws PreconditionError on asymmetry or velocity dependence.
LinearRayleigh linear_rayleigh(const ChartedSystem& chart, const Matrix& tensor, std::uint64_t seed = 0);

} // namespace fm
