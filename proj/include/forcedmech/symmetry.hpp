#pragma once

#include "dynamics.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fm {

// Potential of a closed 1-form on the (star-shaped) chart, constructed by
// radial homotopy f(z) = ∫₀¹ θ(tz)·z dt and normalized so that f(0) = 0.
// `f` is absent unless closedness is certified; when the fibre integral has
// no polynomial closed form it is returned as a quadrature-backed expression.
struct PotentialResult {
    Verdict closed = Verdict::Indeterminate;
    std::optional<Expr> f;
};
PotentialResult radial_potential(const ChartedSystem& chart, const OneFormTQ& theta, Side side,
                                 std::uint64_t seed = 0);

// X^c(L) − β(X^c); X is a symmetry of the forced system iff this vanishes.
Expr check_forced_symmetry(const VectorFieldQ& x, const ForcedLagrangianSystem& sys);

// X^v(L), conserved when X is a symmetry of the forced system. Throws
// PreconditionError (carrying the residual) otherwise.
Expr noether_quantity(const VectorFieldQ& x, const ForcedLagrangianSystem& sys);

// Components of [X^c, ξ_{L,β}]; X is a Lie symmetry iff all vanish. When
// d(L_{X^c}α_L) = 0 the equivalent test L_{X^c}β + d(X^c(E_L)) = 0 is also
// evaluated and the two verdicts are required to agree.
std::vector<Expr> check_lie_symmetry(const VectorFieldQ& x, const ForcedLagrangianSystem& sys);

// Components of [X̃, ξ_{L,β}]; X̃ is a dynamical symmetry iff all vanish.
std::vector<Expr> check_dynamical_symmetry(const VectorFieldTQ& xt, const ForcedLagrangianSystem& sys);

struct NoetherCheck {
    Expr residual;                 // X^c(E_L) + β(X^c)
    Verdict closed;                // d(L_{X^c} α_L) == 0
    std::optional<Expr> potential; // f with L_{X^c}α_L = df, f(0) = 0
    std::optional<Expr> conserved; // f − X^v(L), emitted when Noether
};
NoetherCheck check_noether_symmetry(const VectorFieldQ& x, const ForcedLagrangianSystem& sys);

struct CartanCheck {
    Expr residual;                 // X̃(E_L) + β(X̃)
    Verdict closed;                // d(L_{X̃} α_L) == 0
    std::optional<Expr> potential; // f with L_{X̃}α_L = df, f(0) = 0
    std::optional<Expr> conserved; // f − (S X̃)(L), emitted when Cartan
};
CartanCheck check_cartan_symmetry(const VectorFieldTQ& xt, const ForcedLagrangianSystem& sys);

// For a Noether symmetry X: true iff X is also a Lie symmetry, decided by
// i_{X^c}dβ = 0; the direct bracket test is evaluated as well and the two
// verdicts are required to agree. Throws PreconditionError when X is not a
// Noether symmetry.
bool check_relation_noether_lie(const VectorFieldQ& x, const ForcedLagrangianSystem& sys);

struct SymmetryReport {
    std::optional<VectorFieldQ> point_candidate; // set for candidates living on Q
    VectorFieldTQ candidate;                     // the phase-space field analyzed
    Side side = Side::Lagrangian;
    std::optional<Verdict> forced_lagrangian_symmetry;
    std::optional<Verdict> lie;
    std::optional<Verdict> noether;
    std::optional<Verdict> dynamical;
    std::optional<Verdict> cartan;
    std::optional<Expr> potential;
    std::optional<Expr> conserved_quantity;
    std::vector<std::pair<std::string, Expr>> residuals; // named, in check order
};

SymmetryReport analyze_point_candidate(const VectorFieldQ& x, const ForcedLagrangianSystem& sys);
SymmetryReport analyze_tq_candidate(const VectorFieldTQ& xt, const ForcedLagrangianSystem& sys);

// Mirror of the phase-space checks on T*Q with the canonical forms: the
// dynamical flag reports [X̂, X_{H,γ}] = 0, the cartan flag reports
// X̂(H) + γ(X̂) = 0 together with exactness of L_{X̂}α_Q, and the emitted
// quantity is f − α_Q(X̂). When a Legendre-related Lagrangian system is
// supplied, the cross-side equivalences are verified and any definite
// disagreement raises Error.
SymmetryReport hamiltonian_symmetry_checks(const VectorFieldTQ& xhat, const ForcedHamiltonianSystem& hsys,
                                           const ForcedLagrangianSystem* lsys = nullptr);

} // namespace fm
