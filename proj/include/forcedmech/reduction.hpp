#pragma once

#include "dynamics.hpp"
#include "simulate.hpp"

#include <cstdint>
#include <vector>

namespace fm {

// Finite-dimensional Lie algebra acting on Q through infinitesimal generators.
// The generator map is an antihomomorphism: with abstract structure constants
// [e_a, e_b] = c^d_ab e_d (structure[a][b][d] = c^d_ab), the generator fields
// satisfy [gen_a, gen_b] = -c^d_ab gen_d.
struct AlgebraAction {
    std::vector<VectorFieldQ> generators;
    std::vector<std::vector<std::vector<Rational>>> structure;
};

// Validated constructor: checks component shapes, antisymmetry
// c^d_ab = -c^d_ba, and generator bracket closure by the zero test.
AlgebraAction make_algebra_action(const ChartedSystem& chart, std::vector<VectorFieldQ> generators,
                                  std::vector<std::vector<std::vector<Rational>>> structure,
                                  std::uint64_t seed = 0);

// Rotations of a 3-dimensional chart: generators e_a x q with cross-product
// structure constants.
AlgebraAction rotation_action_3d(const ChartedSystem& chart);

// Abelian translations along the given coordinate axes.
AlgebraAction translation_action(const ChartedSystem& chart, const std::vector<std::size_t>& axes);

// Momentum-map component J_a = alpha_L(complete lift of generator a).
Expr momentum_component(const AlgebraAction& action, std::size_t a, const ForcedLagrangianSystem& sys);
std::vector<Expr> momentum_map(const AlgebraAction& action, const ForcedLagrangianSystem& sys);

struct GBetaResult {
    Verdict member = Verdict::Indeterminate;
    Expr pairing_residual;                 // beta(xi^c)
    std::vector<Expr> invariance_residual; // i_{xi^c} d(beta) coefficients (2n)
};

// Membership test for xi = sum_a coeffs[a] e_a against the subalgebra cut out
// by beta(xi^c) = 0 and i_{xi^c} d(beta) = 0, with beta = sys.force(). The
// standing hypothesis (every generator's complete lift annihilates L) is
// checked first; a definite violation is a PreconditionError.
GBetaResult in_g_beta(const AlgebraAction& action, const std::vector<Expr>& coeffs,
                      const ForcedLagrangianSystem& sys);

// Basis of coefficient vectors spanning the solutions of the two linear
// membership conditions. Primary path: exact monomial matching over the phase
// symbols with coefficients resolved at exact rational parameter samples.
// Fallback for non-polynomial residuals: numeric sampling with rank decisions
// at tolerance 1e-8, rationalized and re-verified symbolically (failure to
// verify raises IndeterminateError). Bracket closure of the returned span is
// re-verified through the structure constants.
std::vector<std::vector<Rational>> g_beta_basis(const ChartedSystem& chart, const AlgebraAction& action,
                                                const SemibasicForm& beta, std::uint64_t seed = 0);

struct GRConditions {
    Expr vertical_residual;           // xi^v(R)
    std::vector<Expr> basic_residual; // velocity gradient of xi^c(R)
    Verdict member = Verdict::Indeterminate;
};

// Dissipation-side membership conditions xi^v(R) = 0 and "xi^c(R) is basic",
// evaluated per generator. Asserts agreement with the force-side conditions
// for beta = S*(dR) (the two condition pairs are equivalent).
std::vector<GRConditions> g_R_conditions(const ChartedSystem& chart, const AlgebraAction& action,
                                         const Expr& dissipation, std::uint64_t seed = 0);

// Rate of change xi_{L,beta}(J_a) along the forced dynamics. When L is
// invariant under generator a, the rate vanishes exactly when beta(xi_a^c)
// does; that equivalence is asserted whenever the invariance holds.
Expr momentum_conservation_check(const AlgebraAction& action, std::size_t a,
                                 const ForcedLagrangianSystem& sys);

struct CyclicReduction {
    ForcedLagrangianSystem reduced; // Routhian system on the remaining coordinates
    std::size_t cyclic_index = 0;
    Expr mu;      // momentum level p_c = mu
    Expr psi;     // eliminated velocity: qd_c = psi(q, qd) on the level set
    Expr routhian;
};

// Abelian reduction by a cyclic coordinate: q^c must be absent from L and
// beta, beta_c must vanish, and p_c = dL/dqd_c must be linear in qd_c with a
// generically nonzero coefficient (else "unsolvable momentum relation"). The
// reduced Lagrangian is the Routhian (L - mu*qd_c)|_{qd_c=psi}, whose energy
// matches the restriction of E_L exactly; the reduced force is the
// restriction of the non-cyclic force components. mu may be a numeric
// constant or a parameter of the chart.
CyclicReduction cyclic_reduce(const ForcedLagrangianSystem& sys, std::size_t cyclic_index,
                              const Expr& mu, std::uint64_t seed = 0);

// Recover the cyclic coordinate along a reduced trajectory by cumulative
// quadrature of psi (per-interval parabolic rule), returning a trajectory in
// the full chart's state layout with q_c(0) = q_c0. Monitor columns are
// carried over unchanged.
Trajectory abelian_reconstruct(const Trajectory& reduced_traj, const ForcedLagrangianSystem& sys,
                               std::size_t cyclic_index, const Expr& mu, double q_c0,
                               const Bindings& overrides = {});

} // namespace fm
