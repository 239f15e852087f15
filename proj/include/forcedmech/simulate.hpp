#pragma once

#include "dynamics.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace fm {

// Expressions compiled once into a flat instruction tape over a fixed input
// layout; all symbols that are not inputs must be bound to numeric constants
// at compile time (unbound symbols throw EvalError). Quadrature nodes cannot
// be expressed on the tape; outputs containing one fall back to kernel eval
// per call. Arithmetic follows IEEE semantics and may produce non-finite
// values; callers decide how to react.
class CompiledProgram {
  public:
    static CompiledProgram compile(const std::vector<Expr>& outputs, const std::vector<Expr>& inputs,
                                   const Bindings& constants);

    std::size_t input_size() const { return n_inputs_; }
    std::size_t output_size() const { return out_regs_.size(); }

    // `in` must hold input_size() values, `out` output_size(). The scratch
    // overload reuses the caller's buffer across calls.
    void eval(const double* in, double* out) const;
    void eval(const double* in, double* out, std::vector<double>& scratch) const;

  private:
    enum class Op : std::uint8_t { Const, Input, Add, Mul, Pow, Exp, Log, Sin, Cos, Abs };
    struct Instr {
        Op op = Op::Const;
        std::int32_t a = -1, b = -1; // register / input indices
        double c = 0;                // constant value or power exponent
    };
    struct Fallback {
        std::size_t slot; // output index
        Expr tree;
    };

    std::size_t n_inputs_ = 0;
    std::vector<Instr> code_;
    std::vector<std::int32_t> out_regs_; // -1 for fallback slots
    std::vector<Fallback> fallbacks_;
    std::vector<std::string> input_names_;
    Bindings constants_;
};

struct Trajectory {
    double h = 0;
    std::vector<double> times;                  // uniform grid, strictly increasing
    std::vector<std::vector<double>> states;    // row per grid point
    std::vector<std::vector<double>> monitors;  // row per grid point (may be empty)
    bool truncated = false;                     // non-finite value cut the run short
};

using OdeRhs = std::function<void(double t, const double* x, double* dx)>;

// Classical fixed-step 4th-order Runge-Kutta over [0, n*h] with
// n = llround(T/h) steps. A non-finite state truncates the trajectory and
// sets the flag; the stored prefix is always finite.
Trajectory integrate(const OdeRhs& rhs, std::vector<double> x0, double h, double T);

// Integrate a phase-space field; the state layout is chart.phase_symbols(side)
// and parameter values come from the chart (overridable). Monitored
// expressions are evaluated on every grid point; a non-finite monitor value
// also truncates.
Trajectory integrate_field(const ChartedSystem& chart, const VectorFieldTQ& field, Side side,
                           std::vector<double> x0, double h, double T,
                           const std::vector<Expr>& monitors = {}, const Bindings& overrides = {});

// Forced Euler-Lagrange integration. Uses the symbolic field when the cached
// Hessian inverse is available and a per-point numeric W-solve otherwise.
Trajectory integrate_lagrangian(const ForcedLagrangianSystem& sys, std::vector<double> x0, double h,
                                double T, const std::vector<Expr>& monitors = {},
                                const Bindings& overrides = {});

struct DriftStat {
    double initial = 0;
    double max_abs = 0; // max over the grid of |v_k - v_0|
    double max_rel = 0; // max_abs / |v_0|, or max_abs itself when |v_0| < 1e-12
};

// One entry per monitored column of the trajectory.
std::vector<DriftStat> drift_report(const Trajectory& traj);

// Max over interior grid points of |dE_L/dt + Delta(R)| with dE_L/dt taken by
// centered differences; the discretization itself contributes O(h^2), so
// tolerances should scale like 10*h^2. Requires a dissipation-built system
// and at least three grid points.
double energy_balance_check(const ForcedLagrangianSystem& sys, const Trajectory& traj,
                            const Bindings& overrides = {});

} // namespace fm
