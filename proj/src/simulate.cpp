#include "forcedmech/simulate.hpp"

#include "forcedmech/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <unordered_map>
#include <utility>

namespace fm {

namespace {

bool contains_quadrature(const Expr& e) {
    if (e.kind() == NodeKind::Quadrature) return true;
    for (const Expr& k : e.operands())
        if (contains_quadrature(k)) return true;
    return false;
}

bool all_finite(const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(v[i])) return false;
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// CompiledProgram

CompiledProgram CompiledProgram::compile(const std::vector<Expr>& outputs, const std::vector<Expr>& inputs,
                                         const Bindings& constants) {
    CompiledProgram p;
    p.n_inputs_ = inputs.size();
    p.constants_ = constants;

    std::map<std::string, std::int32_t> input_index;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].is_symbol()) throw PreconditionError("compiled-program inputs must be symbols");
        p.input_names_.push_back(inputs[i].symbol_name());
        input_index[inputs[i].symbol_name()] = static_cast<std::int32_t>(i);
    }

    // Structural common-subexpression table: hash bucket -> (expr, register).
    std::unordered_map<std::size_t, std::vector<std::pair<Expr, std::int32_t>>> seen;

    auto emit = [&](const Instr& ins) {
        p.code_.push_back(ins);
        return static_cast<std::int32_t>(p.code_.size() - 1);
    };

    std::function<std::int32_t(const Expr&)> rec = [&](const Expr& e) -> std::int32_t {
        auto& bucket = seen[e.hash()];
        for (const auto& [prev, reg] : bucket)
            if (prev.same_as(e)) return reg;

        std::int32_t reg = -1;
        switch (e.kind()) {
        case NodeKind::Constant:
            reg = emit({Op::Const, -1, -1, rational_to_double(e.constant_value())});
            break;
        case NodeKind::Symbol: {
            auto it = input_index.find(e.symbol_name());
            if (it != input_index.end()) {
                reg = emit({Op::Input, it->second, -1, 0});
            } else if (auto v = constants.get(e.symbol_name())) {
                reg = emit({Op::Const, -1, -1, *v});
            } else {
                throw EvalError("unbound symbol '" + e.symbol_name() + "' in compiled program");
            }
            break;
        }
        case NodeKind::Add:
        case NodeKind::Mul: {
            Op op = e.kind() == NodeKind::Add ? Op::Add : Op::Mul;
            const auto& kids = e.operands();
            reg = rec(kids[0]);
            for (std::size_t i = 1; i < kids.size(); ++i) {
                std::int32_t rhs = rec(kids[i]);
                reg = emit({op, reg, rhs, 0});
            }
            break;
        }
        case NodeKind::Pow:
            reg = emit({Op::Pow, rec(e.base()), -1, rational_to_double(e.exponent())});
            break;
        case NodeKind::Func: {
            std::int32_t a = rec(e.argument());
            Op op = Op::Exp;
            switch (e.func_kind()) {
            case FuncKind::Exp: op = Op::Exp; break;
            case FuncKind::Log: op = Op::Log; break;
            case FuncKind::Sin: op = Op::Sin; break;
            case FuncKind::Cos: op = Op::Cos; break;
            case FuncKind::Abs: op = Op::Abs; break;
            }
            reg = emit({op, a, -1, 0});
            break;
        }
        case NodeKind::Quadrature:
            throw PreconditionError("quadrature nodes are not tape-compilable");
        }
        bucket.emplace_back(e, reg);
        return reg;
    };

    for (std::size_t s = 0; s < outputs.size(); ++s) {
        if (contains_quadrature(outputs[s])) {
            // Verify all free symbols are resolvable now rather than per call.
            for (const Expr& sym : outputs[s].free_symbols())
                if (!input_index.count(sym.symbol_name()) && !constants.contains(sym.symbol_name()))
                    throw EvalError("unbound symbol '" + sym.symbol_name() + "' in compiled program");
            p.out_regs_.push_back(-1);
            p.fallbacks_.push_back({s, outputs[s]});
        } else {
            p.out_regs_.push_back(rec(outputs[s]));
        }
    }
    return p;
}

void CompiledProgram::eval(const double* in, double* out) const {
    std::vector<double> scratch;
    eval(in, out, scratch);
}

void CompiledProgram::eval(const double* in, double* out, std::vector<double>& scratch) const {
    scratch.resize(code_.size());
    double* r = scratch.data();
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& ins = code_[i];
        switch (ins.op) {
        case Op::Const: r[i] = ins.c; break;
        case Op::Input: r[i] = in[ins.a]; break;
        case Op::Add: r[i] = r[ins.a] + r[ins.b]; break;
        case Op::Mul: r[i] = r[ins.a] * r[ins.b]; break;
        case Op::Pow: r[i] = std::pow(r[ins.a], ins.c); break;
        case Op::Exp: r[i] = std::exp(r[ins.a]); break;
        case Op::Log: r[i] = std::log(r[ins.a]); break;
        case Op::Sin: r[i] = std::sin(r[ins.a]); break;
        case Op::Cos: r[i] = std::cos(r[ins.a]); break;
        case Op::Abs: r[i] = std::abs(r[ins.a]); break;
        }
    }
    for (std::size_t s = 0; s < out_regs_.size(); ++s)
        if (out_regs_[s] >= 0) out[s] = r[out_regs_[s]];
    if (!fallbacks_.empty()) {
        Bindings b = constants_;
        for (std::size_t i = 0; i < input_names_.size(); ++i) b.set(input_names_[i], in[i]);
        for (const Fallback& f : fallbacks_) {
            try {
                out[f.slot] = fm::eval(f.tree, b);
            } catch (const EvalError&) {
                out[f.slot] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
}

// ---------------------------------------------------------------------------
// RK4 core

Trajectory integrate(const OdeRhs& rhs, std::vector<double> x0, double h, double T) {
    if (!(h > 0) || !(T > 0)) throw PreconditionError("integration requires h > 0 and T > 0");
    const std::size_t dim = x0.size();
    long long n = std::llround(T / h);
    if (n < 1) n = 1;

    Trajectory traj;
    traj.h = h;
    traj.times.reserve(static_cast<std::size_t>(n) + 1);
    traj.states.reserve(static_cast<std::size_t>(n) + 1);

    if (!all_finite(x0.data(), dim)) {
        traj.truncated = true;
        return traj;
    }
    traj.times.push_back(0.0);
    traj.states.push_back(x0);

    std::vector<double> x = std::move(x0), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (long long step = 0; step < n; ++step) {
        const double t = static_cast<double>(step) * h;
        rhs(t, x.data(), k1.data());
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        rhs(t + 0.5 * h, tmp.data(), k2.data());
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        rhs(t + 0.5 * h, tmp.data(), k3.data());
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + h * k3[i];
        rhs(t + h, tmp.data(), k4.data());
        for (std::size_t i = 0; i < dim; ++i)
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!all_finite(x.data(), dim)) {
            traj.truncated = true;
            break;
        }
        traj.times.push_back(static_cast<double>(step + 1) * h);
        traj.states.push_back(x);
    }
    return traj;
}

namespace {

// Evaluate monitors on every stored state; truncate on the first non-finite row.
void attach_monitors(Trajectory& traj, const ChartedSystem& chart, Side side,
                     const std::vector<Expr>& monitors, const Bindings& constants) {
    if (monitors.empty()) return;
    std::vector<Expr> in_syms = chart.phase_symbols(side);
    in_syms.push_back(Expr::symbol("t", SymbolKind::Time));
    CompiledProgram prog = CompiledProgram::compile(monitors, in_syms, constants);

    std::vector<double> scratch, in(in_syms.size()), row(monitors.size());
    traj.monitors.reserve(traj.times.size());
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        for (std::size_t i = 0; i < traj.states[k].size(); ++i) in[i] = traj.states[k][i];
        in.back() = traj.times[k];
        prog.eval(in.data(), row.data(), scratch);
        if (!all_finite(row.data(), row.size())) {
            traj.times.resize(k);
            traj.states.resize(k);
            traj.truncated = true;
            break;
        }
        traj.monitors.push_back(row);
    }
}

Bindings merged_constants(const ChartedSystem& chart, const Bindings& overrides) {
    Bindings b = chart.parameter_bindings();
    b.merge(overrides);
    return b;
}

} // namespace

Trajectory integrate_field(const ChartedSystem& chart, const VectorFieldTQ& field, Side side,
                           std::vector<double> x0, double h, double T,
                           const std::vector<Expr>& monitors, const Bindings& overrides) {
    const std::size_t dim = 2 * chart.dim();
    if (x0.size() != dim) throw PreconditionError("initial state has wrong dimension");
    Bindings constants = merged_constants(chart, overrides);

    std::vector<Expr> in_syms = chart.phase_symbols(side);
    in_syms.push_back(Expr::symbol("t", SymbolKind::Time));
    CompiledProgram prog = CompiledProgram::compile(flatten(field), in_syms, constants);

    std::vector<double> scratch, in(in_syms.size());
    OdeRhs rhs = [&](double t, const double* x, double* dx) {
        for (std::size_t i = 0; i < dim; ++i) in[i] = x[i];
        in[dim] = t;
        prog.eval(in.data(), dx, scratch);
    };
    Trajectory traj = integrate(rhs, std::move(x0), h, T);
    attach_monitors(traj, chart, side, monitors, constants);
    return traj;
}

Trajectory integrate_lagrangian(const ForcedLagrangianSystem& sys, std::vector<double> x0, double h,
                                double T, const std::vector<Expr>& monitors, const Bindings& overrides) {
    const ChartedSystem& chart = sys.chart();
    if (sys.hessian_inverse()) {
        return integrate_field(chart, forced_el_field(sys), Side::Lagrangian, std::move(x0), h, T,
                               monitors, overrides);
    }

    // Per-point numeric solve of W_ji B^i = dL/dq^j - qd^k d(dL/dqd^j)/dq^k - beta_j.
    const std::size_t n = chart.dim();
    const std::size_t dim = 2 * n;
    if (x0.size() != dim) throw PreconditionError("initial state has wrong dimension");
    Bindings constants = merged_constants(chart, overrides);

    std::vector<Expr> entries; // n*n Hessian entries, then n right-hand sides
    entries.reserve(n * n + n);
    const Matrix& w = sys.hessian().w;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) entries.push_back(w[j][i]);
    for (std::size_t j = 0; j < n; ++j) {
        Expr p_j = diff(sys.lagrangian(), chart.qd(j));
        Expr rhs_j = diff(sys.lagrangian(), chart.q(j)) - sys.force().comps[j];
        for (std::size_t k = 0; k < n; ++k) rhs_j = rhs_j - chart.qd(k) * diff(p_j, chart.q(k));
        entries.push_back(simplify(rhs_j));
    }

    std::vector<Expr> in_syms = chart.phase_symbols(Side::Lagrangian);
    in_syms.push_back(Expr::symbol("t", SymbolKind::Time));
    CompiledProgram prog = CompiledProgram::compile(entries, in_syms, constants);

    std::vector<double> scratch, in(in_syms.size()), vals(entries.size());
    std::vector<std::vector<double>> wm(n, std::vector<double>(n));
    std::vector<double> rhs_vec(n);
    OdeRhs rhs = [&](double t, const double* x, double* dx) {
        for (std::size_t i = 0; i < dim; ++i) in[i] = x[i];
        in[dim] = t;
        prog.eval(in.data(), vals.data(), scratch);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) wm[j][i] = vals[j * n + i];
        for (std::size_t j = 0; j < n; ++j) rhs_vec[j] = vals[n * n + j];
        for (std::size_t i = 0; i < n; ++i) dx[i] = x[n + i];
        try {
            std::vector<double> b = solve_linear(wm, rhs_vec);
            for (std::size_t i = 0; i < n; ++i) dx[n + i] = b[i];
        } catch (const EvalError&) {
            for (std::size_t i = 0; i < n; ++i) dx[n + i] = std::numeric_limits<double>::quiet_NaN();
        }
    };
    Trajectory traj = integrate(rhs, std::move(x0), h, T);
    attach_monitors(traj, chart, Side::Lagrangian, monitors, constants);
    return traj;
}

std::vector<DriftStat> drift_report(const Trajectory& traj) {
    if (traj.monitors.empty()) return {};
    const std::size_t cols = traj.monitors.front().size();
    std::vector<DriftStat> report(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        DriftStat& s = report[c];
        s.initial = traj.monitors.front()[c];
        for (const auto& row : traj.monitors)
            s.max_abs = std::max(s.max_abs, std::abs(row[c] - s.initial));
        s.max_rel = std::abs(s.initial) < 1e-12 ? s.max_abs : s.max_abs / std::abs(s.initial);
    }
    return report;
}

double energy_balance_check(const ForcedLagrangianSystem& sys, const Trajectory& traj,
                            const Bindings& overrides) {
    if (!sys.dissipation())
        throw PreconditionError("energy balance check requires a dissipation-built system");
    if (traj.times.size() < 3) throw PreconditionError("trajectory too short for centered differences");

    const ChartedSystem& chart = sys.chart();
    Expr delta_r = simplify(apply_field(chart, liouville(chart), *sys.dissipation(), Side::Lagrangian));
    Bindings constants = merged_constants(chart, overrides);

    std::vector<Expr> in_syms = chart.phase_symbols(Side::Lagrangian);
    in_syms.push_back(Expr::symbol("t", SymbolKind::Time));
    CompiledProgram prog = CompiledProgram::compile({sys.energy(), delta_r}, in_syms, constants);

    const std::size_t rows = traj.times.size();
    std::vector<double> scratch, in(in_syms.size()), e(rows), d(rows), out(2);
    for (std::size_t k = 0; k < rows; ++k) {
        for (std::size_t i = 0; i < traj.states[k].size(); ++i) in[i] = traj.states[k][i];
        in.back() = traj.times[k];
        prog.eval(in.data(), out.data(), scratch);
        e[k] = out[0];
        d[k] = out[1];
    }
    double worst = 0;
    for (std::size_t k = 1; k + 1 < rows; ++k)
        worst = std::max(worst, std::abs((e[k + 1] - e[k - 1]) / (2.0 * traj.h) + d[k]));
    return worst;
}

} // namespace fm
