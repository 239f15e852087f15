#include "forcedmech/cli.hpp"

#include "forcedmech/dynamics.hpp"
#include "forcedmech/errors.hpp"
#include "forcedmech/geometry.hpp"
#include "forcedmech/linalg.hpp"
#include "forcedmech/reduction.hpp"
#include "forcedmech/simulate.hpp"
#include "forcedmech/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace fm::cli {

namespace {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void put_verdict(nlohmann::ordered_json& j, const char* key, const std::optional<Verdict>& v) {
    if (v) j[key] = to_string(*v);
}

// Expressions destined for a system file use the file spelling qd_<name> for
// velocities instead of the chart-internal <name>d.
std::string file_syntax(const Expr& e, const ChartedSystem& chart) {
    std::vector<std::pair<Expr, Expr>> renames;
    for (std::size_t i = 0; i < chart.dim(); ++i) {
        const std::string& name = chart.coordinates()[i].symbol_name();
        renames.emplace_back(chart.velocities()[i],
                             Expr::symbol("qd_" + name, SymbolKind::Velocity));
    }
    return simplify(substitute(e, renames)).to_string();
}

bool syntactic_zero(const Expr& e) { return simplify(e).same_as(Expr()); }

nlohmann::ordered_json report_json(const CandidateField& cand, const SymmetryReport& report) {
    nlohmann::ordered_json j;
    j["name"] = cand.name;
    j["space"] = report.point_candidate ? "Q" : "TQ";
    put_verdict(j, "forced_lagrangian_symmetry", report.forced_lagrangian_symmetry);
    put_verdict(j, "noether", report.noether);
    put_verdict(j, "lie", report.lie);
    put_verdict(j, "dynamical", report.dynamical);
    put_verdict(j, "cartan", report.cartan);
    if (report.potential) j["potential"] = simplify(*report.potential).to_string();
    if (report.conserved_quantity) j["conserved"] = simplify(*report.conserved_quantity).to_string();
    nlohmann::ordered_json residuals = nlohmann::ordered_json::array();
    for (const auto& [name, expr] : report.residuals) {
        nlohmann::ordered_json r;
        r["name"] = name;
        r["value"] = simplify(expr).to_string();
        residuals.push_back(std::move(r));
    }
    j["residuals"] = std::move(residuals);
    return j;
}

} // namespace

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("FORCEDMECH_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw ParseError("FORCEDMECH_SEED must be an unsigned integer, got '" +
                             std::string(env) + "'");
        return static_cast<std::uint64_t>(v);
    }
    return 0;
}

std::string cmd_derive(const SystemFile& sf, std::uint64_t seed) {
    ForcedLagrangianSystem sys = sf.system(seed);
    const ChartedSystem& c = sys.chart();
    const std::size_t n = c.dim();
    std::ostringstream out;

    out << "lagrangian:\n  L = " << simplify(sys.lagrangian()).to_string() << "\n";
    out << "external force (covector components):\n";
    for (std::size_t i = 0; i < n; ++i)
        out << "  beta_" << c.coordinates()[i].symbol_name() << " = "
            << simplify(sys.force().comps[i]).to_string() << "\n";
    if (sys.dissipation())
        out << "dissipation function:\n  R = " << simplify(*sys.dissipation()).to_string() << "\n";

    VectorFieldTQ xi = forced_el_field(sys);
    out << "forced Euler-Lagrange equations, solved for accelerations:\n";
    for (std::size_t i = 0; i < n; ++i)
        out << "  " << c.coordinates()[i].symbol_name()
            << "dd = " << simplify(xi.fiber[i]).to_string() << "\n";
    out << "energy:\n  E_L = " << simplify(sys.energy()).to_string() << "\n";

    try {
        ForcedHamiltonianSystem hsys = legendre_transform(sys);
        VectorFieldTQ xh = forced_hamilton_field(hsys);
        out << "hamiltonian (Legendre transform):\n  H = "
            << simplify(hsys.hamiltonian()).to_string() << "\n";
        out << "forced Hamilton equations:\n";
        for (std::size_t i = 0; i < n; ++i)
            out << "  d/dt " << c.coordinates()[i].symbol_name() << " = "
                << simplify(xh.base[i]).to_string() << "\n";
        for (std::size_t i = 0; i < n; ++i)
            out << "  d/dt p_" << c.coordinates()[i].symbol_name() << " = "
                << simplify(xh.fiber[i]).to_string() << "\n";
    } catch (const PreconditionError& e) {
        out << "hamiltonian side unavailable: " << e.what() << "\n";
    }
    return out.str();
}

nlohmann::ordered_json cmd_check(const SystemFile& sf, std::uint64_t seed) {
    if (sf.candidates.empty())
        throw PreconditionError("check needs a [candidates] section");
    ForcedLagrangianSystem sys = sf.system(seed);
    const ChartedSystem& c = sys.chart();
    const std::size_t n = c.dim();

    std::vector<std::future<SymmetryReport>> pending;
    pending.reserve(sf.candidates.size());
    for (const CandidateField& cand : sf.candidates) {
        pending.push_back(std::async(std::launch::async, [&sys, &c, n, &cand] {
            if (cand.components.size() == n)
                return analyze_point_candidate(make_vector_field_q(c, cand.components), sys);
            std::vector<Expr> base(cand.components.begin(), cand.components.begin() + n);
            std::vector<Expr> fiber(cand.components.begin() + n, cand.components.end());
            return analyze_tq_candidate(make_vector_field_tq(c, base, fiber), sys);
        }));
    }

    nlohmann::ordered_json out;
    out["schema"] = 1;
    out["command"] = "check";
    out["seed"] = seed;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < pending.size(); ++i)
        list.push_back(report_json(sf.candidates[i], pending[i].get()));
    out["candidates"] = std::move(list);
    return out;
}

SimulateOutput cmd_simulate(const SystemFile& sf, std::uint64_t seed, std::optional<double> h,
                            std::optional<double> T) {
    if (!sf.integration)
        throw PreconditionError("simulate needs an [integration] section");
    ForcedLagrangianSystem sys = sf.system(seed);
    const ChartedSystem& c = sys.chart();
    const std::size_t n = c.dim();
    const double hh = h.value_or(sf.integration->h);
    const double tt = T.value_or(sf.integration->T);

    std::vector<Expr> monitors;
    monitors.reserve(sf.monitors.size());
    for (const MonitorSpec& m : sf.monitors) monitors.push_back(m.expr);
    Trajectory traj = integrate_lagrangian(sys, sf.integration->state, hh, tt, monitors);

    std::ostringstream csv;
    csv << "t";
    for (std::size_t i = 0; i < n; ++i) csv << "," << c.coordinates()[i].symbol_name();
    for (std::size_t i = 0; i < n; ++i) csv << "," << c.velocities()[i].symbol_name();
    for (const MonitorSpec& m : sf.monitors) csv << "," << m.name;
    csv << "\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        csv << fmt17(traj.times[k]);
        for (double x : traj.states[k]) csv << "," << fmt17(x);
        if (!sf.monitors.empty())
            for (double x : traj.monitors[k]) csv << "," << fmt17(x);
        csv << "\n";
    }

    nlohmann::ordered_json summary;
    summary["schema"] = 1;
    summary["command"] = "simulate";
    summary["seed"] = seed;
    summary["h"] = hh;
    summary["T"] = tt;
    summary["rows"] = traj.times.size();
    summary["truncated"] = traj.truncated;
    nlohmann::ordered_json drifts = nlohmann::ordered_json::array();
    if (!sf.monitors.empty()) {
        std::vector<DriftStat> stats = drift_report(traj);
        for (std::size_t i = 0; i < stats.size(); ++i) {
            nlohmann::ordered_json d;
            d["name"] = sf.monitors[i].name;
            d["initial"] = stats[i].initial;
            d["max_abs_drift"] = stats[i].max_abs;
            d["max_rel_drift"] = stats[i].max_rel;
            drifts.push_back(std::move(d));
        }
    }
    summary["drift"] = std::move(drifts);
    return {csv.str(), std::move(summary)};
}

ReduceOutput cmd_reduce(const SystemFile& sf, std::uint64_t seed, std::optional<double> h,
                        std::optional<double> T) {
    if (!sf.integration)
        throw PreconditionError(
            "reduce needs an [integration] section: the momentum level comes from the initial state");
    ForcedLagrangianSystem sys = sf.system(seed);
    const ChartedSystem& c = sys.chart();
    const std::size_t n = c.dim();
    if (n < 2) throw PreconditionError("cyclic reduction needs at least two coordinates");
    const std::vector<double>& x0 = sf.integration->state;
    const double hh = h.value_or(sf.integration->h);
    const double tt = T.value_or(sf.integration->T);

    Bindings bind = c.parameter_bindings();
    for (std::size_t i = 0; i < n; ++i) {
        bind.set(c.coordinates()[i].symbol_name(), x0[i]);
        bind.set(c.velocities()[i].symbol_name(), x0[n + i]);
    }

    std::optional<CyclicReduction> red;
    std::size_t cyc = 0;
    Expr mu;
    std::string failures;
    for (std::size_t i = 0; i < n && !red; ++i) {
        try {
            double pc = eval(diff(sys.lagrangian(), c.velocities()[i]), bind);
            Expr level = Expr::constant(rational_from_double(pc));
            red = cyclic_reduce(sys, i, level, seed);
            cyc = i;
            mu = level;
        } catch (const Error& e) {
            failures += "  " + c.coordinates()[i].symbol_name() + ": " + e.what() + "\n";
        }
    }
    if (!red)
        throw PreconditionError("no coordinate admits cyclic reduction:\n" + failures);

    std::vector<double> xr;
    for (std::size_t i = 0; i < n; ++i)
        if (i != cyc) xr.push_back(x0[i]);
    for (std::size_t i = 0; i < n; ++i)
        if (i != cyc) xr.push_back(x0[n + i]);

    Trajectory full = integrate_lagrangian(sys, x0, hh, tt);
    Trajectory reduced = integrate_lagrangian(red->reduced, xr, hh, tt);
    Trajectory rebuilt = abelian_reconstruct(reduced, sys, cyc, mu, x0[cyc]);

    const std::size_t rows = std::min(full.times.size(), rebuilt.times.size());
    double shared_gap = 0, angle_gap = 0, angle_rate_gap = 0;
    for (std::size_t k = 0; k < rows; ++k) {
        std::size_t r = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == cyc) continue;
            shared_gap = std::max(shared_gap, std::abs(full.states[k][j] - reduced.states[k][r]));
            shared_gap = std::max(shared_gap,
                                  std::abs(full.states[k][n + j] - reduced.states[k][n - 1 + r]));
            ++r;
        }
        angle_gap = std::max(angle_gap, std::abs(full.states[k][cyc] - rebuilt.states[k][cyc]));
        angle_rate_gap =
            std::max(angle_rate_gap, std::abs(full.states[k][n + cyc] - rebuilt.states[k][n + cyc]));
    }

    const ChartedSystem& rc = red->reduced.chart();
    std::ostringstream text;
    text << "# reduced along the cyclic coordinate " << c.coordinates()[cyc].symbol_name()
         << " at momentum level " << mu.to_string() << "\n";
    text << "[coordinates]\n";
    for (std::size_t i = 0; i < rc.dim(); ++i)
        text << rc.coordinates()[i].symbol_name() << "\n";
    if (!sf.parameters.empty()) {
        text << "\n[parameters]\n";
        for (const auto& [name, value] : sf.parameters)
            text << name << " = " << fmt17(value) << "\n";
    }
    text << "\n[lagrangian]\n" << file_syntax(red->reduced.lagrangian(), rc) << "\n";
    if (red->reduced.dissipation()) {
        text << "\n[dissipation]\n" << file_syntax(*red->reduced.dissipation(), rc) << "\n";
    } else {
        bool any = false;
        for (const Expr& comp : red->reduced.force().comps) any = any || !syntactic_zero(comp);
        if (any) {
            text << "\n[force]\n";
            for (const Expr& comp : red->reduced.force().comps)
                text << file_syntax(comp, rc) << "\n";
        }
    }
    text << "\n[integration]\nh = " << fmt17(hh) << "\nT = " << fmt17(tt) << "\nstate = ";
    for (std::size_t i = 0; i < xr.size(); ++i) text << (i ? ", " : "") << fmt17(xr[i]);
    text << "\n";

    nlohmann::ordered_json report;
    report["schema"] = 1;
    report["command"] = "reduce";
    report["seed"] = seed;
    report["cyclic"] = c.coordinates()[cyc].symbol_name();
    report["momentum_level"] = rational_to_double(mu.constant_value());
    report["h"] = hh;
    report["T"] = tt;
    report["rows"] = rows;
    report["truncated"] = full.truncated || reduced.truncated;
    report["max_shared_state_gap"] = shared_gap;
    report["max_reconstruction_gap"] = angle_gap;
    report["max_reconstruction_rate_gap"] = angle_rate_gap;
    return {text.str(), std::move(report)};
}

nlohmann::ordered_json cmd_find(const SystemFile& sf, int degree, std::uint64_t seed) {
    if (degree < 0) throw PreconditionError("the ansatz degree must be nonnegative");
    ForcedLagrangianSystem sys = sf.system(seed);
    const ChartedSystem& c = sys.chart();
    const std::size_t n = c.dim();

    // Monomials q^e with |e| <= degree, in deterministic graded-lex order.
    std::vector<std::vector<int>> tuples;
    std::vector<int> current(n, 0);
    auto emit = [&](auto&& self, std::size_t pos, int budget) -> void {
        if (pos == n) {
            tuples.push_back(current);
            return;
        }
        for (int d = 0; d <= budget; ++d) {
            current[pos] = d;
            self(self, pos + 1, budget - d);
        }
        current[pos] = 0;
    };
    emit(emit, 0, degree);
    std::vector<Expr> monomials;
    monomials.reserve(tuples.size());
    for (const std::vector<int>& e : tuples) {
        Expr m = Expr::integer(1);
        for (std::size_t i = 0; i < n; ++i)
            if (e[i] > 0) m = m * pow(c.coordinates()[i], e[i]);
        monomials.push_back(simplify(m));
    }

    // Residual contribution of each ansatz basis field e_k = m_a(q) d/dq^i.
    const std::size_t K = n * monomials.size();
    std::vector<Expr> contrib;
    contrib.reserve(K);
    for (std::size_t i = 0; i < n; ++i)
        for (const Expr& m : monomials) {
            std::vector<Expr> comps(n, Expr());
            comps[i] = m;
            VectorFieldTQ xc = complete_lift(c, VectorFieldQ{comps});
            contrib.push_back(simplify(apply_field(c, xc, sys.lagrangian(), Side::Lagrangian) -
                                       pairing(flatten(xc), semibasic_coeffs(sys.force()))));
        }

    std::vector<Expr> zs = c.tq_symbols();
    std::vector<std::vector<Rational>> solutions;
    bool exact_ok = true;

    // Exact tier: polynomial coefficient matching over (q, qd), with
    // parameter-bearing coefficients pinned at exact rational assignments.
    {
        std::vector<std::map<std::vector<std::int64_t>, Expr>> polys(K);
        std::set<std::vector<std::int64_t>> keys;
        std::set<std::string> params;
        for (std::size_t k = 0; k < K && exact_ok; ++k) {
            auto p = as_polynomial(contrib[k], zs);
            if (!p) {
                exact_ok = false;
                break;
            }
            polys[k] = std::move(*p);
            for (const auto& [key, coeff] : polys[k]) {
                keys.insert(key);
                for (const Expr& s : coeff.free_symbols()) params.insert(s.symbol_name());
            }
        }
        if (exact_ok) {
            std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
            std::uniform_int_distribution<int> num(1, 12), den(1, 7), sign(0, 1);
            const std::size_t assignments = params.empty() ? 1 : 3;
            std::vector<std::vector<Rational>> rows;
            for (std::size_t a = 0; a < assignments && exact_ok; ++a) {
                std::vector<std::pair<Expr, Expr>> table;
                for (const std::string& name : params) {
                    Rational r = Rational(num(rng)) / Rational(den(rng));
                    if (sign(rng)) r = -r;
                    table.emplace_back(Expr::symbol(name, SymbolKind::Parameter),
                                       Expr::constant(r));
                }
                for (const std::vector<std::int64_t>& key : keys) {
                    std::vector<Rational> row;
                    row.reserve(K);
                    for (std::size_t k = 0; k < K; ++k) {
                        auto it = polys[k].find(key);
                        if (it == polys[k].end()) {
                            row.emplace_back(0);
                            continue;
                        }
                        Expr val = simplify(substitute(it->second, table));
                        if (!val.is_constant()) {
                            exact_ok = false;
                            break;
                        }
                        row.push_back(val.constant_value());
                    }
                    if (!exact_ok) break;
                    rows.push_back(std::move(row));
                }
            }
            if (exact_ok) solutions = rational_nullspace(std::move(rows), K);
        }
    }

    if (!exact_ok) {
        // Sampling tier for non-polynomial systems; candidates are
        // rationalized and re-verified symbolically.
        std::set<std::string> names;
        for (const Expr& e : contrib)
            for (const Expr& s : e.free_symbols()) names.insert(s.symbol_name());
        std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
        std::uniform_real_distribution<double> mag(0.1, 2.0);
        std::uniform_int_distribution<int> sign(0, 1);
        std::vector<std::vector<double>> rows;
        const std::size_t wanted = 2 * K + 8;
        int attempts = 0;
        while (rows.size() < wanted) {
            if (++attempts > 400)
                throw IndeterminateError("could not sample enough admissible points");
            Bindings b;
            for (const std::string& name : names)
                b.set(name, (sign(rng) ? -1.0 : 1.0) * mag(rng));
            std::vector<double> row;
            row.reserve(K);
            bool ok = true;
            for (const Expr& e : contrib) {
                try {
                    double v = eval(e, b);
                    if (!std::isfinite(v)) ok = false;
                    row.push_back(v);
                } catch (const EvalError&) {
                    ok = false;
                }
                if (!ok) break;
            }
            if (ok) rows.push_back(std::move(row));
        }
        for (const std::vector<double>& v : numeric_nullspace(std::move(rows), K, 1e-8)) {
            std::vector<Rational> rv;
            rv.reserve(K);
            for (double x : v) rv.push_back(rationalize(x));
            Expr total = Expr();
            for (std::size_t k = 0; k < K; ++k)
                if (rv[k] != 0) total = total + Expr::constant(rv[k]) * contrib[k];
            if (zero_verdict(simplify(total), sys.seed()) != Verdict::True)
                throw IndeterminateError(
                    "a sampled candidate field failed symbolic re-verification");
            solutions.push_back(std::move(rv));
        }
    }

    nlohmann::ordered_json out;
    out["schema"] = 1;
    out["command"] = "find";
    out["seed"] = seed;
    out["degree"] = degree;
    nlohmann::ordered_json fields = nlohmann::ordered_json::array();
    for (const std::vector<Rational>& v : solutions) {
        nlohmann::ordered_json field;
        nlohmann::ordered_json comps = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < n; ++i) {
            Expr comp = Expr();
            for (std::size_t a = 0; a < monomials.size(); ++a)
                if (v[i * monomials.size() + a] != 0)
                    comp = comp + Expr::constant(v[i * monomials.size() + a]) * monomials[a];
            comps.push_back(simplify(comp).to_string());
        }
        field["components"] = std::move(comps);
        fields.push_back(std::move(field));
    }
    out["fields"] = std::move(fields);
    return out;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write output file '" + path + "'");
    f << content;
}

} // namespace

int run(const Options& options, std::ostream& out, std::ostream& err) {
    try {
        SystemFile sf = parse_system(options.system_path);
        const std::uint64_t seed = resolve_seed(options.seed);
        auto deliver = [&](const std::string& content) {
            if (options.out_path)
                write_file(*options.out_path, content);
            else
                out << content;
        };
        if (options.command == "derive") {
            deliver(cmd_derive(sf, seed));
        } else if (options.command == "check") {
            deliver(cmd_check(sf, seed).dump(2) + "\n");
        } else if (options.command == "simulate") {
            SimulateOutput s = cmd_simulate(sf, seed, options.h, options.T);
            deliver(s.csv);
            (options.out_path ? out : err) << s.summary.dump(2) << "\n";
        } else if (options.command == "reduce") {
            ReduceOutput r = cmd_reduce(sf, seed, options.h, options.T);
            deliver(r.system_text);
            (options.out_path ? out : err) << r.report.dump(2) << "\n";
        } else if (options.command == "find") {
            deliver(cmd_find(sf, options.degree, seed).dump(2) + "\n");
        } else {
            throw PreconditionError("unknown command '" + options.command + "'");
        }
        return 0;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const IndeterminateError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace fm::cli
