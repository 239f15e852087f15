#pragma once

#include "forcedmech/dynamics.hpp"
#include "forcedmech/geometry.hpp"
#include "forcedmech/reduction.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fm {

// A named vector field candidate: dim() components for a field on the
// configuration space, 2*dim() for a phase-space field (A then B blocks).
struct CandidateField {
    std::string name;
    std::vector<Expr> components;
};

// Generators (components over the configuration chart) plus structure
// constants c^d_ab for the bracket [e_a, e_b] = c^d_ab e_d.
struct ActionSpec {
    std::vector<std::vector<Expr>> generators;
    std::vector<std::vector<std::vector<Rational>>> structure;
};

struct IntegrationSpec {
    double h = 0;
    double T = 0;
    std::vector<double> state; // coordinates then velocities, chart order
};

struct MonitorSpec {
    std::string name;
    Expr expr; // may reference the time symbol t
};

// In-memory image of a system-definition file. Sections:
//   [coordinates] [parameters] [lagrangian] [force] | [dissipation]
//   [candidates] [action] [integration] [monitor]
struct SystemFile {
    std::vector<std::string> coordinates;
    std::vector<std::pair<std::string, double>> parameters; // declaration order
    Expr lagrangian;
    std::vector<Expr> force;         // one covector component per coordinate
    bool has_force = false;
    std::optional<Expr> dissipation; // mutually exclusive with force
    std::vector<CandidateField> candidates;
    std::optional<ActionSpec> action;
    std::optional<IntegrationSpec> integration;
    std::vector<MonitorSpec> monitors;

    ChartedSystem chart() const;
    ForcedLagrangianSystem system(std::uint64_t seed = 0) const;
    // Requires an [action] section; validates generators and closure.
    AlgebraAction algebra_action(const ChartedSystem& chart, std::uint64_t seed = 0) const;
};

// Parse and validate a system definition. ParseError diagnostics carry the
// line and column of the offending text.
SystemFile parse_system_text(const std::string& text);
SystemFile parse_system(const std::string& path);

} // namespace fm
