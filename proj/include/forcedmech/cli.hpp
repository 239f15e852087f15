#pragma once

#include "forcedmech/systemfile.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace fm::cli {

struct Options {
    std::string command; // derive | check | simulate | reduce | find
    std::string system_path;
    std::optional<std::string> out_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> h;
    std::optional<double> T;
    int degree = 1; // find only
};

// --seed flag beats the FORCEDMECH_SEED environment variable beats 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag);

// Equations of motion on both sides of the Legendre transform, as text.
std::string cmd_derive(const SystemFile& sf, std::uint64_t seed);

// Symmetry analysis of every candidate, as a versioned JSON report.
// Candidates are analyzed concurrently but reported in declaration order.
nlohmann::ordered_json cmd_check(const SystemFile& sf, std::uint64_t seed);

struct SimulateOutput {
    std::string csv; // t, state columns, monitor columns; 17 significant digits
    nlohmann::ordered_json summary;
};
SimulateOutput cmd_simulate(const SystemFile& sf, std::uint64_t seed, std::optional<double> h,
                            std::optional<double> T);

struct ReduceOutput {
    std::string system_text; // reduced system in file syntax
    nlohmann::ordered_json report;
};
// Reduces along the first cyclic coordinate at the momentum level fixed by
// the initial state, then compares full and reduced trajectories.
ReduceOutput cmd_reduce(const SystemFile& sf, std::uint64_t seed, std::optional<double> h,
                        std::optional<double> T);

// Polynomial-ansatz point symmetries of the forced system: vector fields on
// the configuration space, with components of total degree <= degree, whose
// complete lift satisfies X^c(L) = beta(X^c).
nlohmann::ordered_json cmd_find(const SystemFile& sf, int degree, std::uint64_t seed);

// Parse, dispatch, write outputs. Exit codes: 0 success, 1 parse error,
// 2 violated mathematical precondition, 3 indeterminate verdict, 4 internal.
int run(const Options& options, std::ostream& out, std::ostream& err);

} // namespace fm::cli
