#pragma once

// JSON containers for operators, states and physical subspaces.
//
// Operator container:
//   {"shape": [rows, cols], "entries": [[re, im], ...] (row-major),
//    "basis_ordering": "system-major", "sigma": +-1,
//    "grid": {"M": .., "deltaT": .., "T0": ..}}
// Doubles are written with round-trip precision.

#include <optional>

#include <json.hpp>

#include "eptime/constraint.hpp"
#include "eptime/quantum.hpp"

namespace eptime::io {

using Json = nlohmann::json;

struct GridInfo {
    int m = 0;
    double delta_t = 0.0;
    double t0 = 0.0;
    int sigma = 1;
};

GridInfo grid_info(const quantum::ClockSpace &clock);

Json matrix_to_json(const CMatrix &a, const std::optional<GridInfo> &grid = {});
CMatrix matrix_from_json(const Json &j);

Json state_to_json(const quantum::ExtendedState &psi, const GridInfo &grid);
quantum::ExtendedState state_from_json(const Json &j);

/// Operator container of the basis plus the matched-pairs table
/// [{i, k, E_i, s_k, mismatch}].
Json subspace_to_json(const constraint::PhysicalSubspace &sub,
                      const quantum::ClockSpace &clock);
constraint::PhysicalSubspace subspace_from_json(const Json &j);

} // namespace eptime::io
