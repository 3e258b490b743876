// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// JSON (de)serialization of SemiContinuousOCP.
//
// Document layout (matrices are row-major arrays of arrays):
//
//   {
//     "dynamics":  {"A": [[...]], "B": [[...]], "w": [...]},
//     "channels":  [{"rho1": r, "rho2": r, "C": [[...]]}, ...],
//     "K":         1,
//     "x0":        [...],
//     "terminal":  {"E": [[...]], "target": [...]},
//     "state_set": [{"type": "halfspace", "a": [...], "c": r},
//                   {"type": "norm_cone", "P": [[...]], "q": [...], "r": r}, ...],
//     "cost":      {"zeta": 0 or 1,
//                   "terminal": {"time_weight": r, "state_weights": [...], "offset": r},
//                   "running":  [{"weight": r, "a": [...], "b": r}, ...]}
//   }
//
// This layout is a stability contract: files written by one release parse in
// the next.  Optional blocks ("state_set", "cost", "C", sub-fields of
// "cost.terminal") may be omitted and default to empty/zero.

#pragma once

#include "lcvx/ocp.hpp"

#include <string>

namespace lcvx {

// Parse a problem from JSON text.  Throws std::invalid_argument with a
// descriptive message on malformed documents.  Parsing is structural only;
// call validate() for semantic checks.
SemiContinuousOCP ocp_from_json_string(const std::string& text);

// Serialize to JSON text (indent < 0 for compact output).
std::string ocp_to_json_string(const SemiContinuousOCP& problem, int indent = 2);

// File variants.  Throw std::invalid_argument on I/O or parse failure.
SemiContinuousOCP load_ocp_file(const std::string& path);
void save_ocp_file(const SemiContinuousOCP& problem, const std::string& path);

} // namespace lcvx
