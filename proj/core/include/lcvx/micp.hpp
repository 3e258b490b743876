// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Mixed-integer reference solver for the semi-continuous problem.
//
// The relaxation treats the activity levels gamma_{i,k} as continuous in
// [0, 1].  This module recovers the true mixed-integer optimum by best-first
// branch and bound over those binaries, using the transcription's gamma-pin
// mechanism so every node solves a conic program with the exact same shape
// (pins are extra equality rows, never structural edits).
//
// It exists as an independent yardstick: on instances small enough to
// enumerate, its objective certifies whether the continuous relaxation was
// tight.  It is not built for speed on long horizons -- each node pays a
// full transcription and interior-point solve.
//
// Search rules
// ------------
//   * best-first: nodes ordered by their parent's relaxation objective
//     (min-heap; FIFO among equal bounds, so runs are deterministic),
//   * branching: the free gamma farthest from {0, 1}, scanning stages in
//     order and channels within a stage (first win on ties),
//   * a node is integral when every free gamma is within int_tol of 0 or 1;
//     its relaxation objective then becomes the incumbent if strictly better,
//   * pruning: a node is discarded when its bound cannot beat the incumbent
//     by more than gap_tol * max(1, |incumbent|),
//   * node solves that end neither Optimal nor PrimalInfeasible throw --
//     dropping a node with an unknown bound could silently lose optimality.

#pragma once

#include "lcvx/transcription.hpp"

#include <limits>
#include <optional>

namespace lcvx {

/// Knobs for the branch-and-bound search.  The defaults certify small
/// instances (a few dozen binaries) to near machine precision.
struct MicpSettings {
    /// A gamma within this distance of 0 or 1 counts as integral.
    double int_tol = 1e-5;
    /// Stop as soon as (incumbent - best bound) <= gap_tol * max(1, |incumbent|).
    double gap_tol = 1e-6;
    /// Give up (status NodeLimit) after this many node relaxation solves.
    long max_nodes = 100000;
    /// Give up (status TimeLimit) after this much wall time, in seconds.
    double max_seconds = 600.0;
    /// Settings for the per-node conic solves.
    SolverSettings solver;
};

enum class MicpStatus {
    Optimal,     ///< search finished (or gap target met); incumbent is optimal
    NodeLimit,   ///< node cap hit; incumbent (if any) is best found so far
    TimeLimit,   ///< wall-time cap hit; incumbent (if any) is best found so far
    Infeasible,  ///< search exhausted without any integral feasible point
};

const char* to_string(MicpStatus status);

/// Outcome of a branch-and-bound run.
struct MicpResult {
    MicpStatus status = MicpStatus::Infeasible;
    /// Best integral solution found; empty when none exists (Infeasible) or
    /// none was reached before a cap fired.
    std::optional<OCPSolution> solution;
    /// Global lower bound on the mixed-integer optimum at exit: the smallest
    /// open-node bound, or the incumbent objective itself once the tree is
    /// exhausted (+inf when the whole tree proved infeasible).
    double best_bound = -std::numeric_limits<double>::infinity();
    /// (incumbent - best_bound) / max(1, |incumbent|); +inf without incumbent.
    double gap = std::numeric_limits<double>::infinity();
    /// Number of node relaxations actually solved (pruned nodes don't count).
    long nodes_explored = 0;
    double wall_time_s = 0.0;
};

/// Solves the mixed-integer problem (gamma_{i,k} constrained to {0, 1}) on a
/// uniform N-node grid over horizon t_f.  Throws std::invalid_argument on a
/// malformed problem, N < 2, or a non-positive/non-finite t_f, and
/// std::runtime_error when a node relaxation fails numerically.
MicpResult solve_micp(const RelaxedOCP& relaxed, int N, double t_f,
                      const MicpSettings& settings = {});

/// Verdict of an objective comparison between a continuous-relaxation
/// solution and a mixed-integer reference on the same grid.
struct EquivalenceCheck {
    bool equivalent = false;
    /// |J_relaxed - J_micp| / max(1, |J_micp|)
    double gap = std::numeric_limits<double>::infinity();
};

/// Compares the relaxation's objective against the mixed-integer reference:
/// equivalent iff |J_relaxed - J_micp| <= rel_tol * max(1, |J_micp|).  Both
/// solutions must live on the same time grid (same node count and node
/// times); otherwise std::invalid_argument is thrown, as it is for a
/// negative or non-finite rel_tol.
EquivalenceCheck verify_equivalence(const OCPSolution& relaxed_sol,
                                    const OCPSolution& micp_sol, double rel_tol);

}  // namespace lcvx
