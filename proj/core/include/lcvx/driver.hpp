// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Driver layer: fixed-horizon solves, golden-section search over the
// horizon length, and the losslessness audit that grades a relaxed
// solution against the semi-continuous input rules it is meant to
// satisfy (each channel either off or inside its annulus, at most K
// channels on at a time).

#pragma once

#include "lcvx/ocp.hpp"
#include "lcvx/transcription.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcvx {

// Thrown when a fixed-horizon solve ends in a state that is neither
// optimal nor a clean infeasibility certificate; carries the horizon so
// callers can report which solve failed.
class FixedHorizonError : public std::runtime_error {
  public:
    FixedHorizonError(const std::string& what, double t_f_arg, SolveStatus status_arg)
        : std::runtime_error(what), t_f(t_f_arg), status(status_arg) {}
    double t_f;
    SolveStatus status;
};

// Thrown by the horizon search when no horizon in the bracket admits a
// feasible problem; carries the endpoint solve statuses for diagnosis.
class BracketInfeasibleError : public std::runtime_error {
  public:
    BracketInfeasibleError(const std::string& what, SolveStatus lo, SolveStatus hi)
        : std::runtime_error(what), lo_status(lo), hi_status(hi) {}
    SolveStatus lo_status;
    SolveStatus hi_status;
};

// Transcribe and solve at a fixed horizon.  Returns the extracted solution
// when the solve is optimal, an empty optional when the problem is
// certified primal infeasible, and throws FixedHorizonError for every
// other terminal status (numerical failure, iteration limit, unboundedness
// certificate).
std::optional<OCPSolution> solve_fixed_tf(const RelaxedOCP& relaxed, int N, double t_f,
                                          const SolverSettings& settings = {});

struct GoldenSearchResult {
    double t_f = 0.0;        // selected horizon
    OCPSolution solution;    // solve at that horizon
    int evaluations = 0;     // fixed-horizon solves performed in total
};

// Golden-section search for the horizon that minimizes the optimal cost
// over [t_lo, t_hi], treating infeasible horizons as infinitely costly
// (they form a left segment for the problems this toolkit targets, and
// the section rule then walks the bracket right).  The search keeps the
// best feasible evaluation, re-solves at the converged bracket midpoint,
// and returns whichever is better.  When no horizon in the bracket ever
// produced a finite cost the endpoints themselves are probed before
// giving up with BracketInfeasibleError.
GoldenSearchResult golden_search_tf(const RelaxedOCP& relaxed, int N, double t_lo, double t_hi,
                                    double tol_t, const SolverSettings& settings = {});

// Classification of one channel at one stage by its slack level.
enum class NodeClass { Off, Active, Edge };

std::string to_string(NodeClass c);

struct AuditTolerances {
    // "off" threshold as a fraction of the channel's upper bound: a stage
    // counts as off when sigma <= off_fraction * rho2.
    double off_fraction = 1e-4;
    // allowed slop on the norm checks, again as a fraction of rho2.
    double norm_fraction = 1e-4;
};

// Stage-by-stage verdict on whether a relaxed solution actually behaves
// like a semi-continuous one.  Classification is by slack level:
// sigma >= rho1/2 is Active, sigma <= off_fraction * rho2 is Off, anything
// strictly between is Edge, and the two stages flanking a direct
// Active<->Off jump are re-marked Edge (the discretization smears the
// switch across one hold interval).  Edge stages are exempt from the norm
// checks; everything else must satisfy them for the verdict to hold.
struct LosslessReport {
    std::vector<std::vector<NodeClass>> classes; // [stage][channel]
    double max_off_norm = 0.0;                   // largest ||u|| on an Off stage
    double min_active_norm = 0.0;                // smallest ||u|| on an Active stage
    double max_active_norm = 0.0;                // largest ||u|| on an Active stage
    int max_simultaneous_active = 0;             // peak count of Active channels
    std::vector<int> edge_nodes;                 // stages with any Edge channel
    bool verdict = true;
    std::vector<std::string> violations; // human-readable failures
};

// Checks, per non-Edge stage and channel: Off stages carry no input
// (||u|| <= off_fraction * rho2); Active stages keep ||u|| inside
// [rho1 - tol, rho2 + tol] with tol = norm_fraction * rho2, and when the
// cost accumulates slack (zeta = 1) the slack must be tight on Active
// stages (||u|| >= sigma - tol); stages without Edge channels may have at
// most K Active channels.
LosslessReport audit_losslessness(const OCPSolution& sol, const SemiContinuousOCP& problem,
                                  const AuditTolerances& tol = {});

} // namespace lcvx
