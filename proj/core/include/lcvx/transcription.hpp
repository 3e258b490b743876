// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Transcription of the relaxed optimal-control problem into a standard-form
// conic program on a uniform time grid, plus extraction of trajectories and
// dynamics-row duals from a solved program.
//
// Grid and variable layout
// ------------------------
// A horizon t_f is split into N nodes t_k = k*dt, dt = t_f/(N-1).  States
// x_k and the input-accumulator xi_k live on nodes 0..N-1; inputs u_{i,k},
// slack magnitudes sigma_{i,k}, activity levels gamma_{i,k} and running-cost
// epigraph auxiliaries live on stages k = 0..N-2 and are held constant over
// [t_k, t_{k+1}) (zero-order hold).
//
// Constraints
// -----------
//   x_{k+1} = Ad x_k + Bd sum_i u_{i,k} + wd          (exact ZOH discretization)
//   xi_{k+1} = xi_k + dt * sum_i sigma_{i,k},  xi_0 = 0
//   gamma_{i,k} rho1_i <= sigma_{i,k} <= gamma_{i,k} rho2_i
//   ||u_{i,k}||_2 <= sigma_{i,k}                       (second-order cone)
//   0 <= gamma_{i,k} <= 1,   sum_i gamma_{i,k} <= K
//   C_i u_{i,k} <= 0                                   (pointing)
//   state-set atoms at nodes 1..N-1 (node 0 is pinned to x0)
//   E x_{N-1} = e_target
//   optional pins gamma_{i,k} = 0 or 1 as equality rows
//
// Objective: terminal cost at (t_f, x_{N-1}) + zeta * xi_{N-1} plus a
// left-endpoint rectangle rule for the running state cost; absolute values
// enter through one epigraph variable and two halfspaces per term and stage.
//
// Scaling
// -------
// The program is built in scaled variables (states by max(|x0|, |target|, 1)
// componentwise, inputs and sigmas by max_i rho2_i, xi by that times t_f)
// and every constraint row is normalized by its largest coefficient
// (uniformly across each second-order block so cone membership is
// preserved).  Extraction undoes both maps, so trajectories, costs and
// duals are reported in natural units.

#pragma once

#include "lcvx/cone_program.hpp"
#include "lcvx/ocp.hpp"

#include <Eigen/Core>

#include <map>
#include <utility>
#include <vector>

namespace lcvx {

/// A relaxed problem instance transcribed onto a uniform grid.  The index
/// maps give, for every decision symbol of the continuous problem, the
/// starting column of its (contiguous) block in `program`, and for every
/// constraint family the starting row; widths follow from the problem
/// dimensions (states n, inputs m, channels M, running terms R).
struct TranscribedProblem {
    ConicProgram program;
    RelaxedOCP relaxed;  ///< problem data, kept for extraction checks

    int N = 0;       ///< number of grid nodes (>= 2)
    double dt = 0.0; ///< grid spacing t_f / (N-1)
    double t_f = 0.0;
    /// Constant cost (terminal time weight * t_f + terminal offset) that the
    /// linear objective cannot carry; added back during extraction.
    double objective_offset = 0.0;

    // --- column starts (program variables are scaled) -----------------
    std::vector<int> x_col;                  ///< per node, n wide
    std::vector<int> xi_col;                 ///< per node, 1 wide
    std::vector<std::vector<int>> u_col;     ///< [stage][channel], m wide
    std::vector<std::vector<int>> sigma_col; ///< [stage][channel], 1 wide
    std::vector<std::vector<int>> gamma_col; ///< [stage][channel], 1 wide
    std::vector<std::vector<int>> epi_col;   ///< [stage][running term], 1 wide

    // --- row starts ----------------------------------------------------
    std::vector<int> dyn_row;                     ///< per stage, n wide
    std::vector<int> xi_row;                      ///< per stage, 1 wide
    int terminal_row = -1;                        ///< rows(E) wide
    std::vector<std::vector<int>> sigma_lb_row;   ///< sigma >= gamma rho1
    std::vector<std::vector<int>> sigma_ub_row;   ///< sigma <= gamma rho2
    std::vector<std::vector<int>> gamma_lb_row;   ///< gamma >= 0
    std::vector<std::vector<int>> gamma_ub_row;   ///< gamma <= 1
    std::vector<int> budget_row;                  ///< per stage, 1 wide
    std::vector<std::vector<int>> pointing_row;   ///< p_i wide, -1 when p_i = 0
    std::vector<std::vector<int>> norm_row;       ///< SOC (sigma, u), 1+m wide

    // --- scaling maps ---------------------------------------------------
    Eigen::VectorXd x_scale;   ///< natural x = x_scale .* program x
    double xi_scale = 1.0;
    double input_scale = 1.0;  ///< applies to u and sigma columns
    Eigen::VectorXd epi_scale; ///< per running term
    /// Per-row multiplier applied during normalization; a natural-unit dual
    /// is row_scale[r] * program dual.
    Eigen::VectorXd row_scale;

    std::map<std::pair<int, int>, int> fixed_gammas; ///< (channel, stage) -> 0/1
};

/// Trajectories and multipliers recovered from a solved transcription, in
/// natural units.  Guarantees on return: ||u_i(k)|| <= sigma_i(k) + 1e-6,
/// gamma in [0, 1] (clamped from at most 1e-6 excursions), the activity
/// budget holds to 1e-6, and pointing-cone violations stay below 1e-6.
struct OCPSolution {
    Eigen::VectorXd t;   ///< node times, N
    Eigen::MatrixXd x;   ///< N x n, one node per row
    std::vector<Eigen::MatrixXd> u; ///< per channel, (N-1) x m
    Eigen::MatrixXd sigma;          ///< (N-1) x M
    Eigen::MatrixXd gamma;          ///< (N-1) x M
    Eigen::VectorXd xi;  ///< N
    double J = 0.0;      ///< total cost, constant terms included
    /// Dynamics-row duals per stage, (N-1) x n.  These are the discrete
    /// multipliers of x_{k+1} - Ad x_k - Bd sum u - wd = 0 in natural units;
    /// the primer-vector module turns them into costate estimates.
    Eigen::MatrixXd costates;
    SolveStatus status = SolveStatus::NumericalFailure;
    int iterations = 0;
    double wall_time_s = 0.0;
};

/// Build the conic program for `relaxed` on an N-node grid over [0, t_f].
/// Entries of `fixed_gammas` pin individual activity levels to 0 or 1 by an
/// equality row each (used by the branch-and-bound oracle).  Throws
/// std::invalid_argument on N < 2, non-positive or non-finite t_f, an
/// out-of-range pin, or a problem that fails validate().
TranscribedProblem transcribe(const RelaxedOCP& relaxed, int N, double t_f,
                              const std::map<std::pair<int, int>, int>& fixed_gammas = {});

/// Recover natural-unit trajectories and duals from a solved program.
/// Throws std::invalid_argument unless `solution.status` is Optimal, and
/// std::runtime_error if the solve is so inaccurate that the documented
/// OCPSolution guarantees cannot be met.
OCPSolution extract_solution(const TranscribedProblem& tp, const ConicSolution& solution);

} // namespace lcvx
