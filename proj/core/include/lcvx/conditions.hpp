// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Optimality machinery for the relaxation: polyhedral-cone projections,
// recovery of the adjoint/primer trajectory from transcription duals, input
// gains, strong observability via the weakly unobservable subspace, and the
// a posteriori normality / non-ambiguity / transversality checks that
// certify the relaxed solution solves the original on/off problem.
//
// Conventions
// -----------
// All per-node quantities below live on the N-1 stage left endpoints
// t_0..t_{N-2} (inputs are stage quantities under the zero-order hold).
// Adjoint quantities keep the raw scale fixed by the transcription duals --
// gains with zeta = 1 are scale-dependent, so no normalization is applied
// to them; the `normalization` field is the constant writers should divide
// the primer by for plotting.

#pragma once

#include "lcvx/ocp.hpp"
#include "lcvx/transcription.hpp"

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace lcvx {

/// Adjoint trajectory recovered from the dynamics-row duals: costate
/// lambda_k, primer y_k = B' lambda_k and per-channel input gains
/// Gamma_{i,k} = (||proj onto channel cone of y_k|| - zeta) * rho2_i.
struct AdjointTrajectory {
    Eigen::MatrixXd lambda; ///< (N-1) x n, sign-resolved
    Eigen::MatrixXd y;      ///< (N-1) x m
    Eigen::MatrixXd gains;  ///< (N-1) x M
    double sign = 1.0;          ///< resolved overall dual sign
    double normalization = 1.0; ///< max_k ||y_k||, for reporting only
    /// True when the primer is numerically zero everywhere (e.g. an
    /// at-target problem with zero inputs); gains are then meaningless.
    bool degenerate = false;
};

/// Strong-observability verdict: holds iff the weakly unobservable
/// subspace of the adjoint system is trivial.
struct Condition1Result {
    bool holds = false;
    int subspace_dim = -1;
};

/// Per-stage normality (condition 2) and non-ambiguity (condition 3)
/// verdicts.  k_prime counts channels with gain above the tie tolerance;
/// k_dprime = min(budget K, k_prime) is the number of channels optimality
/// turns on at that stage.
struct StageConditions {
    bool cond2 = false;
    bool cond3 = false;
    int k_prime = 0;
    int k_dprime = 0;
};

struct Conditions23Result {
    std::vector<StageConditions> stages;
    /// Maximal runs of consecutive stages where condition 2 or 3 fails,
    /// as inclusive (first, last) stage indices.
    std::vector<std::pair<int, int>> violated_runs;
    bool all_hold() const { return violated_runs.empty(); }
    int longest_run() const;
};

/// Transversality proxy: |running cost + zeta * total slack + d(terminal
/// cost)/dt| evaluated per stage; holds iff the minimum exceeds 1e-9.
struct Condition4Result {
    bool holds = false;
    double min_margin = 0.0;
};

/// Nodes (1..N-1) where some state-set atom is tight within tol, plus a
/// flag that is true iff no two contact nodes are adjacent (the discrete
/// contact-set structure the losslessness theory expects).
struct ContactSet {
    std::vector<int> nodes;
    bool discrete = true;
};

/// Aggregate report assembled by the application layer.
struct ConditionReport {
    bool assumption1 = false; ///< every pointing-cone matrix full row rank
    bool assumption2 = false; ///< strict norm-bound gap rho1 < rho2 per channel
    Condition1Result condition1;
    Conditions23Result conditions23;
    Condition4Result condition4;
    ContactSet contacts;
};

/// Magnitude of the Euclidean projection of y onto {z : C z <= 0}:
/// ||argmin_{Cz <= 0} ||y - z||||.  C must be p x m with full row rank
/// (p = 0 means no constraint).  For p <= 8 the projection is computed
/// exactly (to 1e-10) by enumerating facet subsets, each an
/// equality-constrained least squares; larger cones are routed through the
/// interior-point solver at its tolerance.  Throws std::invalid_argument
/// on rank deficiency or dimension mismatch.
double project_onto_cone(const Eigen::VectorXd& y, const Eigen::MatrixXd& C);

/// Recover the adjoint trajectory from the dynamics-row duals of a solved
/// transcription.  The overall dual sign is chosen to maximize agreement
/// between "channel on (gamma = 1)" and "channel gain is the stage
/// maximum"; ties keep +1.  Throws std::invalid_argument when the solution
/// carries no duals of the expected shape.
AdjointTrajectory recover_primer(const TranscribedProblem& tp, const OCPSolution& sol,
                                 const Eigen::MatrixXd& B);

/// Basis (orthonormal columns, possibly zero of them) of the weakly
/// unobservable subspace of (A, B, C, D): the limit of
///   V_0 = R^n,  V_{k+1} = {x : exists u with A x + B u in V_k, C x + D u = 0},
/// reached in at most n steps.  Kernel/intersection steps use a relative
/// singular-value threshold of 1e-10.  If `dims_per_iter` is non-null it
/// receives the subspace dimension after every iteration (monotone
/// non-increasing).  Throws std::invalid_argument on inconsistent shapes.
Eigen::MatrixXd weakly_unobservable_subspace(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                             const Eigen::MatrixXd& C, const Eigen::MatrixXd& D,
                                             std::vector<int>* dims_per_iter = nullptr);

/// Strong observability of the adjoint system: the weakly unobservable
/// subspace of (-A', D, B', 0) must be trivial, where D is an orthonormal
/// basis of the running-cost subdifferential directions (the span of the
/// running-term normals with positive weight).
Condition1Result check_condition1(const SemiContinuousOCP& problem);

/// Normality and non-ambiguity per stage.  Stage gains are sorted
/// descending;  condition 2 asks that either no gain sits at zero or at
/// least K are strictly positive; condition 3 asks that the activation
/// boundary is untied: the k_dprime-th and (k_dprime+1)-th gains are
/// separated by more than tie_tol (vacuous when k_dprime is 0 or M).
Conditions23Result check_conditions23_posteriori(const AdjointTrajectory& adj, int K,
                                                 double tie_tol);

/// Transversality proxy over stages 0..N-2 (see Condition4Result).
Condition4Result check_condition4_posteriori(const OCPSolution& sol,
                                             const SemiContinuousOCP& problem);

/// Contact set of the state constraints along a solved trajectory.
ContactSet contact_set(const OCPSolution& sol, const StateConstraintSet& state_set, double tol);

} // namespace lcvx
