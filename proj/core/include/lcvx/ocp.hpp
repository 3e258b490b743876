// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Data model for a continuous-time optimal control problem with
// semi-continuous input norms, and its convex relaxation.
//
// The controlled system is
//
//     xdot = A x + sum_i u_i ... mapped through B ... + w,
//
// with M input channels u_i that are either off (u_i = 0) or on with
// norm bounds rho1_i <= ||u_i||_2 <= rho2_i, at most K channels on at a
// time, per-channel polytopic pointing sets {u : C_i u <= 0}, a convex
// state set given by halfspace and norm-cone atoms, an affine terminal
// manifold E x(t_f) = e_target, and a cost built from an affine terminal
// term, an optional integral of the total input norm effort, and weighted
// absolute values of affine state functionals.
//
// The relaxation replaces the on/off structure per channel with a slack
// sigma_i and a continuous activation gamma_i in [0, 1]:
//
//     gamma_i rho1_i <= sigma_i <= gamma_i rho2_i,   ||u_i||_2 <= sigma_i,
//     sum_i gamma_i <= K,
//
// plus an effort accumulator xi with xidot = sum_i sigma_i and xi(0) = 0,
// so the input running cost is zeta * xi(t_f).  This is a pure metadata
// transformation; all numerics live in the transcription.

#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace lcvx {

// a'x + b
struct AffineFunctional {
    Eigen::VectorXd a;
    double b = 0.0;
};

// weight * |a'x + b|, weight >= 0
struct RunningCostTerm {
    double weight = 0.0;
    AffineFunctional f;
};

// m(t_f, x(t_f)) = time_weight * t_f + state_weights'x(t_f) + offset
struct TerminalCost {
    double time_weight = 0.0;
    Eigen::VectorXd state_weights; // empty means zero
    double offset = 0.0;
};

struct CostSpec {
    int zeta = 0; // 1 enables the input running cost xi(t_f)
    TerminalCost terminal;
    std::vector<RunningCostTerm> running;
};

// {x : a'x <= c}
struct HalfspaceAtom {
    Eigen::VectorXd a;
    double c = 0.0;
};

// {x : ||P x||_2 <= q'x + r}
struct NormConeAtom {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    double r = 0.0;
};

using StateAtom = std::variant<HalfspaceAtom, NormConeAtom>;

// Convex state set as an intersection of atoms.
struct StateConstraintSet {
    std::vector<StateAtom> atoms;
};

// One input channel: on means rho1 <= ||u||_2 <= rho2 with C u <= 0.
struct InputChannel {
    double rho1 = 0.0;
    double rho2 = 0.0;
    Eigen::MatrixXd cone_matrix; // p x m; p may be zero (no pointing constraint)
};

struct SemiContinuousOCP {
    Eigen::MatrixXd A; // n x n
    Eigen::MatrixXd B; // n x m (shared by all channels)
    Eigen::VectorXd w; // n
    std::vector<InputChannel> channels;
    int K = 1; // max simultaneously active channels
    Eigen::VectorXd x0;
    Eigen::MatrixXd E;        // terminal manifold: E x(t_f) = e_target
    Eigen::VectorXd e_target;
    StateConstraintSet state_set;
    CostSpec cost;

    int state_dim() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(B.cols()); }
    int num_channels() const { return static_cast<int>(channels.size()); }
};

struct ValidationIssue {
    std::string what;
    int channel = -1; // -1 for problem-level issues
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

// Check every structural invariant (dimension consistency, 0 < rho1 < rho2,
// full row rank of each cone matrix at 1e-10 relative singular-value
// tolerance, 1 <= K <= M, nonnegative running weights, finite data, ...).
// Never throws; all findings are report entries.  Side-effect-free.
ValidationReport validate(const SemiContinuousOCP& problem);

// The relaxed problem.  Carries the original data; the relaxation semantics
// (sigma/gamma per channel, budget, accumulator xi with xi(0) = 0) are fixed
// by convention and consumed by the transcription.
struct RelaxedOCP {
    SemiContinuousOCP base;
    int num_slack_channels() const { return base.num_channels(); }
};

// Validate and wrap.  Throws std::invalid_argument with the report text if
// validation fails.
RelaxedOCP relax(const SemiContinuousOCP& problem);

} // namespace lcvx
