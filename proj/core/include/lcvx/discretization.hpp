// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Exact zero-order-hold discretization of linear time-invariant dynamics
//
//     xdot = A x + B u + w,
//
// via the matrix exponential of the augmented system matrix.  The matrix
// exponential uses Pade approximation with scaling and squaring, accurate to
// near machine precision for the moderate norms that arise after
// nondimensionalization.

#pragma once

#include <Eigen/Dense>

namespace lcvx {

// Matrix exponential exp(M) (scaling-and-squaring Pade, degree up to 13).
// Throws std::invalid_argument for non-square or non-finite input.
Eigen::MatrixXd expm(const Eigen::MatrixXd& M);

// One-step discrete dynamics x_{k+1} = Ad x_k + Bd u_k + wd for an input held
// constant over the step.
struct DiscreteDynamics {
    Eigen::MatrixXd Ad;
    Eigen::MatrixXd Bd;
    Eigen::VectorXd wd;
};

// Discretize xdot = A x + B u + w over a step of length dt with u held
// constant (zero-order hold).  Exact for LTI dynamics up to the accuracy of
// the matrix exponential.  Throws std::invalid_argument on dimension
// mismatches or dt <= 0.
DiscreteDynamics zoh_discretize(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& w, double dt);

} // namespace lcvx
