// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lcvx {

/// One block of a product cone over the slack vector.
enum class ConeBlockType : std::uint8_t {
  Zero,         ///< s = 0 (equality rows; dual is free)
  NonNegative,  ///< s >= 0 elementwise
  SecondOrder,  ///< s = (t, v) with ||v||_2 <= t, dim >= 2
};

struct ConeBlock {
  ConeBlockType type;
  int dim;
};

/// Ordered product of cone blocks; the slack vector s is partitioned in the
/// same order as the rows of the constraint matrix.
struct ConeSpec {
  std::vector<ConeBlock> blocks;

  int total_dim() const;
  /// Validates block dims (> 0, second-order >= 2, total > 0).
  bool well_formed() const;
};

/// Conic program in standard form
///
///   minimize    c'x
///   subject to  A x + s = b,   s in cone
///
/// covering linear equalities (zero blocks), linear inequalities
/// (nonnegative blocks) and second-order-cone constraints.
struct ConicProgram {
  Eigen::VectorXd c;              ///< objective, length n
  Eigen::SparseMatrix<double> A;  ///< m x n constraint matrix
  Eigen::VectorXd b;              ///< right-hand side, length m
  ConeSpec cone;                  ///< cone over s, total dim m
  /// Optional per-column names for diagnostics; empty or size n.
  std::vector<std::string> var_names;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
  /// Checks dimension consistency and finiteness of all entries.
  bool well_formed() const;
};

enum class SolveStatus : std::uint8_t {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  MaxIterations,
  NumericalFailure,
};

const char* to_string(SolveStatus s);

struct SolverSettings {
  double feas_tol = 1e-8;  ///< primal/dual feasibility tolerance
  double gap_tol = 1e-8;   ///< relative duality-gap tolerance
  int max_iters = 200;
  /// Static regularization added to the quasi-definite KKT diagonal.
  double static_reg = 1e-9;
  /// Ruiz-style equilibration sweeps applied to (A, b, c) before solving.
  int equil_iters = 3;
  /// Iterative-refinement passes per KKT solve.
  int refine_iters = 2;
  /// Fraction of the step to the cone boundary taken each iteration.
  double step_fraction = 0.99;
};

/// Result of a conic solve. On Optimal, (x, y, s) satisfy the residual
/// tolerances of the settings used. On PrimalInfeasible, y is a certificate
/// normalized to b'y = -1 with A'y ~ 0 and y dual-cone feasible. On
/// DualInfeasible, x is an unboundedness certificate normalized to c'x = -1
/// with A x + s ~ 0, s in cone.
struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;  ///< primal variables
  Eigen::VectorXd y;  ///< dual variables, one per row
  Eigen::VectorXd s;  ///< slack variables, one per row
  double objective = 0.0;
  double duality_gap = 0.0;   ///< |c'x + b'y| / (1 + |c'x| + |b'y|)
  double primal_res = 0.0;    ///< ||A x + s - b|| / (1 + ||b||)
  double dual_res = 0.0;      ///< ||A'y + c|| / (1 + ||c||)
  int iterations = 0;
  double wall_time_s = 0.0;
};

struct Residuals {
  double primal_res;
  double dual_res;
  double gap;
};

/// Residuals of a candidate primal/dual/slack triple:
///   primal_res = ||A x + s - b||_2 / (1 + ||b||_2)
///   dual_res   = ||A'y + c||_2   / (1 + ||c||_2)
///   gap        = |c'x + b'y| / (1 + |c'x| + |b'y|)
/// Throws std::invalid_argument on dimension mismatch.
Residuals residuals(const ConicProgram& prog, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& s);

/// Debug dump: header "n m", then c, then A as "row col value" triplets, then
/// b, then one cone token per block ("Z d", "L d", "Q d"). Not a stability
/// contract; meant for attaching to bug reports.
void dump_program(const ConicProgram& prog, const std::string& path);

/// Interior-point solve of the standard-form program (homogeneous self-dual
/// embedding with Nesterov-Todd scaling). Deterministic: identical inputs and
/// settings give bit-identical iterates.
ConicSolution solve(const ConicProgram& prog,
                    const SolverSettings& settings = {});

}  // namespace lcvx
