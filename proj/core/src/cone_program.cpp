// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "lcvx/cone_program.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace lcvx {

int ConeSpec::total_dim() const {
  int d = 0;
  for (const auto& blk : blocks) d += blk.dim;
  return d;
}

bool ConeSpec::well_formed() const {
  if (blocks.empty()) return false;
  for (const auto& blk : blocks) {
    if (blk.dim <= 0) return false;
    if (blk.type == ConeBlockType::SecondOrder && blk.dim < 2) return false;
  }
  return total_dim() > 0;
}

bool ConicProgram::well_formed() const {
  if (A.cols() != c.size()) return false;
  if (A.rows() != b.size()) return false;
  if (cone.total_dim() != b.size()) return false;
  if (!cone.well_formed()) return false;
  if (!c.allFinite() || !b.allFinite()) return false;
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      if (!std::isfinite(it.value())) return false;
  if (!var_names.empty() && var_names.size() != static_cast<size_t>(c.size()))
    return false;
  return true;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

Residuals residuals(const ConicProgram& prog, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& s) {
  if (x.size() != prog.c.size() || y.size() != prog.b.size() ||
      s.size() != prog.b.size()) {
    throw std::invalid_argument("residuals: dimension mismatch");
  }
  Residuals r{};
  const double pobj = prog.c.dot(x);
  const double dobj = prog.b.dot(y);
  r.primal_res = (prog.A * x + s - prog.b).norm() / (1.0 + prog.b.norm());
  r.dual_res = (prog.A.transpose() * y + prog.c).norm() / (1.0 + prog.c.norm());
  r.gap = std::abs(pobj + dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  return r;
}

void dump_program(const ConicProgram& prog, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_program: cannot open " + path);
  out.precision(17);
  out << prog.num_vars() << ' ' << prog.num_rows() << '\n';
  for (int j = 0; j < prog.c.size(); ++j) out << prog.c[j] << '\n';
  for (int k = 0; k < prog.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(prog.A, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  for (int i = 0; i < prog.b.size(); ++i) out << prog.b[i] << '\n';
  for (const auto& blk : prog.cone.blocks) {
    char tag = 'Z';
    if (blk.type == ConeBlockType::NonNegative) tag = 'L';
    if (blk.type == ConeBlockType::SecondOrder) tag = 'Q';
    out << tag << ' ' << blk.dim << '\n';
  }
}

}  // namespace lcvx
