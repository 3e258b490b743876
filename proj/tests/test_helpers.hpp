// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Shared helpers for the test suite: deterministic random program generators
// and small independent oracles used to cross-check the main implementation.

#pragma once

#include <lcvx/cone_program.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <random>
#include <vector>

namespace lcvx_test {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Build a ConicProgram from a dense A for test convenience.
inline lcvx::ConicProgram make_program(const VectorXd& c, const MatrixXd& A,
                                       const VectorXd& b,
                                       const std::vector<lcvx::ConeBlock>& blocks) {
    lcvx::ConicProgram prog;
    prog.c = c;
    prog.b = b;
    prog.A = A.sparseView();
    prog.A.makeCompressed();
    prog.cone.blocks = blocks;
    return prog;
}

// Shift a vector into the interior of the given cone product (orthant and
// second-order blocks; zero blocks are set to zero).
inline void shift_into_cone(VectorXd& s, const std::vector<lcvx::ConeBlock>& blocks) {
    int at = 0;
    for (const auto& blk : blocks) {
        switch (blk.type) {
        case lcvx::ConeBlockType::Zero:
            s.segment(at, blk.dim).setZero();
            break;
        case lcvx::ConeBlockType::NonNegative:
            for (int i = 0; i < blk.dim; ++i) s[at + i] = std::abs(s[at + i]) + 0.5;
            break;
        case lcvx::ConeBlockType::SecondOrder:
            s[at] = s.segment(at + 1, blk.dim - 1).norm() + std::abs(s[at]) + 0.5;
            break;
        }
        at += blk.dim;
    }
}

// Random primal-and-dual strictly feasible program: pick x0, s0 in int(K),
// b = A x0 + s0; pick y0 in int(K*) (same product cone, self-dual), and set
// c = -A'y0 so the dual is feasible at y0.  Strong duality holds.
struct RandomFeasibleProgram {
    lcvx::ConicProgram prog;
    VectorXd x0; // a strictly feasible primal point (not necessarily optimal)
};

inline RandomFeasibleProgram random_feasible_program(std::mt19937& rng, int n,
                                                     const std::vector<lcvx::ConeBlock>& blocks) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    int m = 0;
    for (const auto& blk : blocks) m += blk.dim;
    MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    VectorXd x0(n), s0(m), y0(m);
    for (int j = 0; j < n; ++j) x0[j] = gauss(rng);
    for (int i = 0; i < m; ++i) s0[i] = gauss(rng);
    for (int i = 0; i < m; ++i) y0[i] = gauss(rng);
    shift_into_cone(s0, blocks);
    shift_into_cone(y0, blocks);
    const VectorXd b = A * x0 + s0;
    const VectorXd c = -A.transpose() * y0;
    return {make_program(c, A, b, blocks), x0};
}

// Brute-force LP oracle: enumerate all n-subsets of rows, solve the active
// systems, keep feasible vertices, return the best objective.  The LP must be
// bounded with a vertex optimum (callers add box constraints to ensure it).
// Infinity is returned when no feasible vertex exists.
double lp_vertex_enumeration(const VectorXd& c, const MatrixXd& A, const VectorXd& b);

} // namespace lcvx_test
