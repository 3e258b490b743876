// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Solver correctness tests.  Known-solution problems are checked against
// hand-derived optima; random problems are checked against an independent
// vertex-enumeration oracle (LPs) and against solution invariants that hold
// for any correct conic solver (residuals, weak duality, cone membership).

#include "doctest.h"
#include "test_helpers.hpp"

#include <lcvx/cone_program.hpp>

#include <cmath>
#include <random>

using namespace lcvx;
using lcvx_test::make_program;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Cone membership check (distance-free, with small tolerance).
bool in_cone(const VectorXd& s, const ConeSpec& cone, double tol) {
    int at = 0;
    for (const auto& blk : cone.blocks) {
        switch (blk.type) {
        case ConeBlockType::Zero:
            if (s.segment(at, blk.dim).lpNorm<Eigen::Infinity>() > tol) return false;
            break;
        case ConeBlockType::NonNegative:
            if (s.segment(at, blk.dim).minCoeff() < -tol) return false;
            break;
        case ConeBlockType::SecondOrder:
            if (s.segment(at + 1, blk.dim - 1).norm() > s[at] + tol) return false;
            break;
        }
        at += blk.dim;
    }
    return true;
}

} // namespace

TEST_SUITE("conic_solver") {

TEST_CASE("bounded LP with unique vertex optimum") {
    // min x1 + 2 x2  s.t.  x1 + x2 = 1, x >= 0  ->  x = (1, 0), obj = 1.
    VectorXd c(2);
    c << 1.0, 2.0;
    MatrixXd A(3, 2);
    A << 1.0, 1.0, // equality
        -1.0, 0.0, // s1 = x1 >= 0
        0.0, -1.0; // s2 = x2 >= 0
    VectorXd b(3);
    b << 1.0, 0.0, 0.0;
    auto prog = make_program(c, A, b,
                             {{ConeBlockType::Zero, 1}, {ConeBlockType::NonNegative, 2}});
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(sol.x[1] == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(sol.primal_res <= 1e-8);
    CHECK(sol.dual_res <= 1e-8);
    CHECK(sol.duality_gap <= 1e-8);
}

TEST_CASE("one-sided bound") {
    // min x  s.t.  x >= 1.
    VectorXd c(1);
    c << 1.0;
    MatrixXd A(1, 1);
    A << -1.0;
    VectorXd b(1);
    b << -1.0;
    auto prog = make_program(c, A, b, {{ConeBlockType::NonNegative, 1}});
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-7));
    // Dual: y = 1 for the single row.
    CHECK(sol.y[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("maximize sum inside unit disk") {
    // min -x1 - x2  s.t. ||x|| <= 1  ->  x = (1,1)/sqrt(2), obj = -sqrt(2).
    VectorXd c(2);
    c << -1.0, -1.0;
    MatrixXd A(3, 2);
    A << 0.0, 0.0, -1.0, 0.0, 0.0, -1.0;
    VectorXd b(3);
    b << 1.0, 0.0, 0.0;
    auto prog = make_program(c, A, b, {{ConeBlockType::SecondOrder, 3}});
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
    CHECK(sol.x[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(sol.x[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("distance to a pinned point") {
    // min t  s.t.  ||x - a|| <= t, x = p  ->  t = ||p - a||.
    // Variables (t, x1, x2); a = (1,2), p = (4,6) -> t = 5.
    VectorXd c(3);
    c << 1.0, 0.0, 0.0;
    MatrixXd A(5, 3);
    A.setZero();
    // zero rows: x = p
    A(0, 1) = 1.0;
    A(1, 2) = 1.0;
    // SOC rows: s = (t, x1 - a1, x2 - a2)
    A(2, 0) = -1.0;
    A(3, 1) = -1.0;
    A(4, 2) = -1.0;
    VectorXd b(5);
    b << 4.0, 6.0, 0.0, -1.0, -2.0;
    auto prog = make_program(c, A, b,
                             {{ConeBlockType::Zero, 2}, {ConeBlockType::SecondOrder, 3}});
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(sol.s[2] == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("primal infeasibility certificate") {
    // x >= 1 and x <= 0 simultaneously.
    VectorXd c(1);
    c << 0.0;
    MatrixXd A(2, 1);
    A << -1.0, 1.0;
    VectorXd b(2);
    b << -1.0, 0.0;
    auto prog = make_program(c, A, b, {{ConeBlockType::NonNegative, 2}});
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::PrimalInfeasible);
    // Certificate: y in K*, A'y ~ 0, b'y = -1.
    CHECK(sol.y.minCoeff() >= -1e-9);
    CHECK(std::abs(prog.b.dot(sol.y) + 1.0) <= 1e-6);
    CHECK((prog.A.transpose() * sol.y).norm() <= 1e-6 * std::max(1.0, sol.y.norm()));
}

TEST_CASE("dual infeasibility certificate (unbounded primal)") {
    // min -x  s.t.  x >= 0 is unbounded below.
    VectorXd c(1);
    c << -1.0;
    MatrixXd A(1, 1);
    A << -1.0;
    VectorXd b(1);
    b << 0.0;
    auto prog = make_program(c, A, b, {{ConeBlockType::NonNegative, 1}});
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::DualInfeasible);
    // Certificate ray: c'x = -1, A x + s ~ 0, s in K.
    CHECK(prog.c.dot(sol.x) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK((prog.A * sol.x + sol.s).norm() <= 1e-6 * std::max(1.0, sol.x.norm()));
    CHECK(in_cone(sol.s, prog.cone, 1e-9));
}

TEST_CASE("equality-only program (no inequality rows)") {
    // min x1  s.t.  x1 + x2 = 2, x1 - x2 = 0  ->  x = (1,1).
    VectorXd c(2);
    c << 1.0, 0.0;
    MatrixXd A(2, 2);
    A << 1.0, 1.0, 1.0, -1.0;
    VectorXd b(2);
    b << 2.0, 0.0;
    auto prog = make_program(c, A, b, {{ConeBlockType::Zero, 2}});
    const auto sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("random LPs against vertex enumeration oracle") {
    std::mt19937 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = 4;
    const int m_rand = 8;
    for (int trial = 0; trial < 25; ++trial) {
        // Random rows plus a +/-10 box so the LP is bounded, all as A x <= b.
        MatrixXd A(m_rand + 2 * n, n);
        VectorXd b(m_rand + 2 * n);
        VectorXd x_anchor(n);
        for (int j = 0; j < n; ++j) x_anchor[j] = 0.5 * gauss(rng);
        for (int i = 0; i < m_rand; ++i) {
            for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
            b[i] = A.row(i).dot(x_anchor) + std::abs(gauss(rng)) + 0.1;
        }
        for (int j = 0; j < n; ++j) {
            A.row(m_rand + 2 * j).setZero();
            A(m_rand + 2 * j, j) = 1.0;
            b[m_rand + 2 * j] = 10.0;
            A.row(m_rand + 2 * j + 1).setZero();
            A(m_rand + 2 * j + 1, j) = -1.0;
            b[m_rand + 2 * j + 1] = 10.0;
        }
        VectorXd c(n);
        for (int j = 0; j < n; ++j) c[j] = gauss(rng);

        const double oracle = lcvx_test::lp_vertex_enumeration(c, A, b);
        REQUIRE(std::isfinite(oracle));

        // Same LP in conic standard form: A x + s = b, s >= 0.
        auto prog = make_program(c, A, b,
                                 {{ConeBlockType::NonNegative, static_cast<int>(A.rows())}});
        const auto sol = solve(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(sol.objective ==
              doctest::Approx(oracle).epsilon(1e-6).scale(std::max(1.0, std::abs(oracle))));
    }
}

TEST_CASE("random feasible SOCPs satisfy solution invariants") {
    std::mt19937 rng(777);
    const std::vector<ConeBlock> blocks = {{ConeBlockType::Zero, 2},
                                           {ConeBlockType::NonNegative, 5},
                                           {ConeBlockType::SecondOrder, 3},
                                           {ConeBlockType::SecondOrder, 4}};
    for (int trial = 0; trial < 25; ++trial) {
        auto [prog, x0] = lcvx_test::random_feasible_program(rng, 6, blocks);
        const auto sol = solve(prog);
        REQUIRE(sol.status == SolveStatus::Optimal);
        // Invariants as documented on ConicSolution.
        CHECK(sol.primal_res <= 1e-8);
        CHECK(sol.dual_res <= 1e-8);
        CHECK(sol.duality_gap <= 1e-8);
        // Reported residuals match an independent recomputation.
        const auto res = residuals(prog, sol.x, sol.y, sol.s);
        CHECK(res.primal_res == doctest::Approx(sol.primal_res).epsilon(1e-12));
        CHECK(res.dual_res == doctest::Approx(sol.dual_res).epsilon(1e-12));
        CHECK(res.gap == doctest::Approx(sol.duality_gap).epsilon(1e-12));
        // Cone memberships.
        CHECK(in_cone(sol.s, prog.cone, 1e-7));
        // Weak duality: primal objective >= dual objective.
        const double pobj = prog.c.dot(sol.x);
        const double dobj = -prog.b.dot(sol.y);
        CHECK(pobj - dobj >= -1e-6 * (1.0 + std::abs(pobj)));
        // x0 is feasible, so the optimum cannot exceed the objective at x0.
        CHECK(pobj <= prog.c.dot(x0) + 1e-6 * (1.0 + std::abs(pobj)));
    }
}

TEST_CASE("solver is deterministic") {
    std::mt19937 rng(4242);
    const std::vector<ConeBlock> blocks = {{ConeBlockType::NonNegative, 4},
                                           {ConeBlockType::SecondOrder, 3}};
    auto [prog, x0] = lcvx_test::random_feasible_program(rng, 5, blocks);
    const auto a = solve(prog);
    const auto b = solve(prog);
    REQUIRE(a.status == b.status);
    CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.y - b.y).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("malformed programs are rejected") {
    VectorXd c(2);
    c << 1.0, 1.0;
    MatrixXd A(2, 2);
    A.setIdentity();
    VectorXd b(2);
    b << 1.0, 1.0;
    auto prog = make_program(c, A, b, {{ConeBlockType::NonNegative, 3}}); // dim mismatch
    CHECK_THROWS_AS(solve(prog), std::invalid_argument);
}

} // TEST_SUITE
