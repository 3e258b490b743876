// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Branch-and-bound tests.  The oracle is exhaustive enumeration: every full
// assignment of the binaries is solved directly through the same
// transcription pin mechanism, so the B&B result is checked against the true
// mixed-integer optimum, not against itself.

#include "lcvx/micp.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "lcvx/driver.hpp"

#include "doctest.h"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Scalar integrator: drive x from 1 to 0 while staying below 0.5 after the
// first step; inputs have a dead band [0.6, 2.0] when on.
lcvx::SemiContinuousOCP make_scalar_problem() {
    lcvx::SemiContinuousOCP p;
    p.A = MatrixXd::Zero(1, 1);
    p.B = MatrixXd::Ones(1, 1);
    p.w = VectorXd::Zero(1);
    lcvx::InputChannel ch;
    ch.rho1 = 0.6;
    ch.rho2 = 2.0;
    ch.cone_matrix = MatrixXd(0, 1);
    p.channels = {ch};
    p.K = 1;
    p.x0 = VectorXd::Ones(1);
    p.E = MatrixXd::Identity(1, 1);
    p.e_target = VectorXd::Zero(1);
    lcvx::HalfspaceAtom hs;
    hs.a = VectorXd::Ones(1);
    hs.c = 0.5;
    p.state_set.atoms = {hs};
    p.cost.zeta = 1;
    lcvx::RunningCostTerm rt;
    rt.weight = 0.5;
    rt.f.a = VectorXd::Ones(1);
    rt.f.b = -2.0;
    p.cost.running = {rt};
    return p;
}

// Planar double integrator with gravity and two wedge-cone channels under a
// one-active-channel budget; at short horizons the relaxation rounds to a
// strictly worse integer optimum, which forces the search to actually branch.
lcvx::SemiContinuousOCP make_planar_problem() {
    lcvx::SemiContinuousOCP p;
    const int n = 4;
    const int m = 2;
    p.A = MatrixXd::Zero(n, n);
    p.A.topRightCorner(2, 2).setIdentity();
    p.B = MatrixXd::Zero(n, m);
    p.B.bottomRows(2).setIdentity();
    p.w = VectorXd::Zero(n);
    p.w(3) = -1.0;
    lcvx::InputChannel wide;
    wide.rho1 = 1.0;
    wide.rho2 = 3.0;
    wide.cone_matrix = MatrixXd(2, m);
    wide.cone_matrix << -0.5, -0.8, 0.5, -0.8;
    lcvx::InputChannel narrow = wide;
    narrow.rho1 = 2.0;
    narrow.rho2 = 5.0;
    narrow.cone_matrix << -0.1, -0.9, 0.1, -0.9;
    p.channels = {wide, narrow};
    p.K = 1;
    p.x0 = VectorXd(n);
    p.x0 << 10.0, 20.0, -1.0, 0.5;
    p.E = MatrixXd::Identity(n, n);
    p.e_target = VectorXd::Zero(n);
    lcvx::HalfspaceAtom hs;
    hs.a = VectorXd::Zero(n);
    hs.a(2) = 1.0;
    hs.c = 50.0;
    lcvx::NormConeAtom nc;
    nc.P = MatrixXd::Zero(2, n);
    nc.P(0, 0) = 0.2;
    nc.P(1, 1) = 0.2;
    nc.q = VectorXd::Zero(n);
    nc.q(1) = 1.0;
    p.state_set.atoms = {hs, nc};
    p.cost.zeta = 1;
    return p;
}

struct LeafScan {
    int feasible = 0;
    double best_j = std::numeric_limits<double>::infinity();
    unsigned best_mask = 0;
};

// Solves every full binary assignment; requires each leaf to certify one way
// or the other so the scan is a complete oracle.
LeafScan enumerate_leaves(const lcvx::RelaxedOCP& relaxed, int N, double t_f) {
    const int M = relaxed.base.num_channels();
    const int S = N - 1;
    const int B = M * S;
    LeafScan scan;
    for (unsigned mask = 0; mask < (1u << B); ++mask) {
        std::map<std::pair<int, int>, int> pins;
        for (int b = 0; b < B; ++b) pins[{b % M, b / M}] = (mask >> b) & 1u;
        const auto tp = lcvx::transcribe(relaxed, N, t_f, pins);
        const auto cs = lcvx::solve(tp.program);
        REQUIRE((cs.status == lcvx::SolveStatus::Optimal ||
                 cs.status == lcvx::SolveStatus::PrimalInfeasible));
        if (cs.status != lcvx::SolveStatus::Optimal) continue;
        ++scan.feasible;
        const auto sol = lcvx::extract_solution(tp, cs);
        if (sol.J < scan.best_j) {
            scan.best_j = sol.J;
            scan.best_mask = mask;
        }
    }
    return scan;
}

void check_integrality(const lcvx::OCPSolution& sol, const lcvx::SemiContinuousOCP& p) {
    const int S = static_cast<int>(sol.gamma.rows());
    const int M = static_cast<int>(sol.gamma.cols());
    for (int k = 0; k < S; ++k) {
        int active = 0;
        for (int i = 0; i < M; ++i) {
            const double g = sol.gamma(k, i);
            const int r = static_cast<int>(std::lround(g));
            CHECK(std::abs(g - r) <= 1e-4);
            if (r == 1)
                ++active;
            else
                // An off channel may not smuggle input magnitude through its slack.
                CHECK(sol.sigma(k, i) <= 1e-4 * p.channels[static_cast<size_t>(i)].rho2);
        }
        CHECK(active <= p.K);
    }
}

}  // namespace

TEST_SUITE_BEGIN("micp");

TEST_CASE("two-binary instance matches the hand-enumerable optimum") {
    const auto p = make_scalar_problem();
    const auto relaxed = lcvx::relax(p);
    const int N = 3;
    const double t_f = 2.0;

    const auto scan = enumerate_leaves(relaxed, N, t_f);
    // Only (on, on) and (on, off) reach the target under the ceiling: with
    // stage 0 off the state is stuck at 1 > 0.5.  Their costs are
    //   on/on : sigma floors 0.6 + 0.6, running 0.5*(|1-2| + |0.5-2|) = 2.45
    //   on/off: |u_0| = 1 to land immediately, running 0.5*(1 + 2)   = 2.50
    CHECK(scan.feasible == 2);
    CHECK(scan.best_j == doctest::Approx(0.6 + 0.6 + 0.5 * 2.5).epsilon(1e-6));

    const auto res = lcvx::solve_micp(relaxed, N, t_f);
    REQUIRE(res.status == lcvx::MicpStatus::Optimal);
    REQUIRE(res.solution.has_value());
    CHECK(res.solution->J == doctest::Approx(scan.best_j).epsilon(1e-6));
    check_integrality(*res.solution, p);

    // The continuous relaxation splits the activity interval and is strictly
    // cheaper, so the search must have genuinely branched.
    const auto root = lcvx::solve_fixed_tf(relaxed, N, t_f);
    REQUIRE(root.has_value());
    CHECK(root->J < scan.best_j - 0.1);
    CHECK(res.nodes_explored >= 3);
    CHECK(res.nodes_explored <= 7);  // full tree over 2 binaries

    // Bound bookkeeping: proven optimal means bound == incumbent and no gap.
    CHECK(res.gap <= 1e-6 * (1.0 + std::abs(res.solution->J)));
    CHECK(std::abs(res.best_bound - res.solution->J) <=
          1e-6 * (1.0 + std::abs(res.solution->J)));
    CHECK(res.wall_time_s >= 0.0);
}

TEST_CASE("exhaustive oracle where the relaxation is not tight") {
    const auto p = make_planar_problem();
    const auto relaxed = lcvx::relax(p);
    const int N = 4;
    const double t_f = 10.0;

    const auto root = lcvx::solve_fixed_tf(relaxed, N, t_f);
    REQUIRE(root.has_value());
    const auto scan = enumerate_leaves(relaxed, N, t_f);
    REQUIRE(scan.feasible > 0);
    // Genuine integrality gap: rounding the relaxation costs something.
    REQUIRE(scan.best_j > root->J + 0.1);

    const auto res = lcvx::solve_micp(relaxed, N, t_f);
    REQUIRE(res.status == lcvx::MicpStatus::Optimal);
    REQUIRE(res.solution.has_value());
    CHECK(res.solution->J == doctest::Approx(scan.best_j).epsilon(1e-6));
    CHECK(res.solution->J >= root->J - 1e-9);
    check_integrality(*res.solution, p);
    // Pruning must beat both the leaf count and the full binary tree.
    CHECK(res.nodes_explored < 64);

    // Determinism: an identical rerun reproduces the search exactly.
    const auto again = lcvx::solve_micp(relaxed, N, t_f);
    CHECK(again.nodes_explored == res.nodes_explored);
    REQUIRE(again.solution.has_value());
    CHECK(again.solution->J == res.solution->J);
    CHECK((again.solution->gamma - res.solution->gamma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exhaustive oracle where the relaxation is nearly tight") {
    const auto relaxed = lcvx::relax(make_planar_problem());
    const int N = 4;
    const double t_f = 14.0;

    const auto root = lcvx::solve_fixed_tf(relaxed, N, t_f);
    REQUIRE(root.has_value());
    const auto scan = enumerate_leaves(relaxed, N, t_f);
    REQUIRE(scan.feasible > 0);

    const auto res = lcvx::solve_micp(relaxed, N, t_f);
    REQUIRE(res.status == lcvx::MicpStatus::Optimal);
    REQUIRE(res.solution.has_value());
    CHECK(res.solution->J == doctest::Approx(scan.best_j).epsilon(1e-6));
    // Lower-bound sandwich: relax <= micp, and here they nearly touch.
    CHECK(res.solution->J >= root->J - 1e-9);
    CHECK(res.solution->J <= root->J + 0.05 * (1.0 + std::abs(root->J)));
}

TEST_CASE("infeasible instance is certified after the root solve") {
    const auto relaxed = lcvx::relax(make_scalar_problem());
    // The ceiling must be reached by the first node; at t_f = 0.2 even full
    // thrust cannot shed enough state, so the relaxation itself is infeasible.
    const auto res = lcvx::solve_micp(relaxed, 3, 0.2);
    CHECK(res.status == lcvx::MicpStatus::Infeasible);
    CHECK(!res.solution.has_value());
    CHECK(res.nodes_explored == 1);
    CHECK(std::isinf(res.best_bound));
    CHECK(res.best_bound > 0.0);
    CHECK(std::isinf(res.gap));
}

TEST_CASE("node and time caps stop the search and say so") {
    const auto relaxed = lcvx::relax(make_scalar_problem());
    const int N = 3;
    const double t_f = 2.0;

    lcvx::MicpSettings one_node;
    one_node.max_nodes = 1;
    const auto res1 = lcvx::solve_micp(relaxed, N, t_f, one_node);
    CHECK(res1.status == lcvx::MicpStatus::NodeLimit);
    CHECK(res1.nodes_explored == 1);
    // The root relaxation is fractional, so one node cannot yield an incumbent,
    // but its objective has become the children's shared bound.
    CHECK(!res1.solution.has_value());
    const auto root = lcvx::solve_fixed_tf(relaxed, N, t_f);
    REQUIRE(root.has_value());
    CHECK(res1.best_bound == doctest::Approx(root->J).epsilon(1e-9));
    CHECK(std::isinf(res1.gap));

    lcvx::MicpSettings no_nodes;
    no_nodes.max_nodes = 0;
    const auto res0 = lcvx::solve_micp(relaxed, N, t_f, no_nodes);
    CHECK(res0.status == lcvx::MicpStatus::NodeLimit);
    CHECK(res0.nodes_explored == 0);
    CHECK(std::isinf(res0.best_bound));
    CHECK(res0.best_bound < 0.0);

    lcvx::MicpSettings no_time;
    no_time.max_seconds = 0.0;
    const auto rest = lcvx::solve_micp(relaxed, N, t_f, no_time);
    CHECK(rest.status == lcvx::MicpStatus::TimeLimit);
    CHECK(rest.nodes_explored == 0);
    CHECK(!rest.solution.has_value());
}

TEST_CASE("equivalence verdict compares objectives on a shared grid") {
    const auto relaxed = lcvx::relax(make_planar_problem());
    const int N = 4;
    const double t_f = 14.0;

    const auto root = lcvx::solve_fixed_tf(relaxed, N, t_f);
    REQUIRE(root.has_value());
    const auto res = lcvx::solve_micp(relaxed, N, t_f);
    REQUIRE(res.solution.has_value());

    // Identical solutions: zero gap at any tolerance.
    const auto self = lcvx::verify_equivalence(*root, *root, 0.0);
    CHECK(self.equivalent);
    CHECK(self.gap == 0.0);

    // Relaxation vs integer optimum: the gap is exactly the relative
    // objective difference, and the verdict flips across it.
    const auto check = lcvx::verify_equivalence(*root, *res.solution, 1e-3);
    const double expect =
        std::abs(root->J - res.solution->J) / std::max(1.0, std::abs(res.solution->J));
    CHECK(check.gap == doctest::Approx(expect).epsilon(1e-12));
    CHECK(check.equivalent == (expect <= 1e-3));
    CHECK(lcvx::verify_equivalence(*root, *res.solution, 2.0 * expect + 1e-12).equivalent);
    if (expect > 0.0)
        CHECK(!lcvx::verify_equivalence(*root, *res.solution, 0.5 * expect).equivalent);

    // Grid mismatches and bad tolerances are rejected.
    const auto other = lcvx::solve_fixed_tf(relaxed, N + 1, t_f);
    REQUIRE(other.has_value());
    CHECK_THROWS_AS((void)lcvx::verify_equivalence(*root, *other, 1e-3), std::invalid_argument);
    const auto shifted = lcvx::solve_fixed_tf(relaxed, N, t_f + 1.0);
    REQUIRE(shifted.has_value());
    CHECK_THROWS_AS((void)lcvx::verify_equivalence(*root, *shifted, 1e-3),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)lcvx::verify_equivalence(*root, *root, -1.0), std::invalid_argument);
}

TEST_CASE("malformed inputs throw before any search") {
    const auto relaxed = lcvx::relax(make_scalar_problem());

    lcvx::MicpSettings capped;
    capped.max_nodes = 0;  // validation must not hide behind the cap
    CHECK_THROWS_AS((void)lcvx::solve_micp(relaxed, 1, 2.0, capped), std::invalid_argument);
    CHECK_THROWS_AS((void)lcvx::solve_micp(relaxed, 3, -1.0, capped), std::invalid_argument);
    CHECK_THROWS_AS((void)lcvx::solve_micp(relaxed, 3, 0.0, capped), std::invalid_argument);

    lcvx::MicpSettings bad_int;
    bad_int.int_tol = -1.0;
    CHECK_THROWS_AS((void)lcvx::solve_micp(relaxed, 3, 2.0, bad_int), std::invalid_argument);
    lcvx::MicpSettings bad_gap;
    bad_gap.gap_tol = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)lcvx::solve_micp(relaxed, 3, 2.0, bad_gap), std::invalid_argument);
}

TEST_SUITE_END();
