// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "lcvx/conditions.hpp"

#include "lcvx/cone_program.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcvx {

namespace {

constexpr double kRankTol = 1e-10;

// Orthonormal basis of the column space of X (n x 0 result for rank 0).
Eigen::MatrixXd column_space(const Eigen::MatrixXd& X) {
    if (X.cols() == 0) return Eigen::MatrixXd(X.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? kRankTol * sv(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    return svd.matrixU().leftCols(rank);
}

// Orthonormal basis of the kernel of F ((cols x 0) for full column rank).
Eigen::MatrixXd kernel_space(const Eigen::MatrixXd& F) {
    if (F.rows() == 0) return Eigen::MatrixXd::Identity(F.cols(), F.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? kRankTol * sv(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    return svd.matrixV().rightCols(F.cols() - rank);
}

// Exact projection magnitude by enumerating candidate active facet sets.
// Each subset S yields the least-squares projection onto {C_S z = 0}; the
// cone projection is the feasible candidate closest to y (its own active
// set is always among the subsets).
double project_by_enumeration(const Eigen::VectorXd& y, const Eigen::MatrixXd& C) {
    const int p = static_cast<int>(C.rows());
    const int m = static_cast<int>(y.size());
    const double feas_tol = 1e-10 * (1.0 + y.norm());
    double best_dist = std::numeric_limits<double>::infinity();
    double best_norm = 0.0;
    for (unsigned mask = 0; mask < (1u << p); ++mask) {
        Eigen::VectorXd z;
        const int q = __builtin_popcount(mask);
        if (q == 0) {
            z = y;
        } else {
            Eigen::MatrixXd Cs(q, m);
            int at = 0;
            for (int r = 0; r < p; ++r)
                if (mask & (1u << r)) Cs.row(at++) = C.row(r);
            z = y - Cs.transpose() *
                        (Cs * Cs.transpose()).fullPivLu().solve(Cs * y);
        }
        if ((C * z).maxCoeff() > feas_tol) continue;
        const double dist = (y - z).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best_norm = z.norm();
        }
    }
    return best_norm;
}

// Projection via the interior-point solver for cones with many facets:
// minimize t subject to ||y - z|| <= t, C z <= 0.
double project_by_socp(const Eigen::VectorXd& y, const Eigen::MatrixXd& C) {
    const int p = static_cast<int>(C.rows());
    const int m = static_cast<int>(y.size());
    ConicProgram prog;
    prog.c = Eigen::VectorXd::Zero(m + 1);
    prog.c(m) = 1.0;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b(p + 1 + m);
    for (int r = 0; r < p; ++r) { // s = -C z >= 0
        for (int j = 0; j < m; ++j)
            if (C(r, j) != 0.0) trip.emplace_back(r, j, C(r, j));
        b(r) = 0.0;
    }
    trip.emplace_back(p, m, -1.0); // s0 = t
    b(p) = 0.0;
    for (int j = 0; j < m; ++j) { // s_j = y_j - z_j
        trip.emplace_back(p + 1 + j, j, 1.0);
        b(p + 1 + j) = y(j);
    }
    prog.A.resize(p + 1 + m, m + 1);
    prog.A.setFromTriplets(trip.begin(), trip.end());
    prog.b = b;
    prog.cone.blocks = {{ConeBlockType::NonNegative, p}, {ConeBlockType::SecondOrder, 1 + m}};
    const auto cs = solve(prog);
    if (cs.status != SolveStatus::Optimal)
        throw std::runtime_error("project_onto_cone: interior-point fallback failed");
    const Eigen::VectorXd z = cs.x.head(m);

    // The distance objective is first-order flat tangentially, so z itself
    // is only sqrt(gap)-accurate.  Polish by re-projecting exactly onto the
    // span of the facets the solver reports active; accept the polished
    // point when it is feasible and not meaningfully farther.
    const double scale = 1.0 + y.norm();
    std::vector<int> active;
    for (int r = 0; r < p; ++r)
        if (C.row(r).dot(z) > -1e-6 * scale) active.push_back(r);
    Eigen::VectorXd polished;
    if (active.empty()) {
        polished = y;
    } else {
        Eigen::MatrixXd Cs(active.size(), m);
        for (size_t i = 0; i < active.size(); ++i) Cs.row(i) = C.row(active[i]);
        polished = y - Cs.transpose() * (Cs * Cs.transpose()).fullPivLu().solve(Cs * y);
    }
    if ((C * polished).maxCoeff() <= 1e-9 * scale &&
        (y - polished).squaredNorm() <= (y - z).squaredNorm() + 1e-6 * scale * scale)
        return polished.norm();
    return z.norm();
}

} // namespace

double project_onto_cone(const Eigen::VectorXd& y, const Eigen::MatrixXd& C) {
    const int m = static_cast<int>(y.size());
    const int p = static_cast<int>(C.rows());
    if (p == 0) return y.norm();
    if (static_cast<int>(C.cols()) != m)
        throw std::invalid_argument("project_onto_cone: C column count must match y");

    // Row normalization leaves the cone unchanged and makes the feasibility
    // tolerance meaningful; zero rows and dependent rows are rank failures.
    Eigen::MatrixXd Cn(p, m);
    for (int r = 0; r < p; ++r) {
        const double nrm = C.row(r).norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw std::invalid_argument("project_onto_cone: cone matrix has a zero or "
                                        "non-finite row");
        Cn.row(r) = C.row(r) / nrm;
    }
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Cn);
        const auto& sv = svd.singularValues();
        if (p > m || sv(sv.size() - 1) <= kRankTol * sv(0))
            throw std::invalid_argument("project_onto_cone: cone matrix is not full row rank");
    }
    return p <= 8 ? project_by_enumeration(y, Cn) : project_by_socp(y, Cn);
}

AdjointTrajectory recover_primer(const TranscribedProblem& tp, const OCPSolution& sol,
                                 const Eigen::MatrixXd& B) {
    const SemiContinuousOCP& p = tp.relaxed.base;
    const int S = tp.N - 1;
    const int n = static_cast<int>(B.rows());
    const int m = static_cast<int>(B.cols());
    const int M = p.num_channels();
    if (sol.costates.rows() != S || sol.costates.cols() != n)
        throw std::invalid_argument(
            "recover_primer: solution carries no dynamics-row duals of the expected shape");
    if (sol.gamma.rows() != S || sol.gamma.cols() != M)
        throw std::invalid_argument("recover_primer: solution activity levels have the wrong "
                                    "shape");

    const double zeta = static_cast<double>(p.cost.zeta);
    auto gains_for = [&](double sign, Eigen::MatrixXd& Y) {
        Eigen::MatrixXd G(S, M);
        Y.resize(S, m);
        for (int k = 0; k < S; ++k) {
            const Eigen::VectorXd yk = B.transpose() * (sign * sol.costates.row(k).transpose());
            Y.row(k) = yk;
            for (int i = 0; i < M; ++i)
                G(k, i) =
                    (project_onto_cone(yk, p.channels[i].cone_matrix) - zeta) * p.channels[i].rho2;
        }
        return G;
    };
    auto agreement = [&](const Eigen::MatrixXd& G) {
        long count = 0;
        for (int k = 0; k < S; ++k) {
            const double gmax = G.row(k).maxCoeff();
            const double tol = 1e-12 * std::max(1.0, std::abs(gmax));
            for (int i = 0; i < M; ++i)
                if (sol.gamma(k, i) >= 0.5 && G(k, i) >= gmax - tol) ++count;
        }
        return count;
    };

    Eigen::MatrixXd y_pos, y_neg;
    const Eigen::MatrixXd g_pos = gains_for(+1.0, y_pos);
    const Eigen::MatrixXd g_neg = gains_for(-1.0, y_neg);

    AdjointTrajectory adj;
    adj.sign = agreement(g_pos) >= agreement(g_neg) ? +1.0 : -1.0;
    adj.lambda = adj.sign * sol.costates;
    adj.y = adj.sign > 0.0 ? y_pos : y_neg;
    adj.gains = adj.sign > 0.0 ? g_pos : g_neg;
    adj.normalization = 0.0;
    for (int k = 0; k < S; ++k)
        adj.normalization = std::max(adj.normalization, adj.y.row(k).norm());
    adj.degenerate = adj.normalization < 1e-12;
    if (adj.degenerate) adj.normalization = 1.0;
    if (!adj.y.allFinite() || !adj.gains.allFinite())
        throw std::invalid_argument("recover_primer: non-finite duals");
    return adj;
}

Eigen::MatrixXd weakly_unobservable_subspace(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                             const Eigen::MatrixXd& C, const Eigen::MatrixXd& D,
                                             std::vector<int>* dims_per_iter) {
    const int n = static_cast<int>(A.rows());
    const int mu = static_cast<int>(B.cols());
    const int p = static_cast<int>(C.rows());
    if (A.cols() != n || B.rows() != n || (p > 0 && C.cols() != n) || D.rows() != p ||
        D.cols() != mu)
        throw std::invalid_argument("weakly_unobservable_subspace: inconsistent dimensions");

    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
    if (dims_per_iter != nullptr) {
        dims_per_iter->clear();
        dims_per_iter->push_back(n);
    }
    for (int iter = 0; iter < n + 1; ++iter) {
        const int d = static_cast<int>(V.cols());
        // Orthonormal basis of the complement of V.
        Eigen::MatrixXd W;
        if (d == 0) {
            W = Eigen::MatrixXd::Identity(n, n);
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeFullU);
            W = svd.matrixU().rightCols(n - d);
        }
        // Membership conditions on (x, u): A x + B u orthogonal to the
        // complement of V, and C x + D u = 0.
        const int rows = static_cast<int>(W.cols()) + p;
        Eigen::MatrixXd next;
        if (rows == 0) {
            next = V;
        } else {
            Eigen::MatrixXd F(rows, n + mu);
            F.topLeftCorner(W.cols(), n) = W.transpose() * A;
            F.topRightCorner(W.cols(), mu) = W.transpose() * B;
            if (p > 0) {
                F.bottomLeftCorner(p, n) = C;
                F.bottomRightCorner(p, mu) = D;
            }
            const Eigen::MatrixXd ker = kernel_space(F);
            next = column_space(ker.topRows(n));
        }
        if (dims_per_iter != nullptr) dims_per_iter->push_back(static_cast<int>(next.cols()));
        const bool fixed_point = next.cols() == V.cols();
        V = next;
        if (fixed_point) break;
    }
    return V;
}

Condition1Result check_condition1(const SemiContinuousOCP& problem) {
    const int n = problem.state_dim();
    int count = 0;
    for (const auto& term : problem.cost.running)
        if (term.weight > 0.0) ++count;
    Eigen::MatrixXd directions(n, count);
    int at = 0;
    for (const auto& term : problem.cost.running)
        if (term.weight > 0.0) directions.col(at++) = term.f.a;
    const Eigen::MatrixXd D = column_space(directions);

    const Eigen::MatrixXd V = weakly_unobservable_subspace(
        -problem.A.transpose(), D, problem.B.transpose(),
        Eigen::MatrixXd::Zero(problem.input_dim(), D.cols()));
    Condition1Result result;
    result.subspace_dim = static_cast<int>(V.cols());
    result.holds = result.subspace_dim == 0;
    return result;
}

int Conditions23Result::longest_run() const {
    int longest = 0;
    for (const auto& [first, last] : violated_runs) longest = std::max(longest, last - first + 1);
    return longest;
}

Conditions23Result check_conditions23_posteriori(const AdjointTrajectory& adj, int K,
                                                 double tie_tol) {
    const int S = static_cast<int>(adj.gains.rows());
    const int M = static_cast<int>(adj.gains.cols());
    if (K < 1 || K > M)
        throw std::invalid_argument("check_conditions23_posteriori: budget out of range");

    Conditions23Result result;
    result.stages.resize(S);
    for (int k = 0; k < S; ++k) {
        std::vector<double> sorted(M);
        int k_prime = 0;
        double min_abs = std::numeric_limits<double>::infinity();
        for (int i = 0; i < M; ++i) {
            const double g = adj.gains(k, i);
            sorted[i] = g;
            if (g > tie_tol) ++k_prime;
            min_abs = std::min(min_abs, std::abs(g));
        }
        std::sort(sorted.begin(), sorted.end(), std::greater<double>());
        StageConditions& sc = result.stages[k];
        sc.k_prime = k_prime;
        sc.k_dprime = std::min(K, k_prime);
        sc.cond2 = min_abs > tie_tol || k_prime >= K;
        sc.cond3 = sc.k_dprime == 0 || sc.k_dprime == M ||
                   sorted[sc.k_dprime - 1] - sorted[sc.k_dprime] > tie_tol;
    }
    for (int k = 0; k < S; ++k) {
        if (result.stages[k].cond2 && result.stages[k].cond3) continue;
        const int first = k;
        while (k + 1 < S && !(result.stages[k + 1].cond2 && result.stages[k + 1].cond3)) ++k;
        result.violated_runs.emplace_back(first, k);
    }
    return result;
}

Condition4Result check_condition4_posteriori(const OCPSolution& sol,
                                             const SemiContinuousOCP& problem) {
    const int S = static_cast<int>(sol.sigma.rows());
    Condition4Result result;
    result.min_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < S; ++k) {
        double running = 0.0;
        for (const auto& term : problem.cost.running)
            running += term.weight * std::abs(term.f.a.dot(sol.x.row(k).transpose()) + term.f.b);
        const double value = running +
                             static_cast<double>(problem.cost.zeta) * sol.sigma.row(k).sum() +
                             problem.cost.terminal.time_weight;
        result.min_margin = std::min(result.min_margin, std::abs(value));
    }
    result.holds = result.min_margin > 1e-9;
    return result;
}

ContactSet contact_set(const OCPSolution& sol, const StateConstraintSet& state_set, double tol) {
    ContactSet cs;
    const int N = static_cast<int>(sol.x.rows());
    for (int k = 1; k < N; ++k) {
        bool contact = false;
        for (const auto& atom : state_set.atoms) {
            if (const auto* hs = std::get_if<HalfspaceAtom>(&atom)) {
                if (std::abs(hs->a.dot(sol.x.row(k).transpose()) - hs->c) <= tol) contact = true;
            } else {
                const auto& nc = std::get<NormConeAtom>(atom);
                const double lhs = (nc.P * sol.x.row(k).transpose()).norm();
                const double rhs = nc.q.dot(sol.x.row(k).transpose()) + nc.r;
                if (std::abs(lhs - rhs) <= tol) contact = true;
            }
        }
        if (contact) cs.nodes.push_back(k);
    }
    for (size_t i = 0; i + 1 < cs.nodes.size(); ++i)
        if (cs.nodes[i + 1] - cs.nodes[i] == 1) cs.discrete = false;
    return cs;
}

} // namespace lcvx
