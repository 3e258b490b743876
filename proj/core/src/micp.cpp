// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "lcvx/micp.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lcvx {

namespace {

struct Node {
    double bound;  // parent's relaxation objective (-inf for the root)
    long seq;      // insertion counter, for deterministic tie-breaking
    std::map<std::pair<int, int>, int> pins;
};

// Min-heap on bound, FIFO among equal bounds.
struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
    }
};

}  // namespace

const char* to_string(MicpStatus status) {
    switch (status) {
        case MicpStatus::Optimal: return "optimal";
        case MicpStatus::NodeLimit: return "node_limit";
        case MicpStatus::TimeLimit: return "time_limit";
        case MicpStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

MicpResult solve_micp(const RelaxedOCP& relaxed, int N, double t_f,
                      const MicpSettings& settings) {
    if (!(settings.int_tol >= 0.0) || !std::isfinite(settings.int_tol) ||
        !(settings.gap_tol >= 0.0) || !std::isfinite(settings.gap_tol))
        throw std::invalid_argument("solve_micp: tolerances must be finite and non-negative");
    // Surfaces problem/N/t_f errors before any search bookkeeping.
    (void)transcribe(relaxed, N, t_f);

    const auto t_start = std::chrono::steady_clock::now();
    const auto elapsed = [&t_start] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    };

    const int M = relaxed.base.num_channels();
    const int S = N - 1;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long seq = 0;
    open.push(Node{-kInf, seq++, {}});

    double incumbent_j = kInf;
    std::optional<OCPSolution> incumbent;
    const auto scale = [&incumbent_j] { return std::max(1.0, std::abs(incumbent_j)); };

    MicpResult out;
    bool capped = false;
    while (!open.empty()) {
        if (elapsed() >= settings.max_seconds) {
            out.status = MicpStatus::TimeLimit;
            capped = true;
            break;
        }
        if (out.nodes_explored >= settings.max_nodes) {
            out.status = MicpStatus::NodeLimit;
            capped = true;
            break;
        }

        Node node = open.top();
        open.pop();
        if (incumbent && node.bound >= incumbent_j - settings.gap_tol * scale()) continue;

        ++out.nodes_explored;
        const TranscribedProblem tp = transcribe(relaxed, N, t_f, node.pins);
        const ConicSolution cs = solve(tp.program, settings.solver);
        if (cs.status == SolveStatus::PrimalInfeasible) continue;
        if (cs.status != SolveStatus::Optimal) {
            std::ostringstream oss;
            oss << "solve_micp: node relaxation with " << node.pins.size()
                << " pinned activity levels ended with status " << to_string(cs.status);
            throw std::runtime_error(oss.str());
        }
        OCPSolution sol = extract_solution(tp, cs);
        if (incumbent && sol.J >= incumbent_j - settings.gap_tol * scale()) continue;

        // Most fractional free activity level; stage-major scan, first wins.
        int branch_k = -1, branch_i = -1;
        double worst = settings.int_tol;
        for (int k = 0; k < S; ++k) {
            for (int i = 0; i < M; ++i) {
                if (node.pins.count({i, k})) continue;
                const double g = sol.gamma(k, i);
                const double frac = std::min(std::abs(g), std::abs(1.0 - g));
                if (frac > worst) {
                    worst = frac;
                    branch_k = k;
                    branch_i = i;
                }
            }
        }

        if (branch_k < 0) {
            // Integral (strictly better than the incumbent, by the prune above).
            incumbent_j = sol.J;
            incumbent = std::move(sol);
            continue;
        }

        std::map<std::pair<int, int>, int> pins_off = node.pins;
        pins_off[{branch_i, branch_k}] = 0;
        std::map<std::pair<int, int>, int> pins_on = std::move(node.pins);
        pins_on[{branch_i, branch_k}] = 1;
        open.push(Node{sol.J, seq++, std::move(pins_off)});
        open.push(Node{sol.J, seq++, std::move(pins_on)});

        if (incumbent && incumbent_j - open.top().bound <= settings.gap_tol * scale()) {
            out.status = MicpStatus::Optimal;
            capped = true;  // the remaining open nodes are within the gap target
            break;
        }
    }

    if (!capped) out.status = incumbent ? MicpStatus::Optimal : MicpStatus::Infeasible;
    if (open.empty())
        out.best_bound = incumbent ? incumbent_j : kInf;
    else
        out.best_bound = std::min(open.top().bound, incumbent ? incumbent_j : kInf);
    out.gap = incumbent ? std::max(0.0, (incumbent_j - out.best_bound) / scale()) : kInf;
    out.solution = std::move(incumbent);
    out.wall_time_s = elapsed();
    return out;
}

EquivalenceCheck verify_equivalence(const OCPSolution& relaxed_sol,
                                    const OCPSolution& micp_sol, double rel_tol) {
    if (!(rel_tol >= 0.0) || !std::isfinite(rel_tol))
        throw std::invalid_argument("verify_equivalence: rel_tol must be finite and non-negative");
    if (relaxed_sol.t.size() != micp_sol.t.size())
        throw std::invalid_argument("verify_equivalence: solutions use different grid sizes");
    if (micp_sol.t.size() > 0) {
        const double t_scale = 1.0 + micp_sol.t.cwiseAbs().maxCoeff();
        if ((relaxed_sol.t - micp_sol.t).cwiseAbs().maxCoeff() > 1e-9 * t_scale)
            throw std::invalid_argument("verify_equivalence: solutions use different node times");
    }

    EquivalenceCheck check;
    check.gap = std::abs(relaxed_sol.J - micp_sol.J) / std::max(1.0, std::abs(micp_sol.J));
    check.equivalent = check.gap <= rel_tol;
    return check;
}

}  // namespace lcvx
