// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "lcvx/ocp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lcvx {
namespace {

bool finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

int numerical_row_rank(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * sv[0];
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    return rank;
}

} // namespace

std::string ValidationReport::to_string() const {
    if (issues.empty()) return "ok";
    std::ostringstream os;
    for (const auto& issue : issues) {
        if (issue.channel >= 0) os << "channel " << issue.channel << ": ";
        os << issue.what << "\n";
    }
    return os.str();
}

ValidationReport validate(const SemiContinuousOCP& p) {
    ValidationReport rep;
    auto flag = [&rep](std::string what, int channel = -1) {
        rep.issues.push_back({std::move(what), channel});
    };

    const int n = p.state_dim();
    const int m = p.input_dim();

    if (p.A.rows() != p.A.cols()) flag("dynamics matrix A must be square");
    if (p.B.rows() != n) flag("input map B must have one row per state");
    if (p.w.size() != n) flag("exogenous input w must have one entry per state");
    if (p.x0.size() != n) flag("initial state x0 must have one entry per state");
    if (!finite(p.A) || !finite(p.B) || !finite(p.w) || !finite(p.x0))
        flag("dynamics data must be finite");

    if (p.E.size() > 0 || p.e_target.size() > 0) {
        if (p.E.cols() != n) flag("terminal map E must have one column per state");
        if (p.e_target.size() != p.E.rows())
            flag("terminal target size must match the rows of E");
        if (!finite(p.E) || !finite(p.e_target)) flag("terminal manifold data must be finite");
    } else {
        flag("terminal manifold must be specified (E and target)");
    }

    if (p.channels.empty()) flag("at least one input channel is required");
    if (p.K < 1 || p.K > p.num_channels())
        flag("active-channel budget K must satisfy 1 <= K <= number of channels");

    for (int i = 0; i < p.num_channels(); ++i) {
        const auto& ch = p.channels[i];
        if (!(ch.rho1 > 0.0) || !std::isfinite(ch.rho1) || !std::isfinite(ch.rho2))
            flag("norm lower bound rho1 must be positive and finite", i);
        if (!(ch.rho1 < ch.rho2))
            flag("norm bounds must be distinct with rho1 < rho2", i);
        if (ch.cone_matrix.size() > 0) {
            if (ch.cone_matrix.cols() != m)
                flag("pointing cone matrix must have one column per input", i);
            else if (!finite(ch.cone_matrix))
                flag("pointing cone matrix must be finite", i);
            else if (numerical_row_rank(ch.cone_matrix) <
                     static_cast<int>(ch.cone_matrix.rows()))
                flag("pointing cone matrix must have full row rank", i);
        }
    }

    for (std::size_t j = 0; j < p.state_set.atoms.size(); ++j) {
        const auto& atom = p.state_set.atoms[j];
        const std::string where = "state atom " + std::to_string(j);
        if (const auto* hs = std::get_if<HalfspaceAtom>(&atom)) {
            if (hs->a.size() != n) flag(where + ": halfspace normal must match state dim");
            else if (!finite(hs->a) || !std::isfinite(hs->c)) flag(where + ": must be finite");
        } else {
            const auto& nc = std::get<NormConeAtom>(atom);
            if (nc.P.cols() != n) flag(where + ": norm-cone P must have one column per state");
            if (nc.q.size() != n) flag(where + ": norm-cone q must match state dim");
            if (!finite(nc.P) || !finite(nc.q) || !std::isfinite(nc.r))
                flag(where + ": must be finite");
        }
    }

    if (p.cost.zeta != 0 && p.cost.zeta != 1) flag("cost toggle zeta must be 0 or 1");
    if (p.cost.terminal.state_weights.size() != 0 && p.cost.terminal.state_weights.size() != n)
        flag("terminal state weights must be empty or match state dim");
    if (!std::isfinite(p.cost.terminal.time_weight) || !std::isfinite(p.cost.terminal.offset) ||
        !finite(p.cost.terminal.state_weights))
        flag("terminal cost must be finite");
    for (std::size_t j = 0; j < p.cost.running.size(); ++j) {
        const auto& term = p.cost.running[j];
        const std::string where = "running cost term " + std::to_string(j);
        if (!(term.weight >= 0.0) || !std::isfinite(term.weight))
            flag(where + ": weight must be nonnegative and finite");
        if (term.f.a.size() != n) flag(where + ": functional must match state dim");
        else if (!finite(term.f.a) || !std::isfinite(term.f.b)) flag(where + ": must be finite");
    }

    return rep;
}

RelaxedOCP relax(const SemiContinuousOCP& problem) {
    const ValidationReport rep = validate(problem);
    if (!rep.ok())
        throw std::invalid_argument("relax: problem fails validation:\n" + rep.to_string());
    return RelaxedOCP{problem};
}

} // namespace lcvx
