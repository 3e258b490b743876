// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Homogeneous self-dual embedding interior-point method for the standard-form
// cone program
//
//     minimize    c'x
//     subject to  Ax + s = b,   s in K,
//
// where K is a product of zero cones, the nonnegative orthant, and
// second-order cones.  The implementation follows the classic primal-dual
// Mehrotra predictor-corrector scheme with Nesterov-Todd scalings:
//
//   * the program is split internally: zero-cone rows become equality
//     constraints (A_eq x = b_eq), the remaining rows form G x + s = h with
//     s in (orthant x SOC blocks);
//   * Ruiz equilibration (a few sweeps of row/column max-norm balancing)
//     conditions the data, with uniform row scales across each SOC block so
//     the block structure is preserved;
//   * the Newton systems use a quasi-definite KKT matrix
//       [ dI   A'    G'      ]
//       [ A   -dI    0       ]
//       [ G    0   -(V + dI) ]
//     with V the dense per-cone NT scaling block (V = W^2) and d a small
//     static regularization, factorized once symbolically with an AMD
//     ordering and refactorized numerically each iteration; iterative
//     refinement targets the *regularized* matrix so the refinement loop is
//     consistent with the factorization;
//   * convergence, infeasibility certificates, and the reported residuals
//     are all evaluated on the original (unscaled, unsplit) data each
//     iteration, so the invariants documented on ConicSolution hold by
//     construction.
//
// The solver is deterministic: no randomization, no threading.

#include "lcvx/cone_program.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

namespace lcvx {
namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// ---------------------------------------------------------------------------
// Internal constants (algorithm tuning, not user-facing).
// ---------------------------------------------------------------------------
constexpr double kStepMin = 1e-6;    // below this the centering step has stalled
constexpr double kStepMax = 0.999;   // never step exactly to the boundary
constexpr double kSigmaMin = 1e-4;   // clamp for the centering parameter
constexpr double kSigmaMax = 1.0;
constexpr double kSafeguard = 500.0; // divergence guard on the primal residual
constexpr double kLinSysAcc = 1e-14; // target accuracy of refined KKT solves

// Layout of the inequality part: leading orthant of dimension `orthant`,
// followed by the SOC blocks in order.  `soc_offset[k]` is the first row of
// block k within the inequality rows.
struct ConeLayout {
    int orthant = 0;
    std::vector<int> soc_dim;
    std::vector<int> soc_offset;
    int total = 0;
};

// Nesterov-Todd scaling state.  For the orthant, w_lp[i] = sqrt(s_i/z_i) and
// v_lp[i] = s_i/z_i = w_lp[i]^2.  For each SOC block we store eta (the block
// scaling), the scaled point wbar = (a, q) with a^2 - |q|^2 = 1, and the
// scaled variable lambda = W z for the whole inequality part.
struct Scalings {
    VectorXd v_lp;   // W^2 diagonal on the orthant
    VectorXd w_lp;   // W diagonal on the orthant
    std::vector<double> eta;      // per-SOC scaling factor
    std::vector<double> eta_sq;
    std::vector<double> a;        // wbar head
    std::vector<VectorXd> q;      // wbar tail
    VectorXd lambda; // W z, full inequality dimension
};

struct KktRhs {
    VectorXd x; // size n
    VectorXd y; // size p (equalities)
    VectorXd z; // size mi (inequalities)
};

class HsdeSolver {
public:
    HsdeSolver(const ConicProgram& prog, const SolverSettings& settings)
        : prog_(prog), st_(settings) {}

    ConicSolution run();

private:
    // --- setup ---
    void split_rows();
    void equilibrate();
    void build_kkt();

    // --- per-iteration pieces ---
    bool update_scalings(const VectorXd& s, const VectorXd& z);
    void update_kkt_scalings();
    bool factorize();
    // Solve the regularized KKT system with iterative refinement.  `identity_v`
    // selects V = I (used during initialization, before any NT scaling exists).
    void solve_kkt(const KktRhs& rhs, KktRhs& sol) const;

    // --- cone algebra on the inequality layout ---
    void scale(const VectorXd& z, VectorXd& out) const;        // out = W z
    void scale2add(const VectorXd& x, VectorXd& y) const;      // y += V x
    void bring_to_cone(VectorXd& r) const;
    void nudge_interior(VectorXd& r) const;
    void conic_product(const VectorXd& u, const VectorXd& v, VectorXd& w) const;
    void conic_division(const VectorXd& u, const VectorXd& w, VectorXd& v) const;
    double line_search(const VectorXd& lambda, const VectorXd& ds_by_w,
                       const VectorXd& w_times_dz, double tau, double dtau,
                       double kap, double dkap) const;

    // --- original-space checks ---
    void assemble(double over_tau, const VectorXd& xh, const VectorXd& yh,
                  const VectorXd& zh, const VectorXd& sh, VectorXd& x,
                  VectorXd& y, VectorXd& s) const;

    const ConicProgram& prog_;
    SolverSettings st_;

    int n_ = 0;   // variables
    int p_ = 0;   // equality rows (zero cones)
    int mi_ = 0;  // inequality rows (orthant + SOCs)
    ConeLayout lay_;
    std::vector<int> row_of_eq_;  // internal eq row -> original row
    std::vector<int> row_of_in_;  // internal ineq row -> original row

    SpMat Aeq_, G_;        // equilibrated split data
    VectorXd beq_, h_, c_; // equilibrated vectors
    VectorXd dcol_;        // column scales
    VectorXd drow_eq_, drow_in_;

    SpMat kkt_;            // upper triangle, (n+p+mi)^2
    std::vector<double*> v_ptr_;          // orthant diagonal entries of -V - dI
    std::vector<std::vector<double*>> soc_ptr_; // upper-triangle entries per SOC
    std::vector<double*> diag_pos_; // x-block diagonal (positive side)
    std::vector<double*> diag_neg_; // y- and V-block diagonals (negative side)
    Eigen::SimplicialLDLT<SpMat, Eigen::Upper, Eigen::AMDOrdering<int>> ldlt_;
    bool identity_v_ = true; // V = I until the first NT update
    bool boosted_ = false;   // last factorization needed extra regularization

    Scalings sc_;
};

// ---------------------------------------------------------------------------
// Row splitting: zero-cone rows -> equalities, everything else -> G/h with
// the orthant first and SOC blocks after, preserving relative order.
// ---------------------------------------------------------------------------
void HsdeSolver::split_rows() {
    n_ = prog_.num_vars();

    // First pass: count.
    int row = 0;
    for (const ConeBlock& blk : prog_.cone.blocks) {
        switch (blk.type) {
        case ConeBlockType::Zero: p_ += blk.dim; break;
        case ConeBlockType::NonNegative: lay_.orthant += blk.dim; break;
        case ConeBlockType::SecondOrder: lay_.soc_dim.push_back(blk.dim); break;
        }
        row += blk.dim;
    }
    int soc_total = 0;
    for (int d : lay_.soc_dim) {
        lay_.soc_offset.push_back(lay_.orthant + soc_total);
        soc_total += d;
    }
    mi_ = lay_.orthant + soc_total;
    lay_.total = mi_;

    // Second pass: assign internal indices.
    row_of_eq_.resize(p_);
    row_of_in_.resize(mi_);
    std::vector<int> internal_of_row(prog_.num_rows(), -1);
    std::vector<bool> is_eq_row(prog_.num_rows(), false);
    int eq_at = 0, lp_at = 0, soc_block = 0;
    row = 0;
    for (const ConeBlock& blk : prog_.cone.blocks) {
        if (blk.type == ConeBlockType::Zero) {
            for (int i = 0; i < blk.dim; ++i) {
                is_eq_row[row + i] = true;
                internal_of_row[row + i] = eq_at;
                row_of_eq_[eq_at++] = row + i;
            }
        } else if (blk.type == ConeBlockType::NonNegative) {
            for (int i = 0; i < blk.dim; ++i) {
                internal_of_row[row + i] = lp_at;
                row_of_in_[lp_at++] = row + i;
            }
        } else {
            const int off = lay_.soc_offset[soc_block++];
            for (int i = 0; i < blk.dim; ++i) {
                internal_of_row[row + i] = off + i;
                row_of_in_[off + i] = row + i;
            }
        }
        row += blk.dim;
    }

    std::vector<Triplet> ta, tg;
    for (int k = 0; k < prog_.A.outerSize(); ++k) {
        for (SpMat::InnerIterator it(prog_.A, k); it; ++it) {
            const int r = static_cast<int>(it.row());
            if (is_eq_row[r]) {
                ta.emplace_back(internal_of_row[r], static_cast<int>(it.col()), it.value());
            } else {
                tg.emplace_back(internal_of_row[r], static_cast<int>(it.col()), it.value());
            }
        }
    }
    Aeq_.resize(p_, n_);
    Aeq_.setFromTriplets(ta.begin(), ta.end());
    G_.resize(mi_, n_);
    G_.setFromTriplets(tg.begin(), tg.end());
    Aeq_.makeCompressed();
    G_.makeCompressed();

    beq_.resize(p_);
    h_.resize(mi_);
    for (int i = 0; i < p_; ++i) beq_[i] = prog_.b[row_of_eq_[i]];
    for (int i = 0; i < mi_; ++i) h_[i] = prog_.b[row_of_in_[i]];
    c_ = prog_.c;
}

// ---------------------------------------------------------------------------
// Ruiz equilibration.  Each sweep divides rows and columns by the square root
// of their max-abs entry.  SOC rows share one scale per block so W-scaled
// cones remain cones.  Accumulated scales are kept for solution recovery.
// ---------------------------------------------------------------------------
void HsdeSolver::equilibrate() {
    dcol_ = VectorXd::Ones(n_);
    drow_eq_ = VectorXd::Ones(p_);
    drow_in_ = VectorXd::Ones(mi_);

    for (int sweep = 0; sweep < st_.equil_iters; ++sweep) {
        VectorXd rmax_eq = VectorXd::Zero(p_);
        VectorXd rmax_in = VectorXd::Zero(mi_);
        VectorXd cmax = VectorXd::Zero(n_);
        for (int k = 0; k < Aeq_.outerSize(); ++k) {
            for (SpMat::InnerIterator it(Aeq_, k); it; ++it) {
                const double a = std::abs(it.value());
                rmax_eq[it.row()] = std::max(rmax_eq[it.row()], a);
                cmax[it.col()] = std::max(cmax[it.col()], a);
            }
        }
        for (int k = 0; k < G_.outerSize(); ++k) {
            for (SpMat::InnerIterator it(G_, k); it; ++it) {
                const double a = std::abs(it.value());
                rmax_in[it.row()] = std::max(rmax_in[it.row()], a);
                cmax[it.col()] = std::max(cmax[it.col()], a);
            }
        }
        // Uniform scale inside each SOC block.
        for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
            const int off = lay_.soc_offset[b];
            double m = 0.0;
            for (int i = 0; i < lay_.soc_dim[b]; ++i) m = std::max(m, rmax_in[off + i]);
            for (int i = 0; i < lay_.soc_dim[b]; ++i) rmax_in[off + i] = m;
        }
        auto scale_of = [](double m) { return m > 0.0 ? std::sqrt(m) : 1.0; };
        VectorXd sr_eq = rmax_eq.unaryExpr(scale_of);
        VectorXd sr_in = rmax_in.unaryExpr(scale_of);
        VectorXd sc = cmax.unaryExpr(scale_of);

        for (int k = 0; k < Aeq_.outerSize(); ++k)
            for (SpMat::InnerIterator it(Aeq_, k); it; ++it)
                it.valueRef() /= sr_eq[it.row()] * sc[it.col()];
        for (int k = 0; k < G_.outerSize(); ++k)
            for (SpMat::InnerIterator it(G_, k); it; ++it)
                it.valueRef() /= sr_in[it.row()] * sc[it.col()];

        drow_eq_ = drow_eq_.cwiseProduct(sr_eq);
        drow_in_ = drow_in_.cwiseProduct(sr_in);
        dcol_ = dcol_.cwiseProduct(sc);
    }
    beq_ = beq_.cwiseQuotient(drow_eq_);
    h_ = h_.cwiseQuotient(drow_in_);
    c_ = c_.cwiseQuotient(dcol_);
}

// ---------------------------------------------------------------------------
// KKT assembly.  Upper triangle only.  The (3,3) block starts as -(I + dI);
// per-iteration NT updates rewrite the cached value pointers in place, so the
// sparsity pattern (and the symbolic factorization) never changes.
// ---------------------------------------------------------------------------
void HsdeSolver::build_kkt() {
    const int dim = n_ + p_ + mi_;
    const double delta = st_.static_reg;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n_ + p_ + Aeq_.nonZeros() + G_.nonZeros()) + 64);

    for (int j = 0; j < n_; ++j) t.emplace_back(j, j, delta);
    for (int k = 0; k < Aeq_.outerSize(); ++k)
        for (SpMat::InnerIterator it(Aeq_, k); it; ++it)
            t.emplace_back(static_cast<int>(it.col()), n_ + static_cast<int>(it.row()), it.value());
    for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -delta);
    for (int k = 0; k < G_.outerSize(); ++k)
        for (SpMat::InnerIterator it(G_, k); it; ++it)
            t.emplace_back(static_cast<int>(it.col()), n_ + p_ + static_cast<int>(it.row()), it.value());
    // V block: orthant diagonal, then dense upper triangles per SOC.
    for (int i = 0; i < lay_.orthant; ++i) {
        const int d = n_ + p_ + i;
        t.emplace_back(d, d, -1.0 - delta);
    }
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = n_ + p_ + lay_.soc_offset[b];
        for (int r = 0; r < lay_.soc_dim[b]; ++r)
            for (int col = r; col < lay_.soc_dim[b]; ++col)
                t.emplace_back(off + r, off + col, r == col ? -1.0 - delta : 0.0);
    }

    kkt_.resize(dim, dim);
    kkt_.setFromTriplets(t.begin(), t.end());
    kkt_.makeCompressed();

    // Cache pointers into the compressed storage in the exact order the
    // per-iteration update writes them.
    v_ptr_.clear();
    v_ptr_.reserve(lay_.orthant);
    for (int i = 0; i < lay_.orthant; ++i)
        v_ptr_.push_back(&kkt_.coeffRef(n_ + p_ + i, n_ + p_ + i));
    soc_ptr_.assign(lay_.soc_dim.size(), {});
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = n_ + p_ + lay_.soc_offset[b];
        for (int r = 0; r < lay_.soc_dim[b]; ++r)
            for (int col = r; col < lay_.soc_dim[b]; ++col)
                soc_ptr_[b].push_back(&kkt_.coeffRef(off + r, off + col));
    }

    // Diagonal entry pointers by sign, for the regularization-boost retry
    // in factorize().
    diag_pos_.clear();
    diag_neg_.clear();
    for (int j = 0; j < n_; ++j) diag_pos_.push_back(&kkt_.coeffRef(j, j));
    for (int i = 0; i < p_; ++i) diag_neg_.push_back(&kkt_.coeffRef(n_ + i, n_ + i));
    for (int i = 0; i < lay_.orthant; ++i) diag_neg_.push_back(v_ptr_[i]);
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        std::size_t at = 0;
        for (int r = 0; r < lay_.soc_dim[b]; ++r) {
            diag_neg_.push_back(soc_ptr_[b][at]); // first entry of row r is (r, r)
            at += static_cast<std::size_t>(lay_.soc_dim[b] - r);
        }
    }

    ldlt_.analyzePattern(kkt_);
}

// ---------------------------------------------------------------------------
// NT scaling update from strictly feasible (s, z).  Returns false when a
// point has drifted out of the cone interior (numerical breakdown).
// ---------------------------------------------------------------------------
bool HsdeSolver::update_scalings(const VectorXd& s, const VectorXd& z) {
    const int l = lay_.orthant;
    sc_.v_lp.resize(l);
    sc_.w_lp.resize(l);
    for (int i = 0; i < l; ++i) {
        if (s[i] <= 0.0 || z[i] <= 0.0) return false;
        sc_.v_lp[i] = s[i] / z[i];
        sc_.w_lp[i] = std::sqrt(sc_.v_lp[i]);
    }

    const std::size_t nsoc = lay_.soc_dim.size();
    sc_.eta.assign(nsoc, 0.0);
    sc_.eta_sq.assign(nsoc, 0.0);
    sc_.a.assign(nsoc, 0.0);
    sc_.q.assign(nsoc, VectorXd());
    for (std::size_t b = 0; b < nsoc; ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const auto sb = s.segment(off, dim);
        const auto zb = z.segment(off, dim);
        const double sres = sb[0] * sb[0] - sb.tail(dim - 1).squaredNorm();
        const double zres = zb[0] * zb[0] - zb.tail(dim - 1).squaredNorm();
        if (sres <= 0.0 || zres <= 0.0) return false;
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        VectorXd skbar = sb / snorm;
        VectorXd zkbar = zb / znorm;
        sc_.eta_sq[b] = snorm / znorm;
        sc_.eta[b] = std::sqrt(sc_.eta_sq[b]);
        const double gamma = std::sqrt(0.5 * (1.0 + skbar.dot(zkbar)));
        sc_.a[b] = (0.5 / gamma) * (skbar[0] + zkbar[0]);
        sc_.q[b] = (0.5 / gamma) * (skbar.tail(dim - 1) - zkbar.tail(dim - 1));
    }

    identity_v_ = false; // must precede scale(): lambda needs the fresh W
    sc_.lambda.resize(mi_);
    scale(z, sc_.lambda);
    return true;
}

void HsdeSolver::update_kkt_scalings() {
    const double delta = st_.static_reg;
    for (int i = 0; i < lay_.orthant; ++i) *v_ptr_[i] = -sc_.v_lp[i] - delta;
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int dim = lay_.soc_dim[b];
        const double e2 = sc_.eta_sq[b];
        const double a = sc_.a[b];
        const VectorXd& q = sc_.q[b];
        const double w = q.squaredNorm();
        std::size_t at = 0;
        for (int r = 0; r < dim; ++r) {
            for (int col = r; col < dim; ++col) {
                double v;
                if (r == 0 && col == 0) v = e2 * (a * a + w);
                else if (r == 0) v = e2 * 2.0 * a * q[col - 1];
                else v = e2 * (2.0 * q[r - 1] * q[col - 1] + (r == col ? 1.0 : 0.0));
                *soc_ptr_[b][at++] = -v - (r == col ? delta : 0.0);
            }
        }
    }
}

bool HsdeSolver::factorize() {
    ldlt_.factorize(kkt_);
    boosted_ = false;
    if (ldlt_.info() == Eigen::Success) return true;

    // Pivot breakdown: roundoff near the cone boundary can flip a pivot of
    // the quasi-definite system (the LDLT here never pivots).  Refactor
    // with a temporarily boosted regularization; the boosted factor then
    // acts as a preconditioner while solve_kkt's refinement still targets
    // the lightly regularized system.  The matrix values are restored
    // afterwards so later iterations start from the canonical diagonal.
    double applied = 0.0;
    bool ok = false;
    for (double boost = std::max(1e-7, 100.0 * st_.static_reg); boost <= 0.5; boost *= 100.0) {
        const double add = boost - applied;
        applied = boost;
        for (double* d : diag_pos_) *d += add;
        for (double* d : diag_neg_) *d -= add;
        ldlt_.factorize(kkt_);
        if (ldlt_.info() == Eigen::Success) {
            ok = true;
            break;
        }
    }
    for (double* d : diag_pos_) *d -= applied;
    for (double* d : diag_neg_) *d += applied;
    boosted_ = ok;
    return ok;
}

// out = W z on the inequality layout.
void HsdeSolver::scale(const VectorXd& z, VectorXd& out) const {
    const int l = lay_.orthant;
    out.resize(mi_);
    if (identity_v_) { out = z; return; }
    for (int i = 0; i < l; ++i) out[i] = sc_.w_lp[i] * z[i];
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const double a = sc_.a[b];
        const VectorXd& q = sc_.q[b];
        const auto zb = z.segment(off, dim);
        const double zeta = q.dot(zb.tail(dim - 1));
        const double temp = zb[0] + zeta / (1.0 + a);
        out[off] = sc_.eta[b] * (a * zb[0] + zeta);
        out.segment(off + 1, dim - 1) = sc_.eta[b] * (zb.tail(dim - 1) + temp * q);
    }
}

// y += V x with V = W^2 (or V = I before the first NT update).
void HsdeSolver::scale2add(const VectorXd& x, VectorXd& y) const {
    if (identity_v_) { y += x; return; }
    const int l = lay_.orthant;
    for (int i = 0; i < l; ++i) y[i] += sc_.v_lp[i] * x[i];
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const double e2 = sc_.eta_sq[b];
        const double a = sc_.a[b];
        const VectorXd& q = sc_.q[b];
        const auto xb = x.segment(off, dim);
        const double wtx = a * xb[0] + q.dot(xb.tail(dim - 1));
        // V x = eta^2 (2 wbar (wbar'x) - J x), J = diag(1, -I).
        y[off] += e2 * (2.0 * a * wtx - xb[0]);
        y.segment(off + 1, dim - 1) += e2 * (2.0 * wtx * q + xb.tail(dim - 1));
    }
}

// Shift r into the cone interior: r + alpha*(1+margin)*e, alpha from the
// largest violation.
void HsdeSolver::bring_to_cone(VectorXd& r) const {
    double alpha = -0.99;
    for (int i = 0; i < lay_.orthant; ++i) alpha = std::max(alpha, -r[i]);
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const double viol = r.segment(off + 1, dim - 1).norm() - r[off];
        alpha = std::max(alpha, viol);
    }
    const double shift = 1.0 + alpha;
    for (int i = 0; i < lay_.orthant; ++i) r[i] += shift;
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) r[lay_.soc_offset[b]] += shift;
}

// The line search keeps iterates strictly interior in the scaled frame, but
// the unscale round-trip loses O(eps * cond(W)) and can spill a
// boundary-tight block just outside its cone.  Push such blocks back in by
// a relative margin small enough for the next centering step to absorb.
void HsdeSolver::nudge_interior(VectorXd& r) const {
    constexpr double kRel = 1e-12;
    for (int i = 0; i < lay_.orthant; ++i) {
        const double floor = kRel * (1.0 + std::abs(r[i]));
        if (r[i] < floor) r[i] = floor;
    }
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const double tail = r.segment(off + 1, dim - 1).norm();
        const double floor = tail * (1.0 + kRel) + kRel * (1.0 + std::abs(r[off]));
        if (r[off] < floor) r[off] = floor;
    }
}

// Jordan product w = u o v per cone.
void HsdeSolver::conic_product(const VectorXd& u, const VectorXd& v, VectorXd& w) const {
    w.resize(mi_);
    for (int i = 0; i < lay_.orthant; ++i) w[i] = u[i] * v[i];
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const auto ub = u.segment(off, dim);
        const auto vb = v.segment(off, dim);
        w[off] = ub.dot(vb);
        w.segment(off + 1, dim - 1) = ub[0] * vb.tail(dim - 1) + vb[0] * ub.tail(dim - 1);
    }
}

// Jordan division v = u \ w per cone (inverse of conic_product in u).
void HsdeSolver::conic_division(const VectorXd& u, const VectorXd& w, VectorXd& v) const {
    v.resize(mi_);
    for (int i = 0; i < lay_.orthant; ++i) v[i] = w[i] / u[i];
    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const auto ub = u.segment(off, dim);
        const auto wb = w.segment(off, dim);
        const double rho = ub[0] * ub[0] - ub.tail(dim - 1).squaredNorm();
        const double zeta = ub.tail(dim - 1).dot(wb.tail(dim - 1));
        const double temp = (zeta / ub[0] - wb[0]) / rho;
        v[off] = (ub[0] * wb[0] - zeta) / rho;
        v.segment(off + 1, dim - 1) = temp * ub.tail(dim - 1) + wb.tail(dim - 1) / ub[0];
    }
}

// Largest t with lambda + t*ds in K, lambda + t*dz in K (both in the scaled
// frame), tau + t*dtau >= 0 and kap + t*dkap >= 0, clamped to
// [kStepMin, kStepMax].
double HsdeSolver::line_search(const VectorXd& lambda, const VectorXd& ds_by_w,
                               const VectorXd& w_times_dz, double tau, double dtau,
                               double kap, double dkap) const {
    const int l = lay_.orthant;
    double alpha = 10.0;
    if (l > 0) {
        const double rhomin = ds_by_w.head(l).cwiseQuotient(lambda.head(l)).minCoeff();
        const double sigmamin = w_times_dz.head(l).cwiseQuotient(lambda.head(l)).minCoeff();
        const double eps = 1e-13;
        if (-sigmamin > -rhomin)
            alpha = sigmamin < 0.0 ? 1.0 / (-sigmamin) : 1.0 / eps;
        else
            alpha = rhomin < 0.0 ? 1.0 / (-rhomin) : 1.0 / eps;
    }

    const double minus_tau_by_dtau = -tau / dtau;
    const double minus_kap_by_dkap = -kap / dkap;
    if (minus_tau_by_dtau > 0.0 && minus_tau_by_dtau < alpha) alpha = minus_tau_by_dtau;
    if (minus_kap_by_dkap > 0.0 && minus_kap_by_dkap < alpha) alpha = minus_kap_by_dkap;

    for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b) {
        const int off = lay_.soc_offset[b];
        const int dim = lay_.soc_dim[b];
        const auto lk = lambda.segment(off, dim);

        // Spectral bound in the Jordan frame of lambda; the frame uses the
        // hyperbolic inner product <u, v> = u0 v0 - u_tail'v_tail.
        const double lknorm2 = lk[0] * lk[0] - lk.tail(dim - 1).squaredNorm();
        if (lknorm2 <= 0.0) continue;
        const double lknorm = std::sqrt(lknorm2);
        const VectorXd lkbar = lk / lknorm;
        const double lknorminv = 1.0 / lknorm;

        auto max_violation = [&](const auto& dk) {
            const double jdot = lkbar[0] * dk[0] - lkbar.tail(dim - 1).dot(dk.tail(dim - 1));
            const double factor = (jdot + dk[0]) / (lkbar[0] + 1.0);
            const double rho0 = lknorminv * jdot;
            const double rhotail =
                lknorminv *
                (dk.tail(dim - 1) - factor * lkbar.tail(dim - 1)).norm();
            return rhotail - rho0;
        };

        const double conic_step = std::max(
            {0.0, max_violation(ds_by_w.segment(off, dim)), max_violation(w_times_dz.segment(off, dim))});
        if (conic_step != 0.0) alpha = std::min(alpha, 1.0 / conic_step);
    }

    return std::clamp(alpha, kStepMin, kStepMax);
}

// Solve the (regularized) KKT system with iterative refinement.
void HsdeSolver::solve_kkt(const KktRhs& rhs, KktRhs& sol) const {
    const int dim = n_ + p_ + mi_;
    VectorXd full(dim);
    full.head(n_) = rhs.x;
    full.segment(n_, p_) = rhs.y;
    full.tail(mi_) = rhs.z;

    VectorXd u = ldlt_.solve(full);
    const double rhs_norm = full.lpNorm<Eigen::Infinity>();

    // Residual against the regularized matrix; refinement keeps the solve
    // consistent with what was factorized.
    const double delta = st_.static_reg;
    VectorXd err(dim);
    double prev_err = std::numeric_limits<double>::infinity();
    VectorXd best = u;
    // A boosted factor is only a preconditioner for the target system and
    // needs more refinement sweeps to close the gap.
    const int refine_iters = st_.refine_iters + (boosted_ ? 8 : 0);
    for (int it = 0; it < refine_iters; ++it) {
        const auto dx = u.head(n_);
        const auto dy = u.segment(n_, p_);
        const auto dz = u.tail(mi_);
        err.head(n_) = rhs.x - (delta * dx + Aeq_.transpose() * dy + G_.transpose() * dz);
        err.segment(n_, p_) = rhs.y - (Aeq_ * dx - delta * dy);
        VectorXd vz = delta * dz;
        scale2add(dz, vz); // vz = (V + delta I) dz
        err.tail(mi_) = rhs.z - (G_ * dx - vz);

        const double err_norm = err.lpNorm<Eigen::Infinity>();
        if (err_norm < prev_err) {
            best = u;
            prev_err = err_norm;
        }
        if (err_norm <= kLinSysAcc * (1.0 + rhs_norm)) break;
        u = best + ldlt_.solve(err);
    }
    u = best;

    sol.x = u.head(n_);
    sol.y = u.segment(n_, p_);
    sol.z = u.tail(mi_);
}

// Map an equilibrated HSDE iterate back to original variables:
// x = xh ./ dcol / tau, y rows from (yh, zh) ./ drow / tau, s = drow .* sh / tau.
void HsdeSolver::assemble(double over_tau, const VectorXd& xh, const VectorXd& yh,
                          const VectorXd& zh, const VectorXd& sh, VectorXd& x,
                          VectorXd& y, VectorXd& s) const {
    const int m = prog_.num_rows();
    x = (xh.cwiseQuotient(dcol_)) * over_tau;
    y.setZero(m);
    s.setZero(m);
    for (int i = 0; i < p_; ++i) y[row_of_eq_[i]] = yh[i] / drow_eq_[i] * over_tau;
    for (int i = 0; i < mi_; ++i) {
        y[row_of_in_[i]] = zh[i] / drow_in_[i] * over_tau;
        s[row_of_in_[i]] = sh[i] * drow_in_[i] * over_tau;
    }
}

ConicSolution HsdeSolver::run() {
    const auto t0 = std::chrono::steady_clock::now();
    ConicSolution out;
    out.status = SolveStatus::NumericalFailure;

    split_rows();
    equilibrate();
    build_kkt();

    identity_v_ = true;
    if (!factorize()) {
        out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    // ---- initialization: two solves against V = I ----
    // Primal: [0; b; h] -> (x, s0 = bring_to_cone(-dz)).
    KktRhs rhs, sol;
    rhs.x = VectorXd::Zero(n_);
    rhs.y = beq_;
    rhs.z = h_;
    solve_kkt(rhs, sol);
    VectorXd xh = sol.x;
    VectorXd sh = -sol.z;
    if (mi_ > 0) bring_to_cone(sh);

    // Dual: [-c; 0; 0] -> (y, z0 = bring_to_cone(z)).
    KktRhs rhs2, sol2;
    rhs2.x = -c_;
    rhs2.y = VectorXd::Zero(p_);
    rhs2.z = VectorXd::Zero(mi_);
    solve_kkt(rhs2, sol2);
    VectorXd yh = sol2.y;
    VectorXd zh = sol2.z;
    if (mi_ > 0) bring_to_cone(zh);

    double tau = 1.0, kap = 1.0;
    // Barrier degree: orthant contributes 1 per row, each SOC contributes 1,
    // plus 1 for the (tau, kappa) pair.
    const double cone_deg = static_cast<double>(lay_.orthant + lay_.soc_dim.size()) + 1.0;

    // rhs1 is reused for the dtau trick with head -c.
    KktRhs rhs1;
    rhs1.x = -c_;
    rhs1.y = beq_;
    rhs1.z = h_;

    // Best-iterate safeguard (original-space merit).
    struct Best {
        double worst = std::numeric_limits<double>::infinity();
        VectorXd x, y, s;
        double pres = 0, dres = 0, gap = 0, pobj = 0;
        int iter = 0;
    } best;

    VectorXd x_cand, y_cand, s_cand;
    double prev_pres = std::numeric_limits<double>::infinity();
    int iter = 0;
    bool numerical_failure = false;

    VectorXd ws(mi_), wz(mi_), dsaff_by_w(mi_), ds_by_w(mi_), ds_comb(mi_);
    KktRhs dir1, dir_aff, dir_cc, rhs_a, rhs_c;

    for (iter = 0; iter <= st_.max_iters; ++iter) {
        // ---- residuals of the homogeneous embedding (equilibrated frame) ----
        // hrx = -A'y - G'z ; rx = hrx - c*tau
        // hry = A x       ; ry = hry - b*tau
        // hrz = s + G x   ; rz = hrz - h*tau
        VectorXd hrx = VectorXd::Zero(n_);
        if (p_ > 0) hrx.noalias() -= Aeq_.transpose() * yh;
        if (mi_ > 0) hrx.noalias() -= G_.transpose() * zh;
        VectorXd rx = hrx - c_ * tau;
        VectorXd hry = Aeq_ * xh;
        VectorXd ry = hry - beq_ * tau;
        VectorXd hrz = sh + G_ * xh;
        VectorXd rz = hrz - h_ * tau;
        const double cx = c_.dot(xh);
        const double by = p_ > 0 ? beq_.dot(yh) : 0.0;
        const double hz = mi_ > 0 ? h_.dot(zh) : 0.0;
        const double rt = kap + cx + by + hz;
        const double gap_sz = mi_ > 0 ? sh.dot(zh) : 0.0;
        const double mu = (gap_sz + kap * tau) / cone_deg;

        if (!std::isfinite(mu) || tau <= 0.0 || kap < 0.0) {
            numerical_failure = true;
            break;
        }

        // ---- original-space convergence tests ----
        assemble(1.0 / tau, xh, yh, zh, sh, x_cand, y_cand, s_cand);
        const Residuals res = residuals(prog_, x_cand, y_cand, s_cand);
        const double pobj = prog_.c.dot(x_cand);
        if (std::getenv("LCVX_IPM_TRACE") != nullptr) {
            std::fprintf(stderr,
                         "it %3d  pres %9.2e  dres %9.2e  gap %9.2e  tau %9.2e  kap %9.2e  mu %9.2e  pobj % .6e\n",
                         iter, res.primal_res, res.dual_res, res.gap, tau, kap, mu, pobj);
        }
        const double worst = std::max({res.primal_res, res.dual_res, res.gap});
        if (worst < best.worst) {
            best.worst = worst;
            best.x = x_cand;
            best.y = y_cand;
            best.s = s_cand;
            best.pres = res.primal_res;
            best.dres = res.dual_res;
            best.gap = res.gap;
            best.pobj = pobj;
            best.iter = iter;
        }
        if (res.primal_res <= st_.feas_tol && res.dual_res <= st_.feas_tol && res.gap <= st_.gap_tol) {
            out.status = SolveStatus::Optimal;
            out.x = x_cand;
            out.y = y_cand;
            out.s = s_cand;
            out.objective = pobj;
            out.primal_res = res.primal_res;
            out.dual_res = res.dual_res;
            out.duality_gap = res.gap;
            out.iterations = iter;
            out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return out;
        }

        // Primal infeasibility: a dual ray y with A'y ~ 0, b'y < 0.
        {
            VectorXd yray, sdummy, xdummy;
            // Ray uses the homogeneous-residual parts without tau terms.
            assemble(1.0, VectorXd::Zero(n_), yh, zh, VectorXd::Zero(mi_), xdummy, yray, sdummy);
            const double bty = prog_.b.dot(yray);
            if (bty < 0.0) {
                VectorXd ycert = yray / (-bty);
                const double cert_res = (prog_.A.transpose() * ycert).norm();
                if (cert_res <= st_.feas_tol * std::max(1.0, ycert.norm())) {
                    out.status = SolveStatus::PrimalInfeasible;
                    out.x = VectorXd::Zero(n_);
                    out.s = VectorXd::Zero(prog_.num_rows());
                    out.y = ycert;
                    out.objective = std::numeric_limits<double>::infinity();
                    out.primal_res = cert_res;
                    out.dual_res = 0.0;
                    out.duality_gap = 0.0;
                    out.iterations = iter;
                    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    return out;
                }
            }
        }
        // Dual infeasibility: a primal ray x with Ax + s ~ 0, s in K, c'x < 0.
        {
            const double ctx = prog_.c.dot(xh.cwiseQuotient(dcol_));
            if (ctx < 0.0) {
                VectorXd xray, yray, sray;
                assemble(1.0, xh, VectorXd::Zero(p_), VectorXd::Zero(mi_), sh, xray, yray, sray);
                VectorXd xcert = xray / (-ctx);
                VectorXd scert = sray / (-ctx);
                const double cert_res = (prog_.A * xcert + scert).norm();
                if (cert_res <= st_.feas_tol * std::max(1.0, xcert.norm())) {
                    out.status = SolveStatus::DualInfeasible;
                    out.x = xcert;
                    out.s = scert;
                    out.y = VectorXd::Zero(prog_.num_rows());
                    out.objective = -std::numeric_limits<double>::infinity();
                    out.primal_res = cert_res;
                    out.dual_res = 0.0;
                    out.duality_gap = 0.0;
                    out.iterations = iter;
                    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    return out;
                }
            }
        }

        // Divergence / stall safeguards.
        if (iter > 0 && res.primal_res > kSafeguard * prev_pres) break;
        if (gap_sz < 0.0) {
            numerical_failure = true;
            break;
        }
        prev_pres = std::max(res.primal_res, 1e-300);
        if (iter == st_.max_iters) break; // budget exhausted; fall through to best

        // ---- NT scaling update & refactorization ----
        if (mi_ > 0 && !update_scalings(sh, zh)) {
            nudge_interior(sh);
            nudge_interior(zh);
            if (!update_scalings(sh, zh)) {
                numerical_failure = true;
                break;
            }
        }
        update_kkt_scalings();
        if (!factorize()) {
            numerical_failure = true;
            break;
        }

        // First solve: dx1 from [-c; b; h] (the dtau trick).
        solve_kkt(rhs1, dir1);

        // Affine RHS: [rx; -ry; s - rz] -> note s enters W-scaled later.
        rhs_a.x = rx;
        rhs_a.y = -ry;
        rhs_a.z = sh - rz;
        solve_kkt(rhs_a, dir_aff);

        // dtau_aff from the two solves.
        const double dt_denom = kap / tau - (c_.dot(dir1.x) + beq_.dot(dir1.y) + h_.dot(dir1.z));
        double dtau_aff =
            (rt - kap + c_.dot(dir_aff.x) + beq_.dot(dir_aff.y) + h_.dot(dir_aff.z)) / dt_denom;
        // dz_aff += dtau_aff * dz1 etc.
        dir_aff.x += dtau_aff * dir1.x;
        dir_aff.y += dtau_aff * dir1.y;
        dir_aff.z += dtau_aff * dir1.z;

        // ds_aff in the W frame: W^{-1} ds_aff = -W dz_aff - lambda.
        double alpha_aff = 1.0;
        double dkap_aff = 0.0;
        double sigma;
        if (mi_ > 0) {
            scale(dir_aff.z, wz);
            dsaff_by_w = -wz - sc_.lambda;
            dkap_aff = -(kap + kap / tau * dtau_aff);
            alpha_aff = line_search(sc_.lambda, dsaff_by_w, wz, tau, dtau_aff, kap, dkap_aff);
            const double om = 1.0 - alpha_aff;
            sigma = std::clamp(om * om * om, kSigmaMin, kSigmaMax);
        } else {
            dkap_aff = -(kap + kap / tau * dtau_aff);
            if (dtau_aff < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtau_aff);
            if (dkap_aff < 0.0) alpha_aff = std::min(alpha_aff, -kap / dkap_aff);
            alpha_aff = std::min(alpha_aff, 1.0);
            const double om = 1.0 - alpha_aff;
            sigma = std::clamp(om * om * om, kSigmaMin, kSigmaMax);
        }

        // ---- combined (centering + corrector) direction ----
        const double one_minus_sigma = 1.0 - sigma;
        rhs_c.x = one_minus_sigma * rx;
        rhs_c.y = -one_minus_sigma * ry;
        if (mi_ > 0) {
            // ds = lambda o lambda + (W^{-1}ds_aff) o (W dz_aff) - sigma*mu*e
            conic_product(sc_.lambda, sc_.lambda, ds_comb);
            VectorXd corr(mi_);
            conic_product(dsaff_by_w, wz, corr);
            ds_comb += corr;
            for (int i = 0; i < lay_.orthant; ++i) ds_comb[i] -= sigma * mu;
            for (std::size_t b = 0; b < lay_.soc_dim.size(); ++b)
                ds_comb[lay_.soc_offset[b]] -= sigma * mu;
            // rhs z-part = -(1-sigma) rz + W (lambda \ ds)
            VectorXd lam_div(mi_);
            conic_division(sc_.lambda, ds_comb, lam_div);
            scale(lam_div, ws);
            rhs_c.z = -one_minus_sigma * rz + ws;
        } else {
            rhs_c.z.resize(0);
        }
        solve_kkt(rhs_c, dir_cc);

        const double bkap = kap * tau + dkap_aff * dtau_aff - sigma * mu;
        double dtau = (one_minus_sigma * rt - bkap / tau + c_.dot(dir_cc.x) +
                       beq_.dot(dir_cc.y) + h_.dot(dir_cc.z)) /
                      dt_denom;
        dir_cc.x += dtau * dir1.x;
        dir_cc.y += dtau * dir1.y;
        dir_cc.z += dtau * dir1.z;
        const double dkap = -(bkap + kap * dtau) / tau;

        double alpha = 1.0;
        if (mi_ > 0) {
            scale(dir_cc.z, wz);
            // W^{-1} ds = -(lambda \ ds + W dz)
            VectorXd lam_div(mi_);
            conic_division(sc_.lambda, ds_comb, lam_div);
            ds_by_w = -(lam_div + wz);
            alpha = line_search(sc_.lambda, ds_by_w, wz, tau, dtau, kap, dkap);
        } else {
            if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
            if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);
            alpha = std::min(alpha, 1.0);
        }
        alpha *= st_.step_fraction;
        if (alpha <= kStepMin) break; // stalled

        // ---- update iterate ----
        if (mi_ > 0) {
            // ds, dz in the unscaled frame: ds = W (W^{-1}ds), dz already there.
            scale(ds_by_w, ws); // ws = W * (W^{-1} ds) = ds
            sh += alpha * ws;
            zh += alpha * dir_cc.z;
        }
        xh += alpha * dir_cc.x;
        yh += alpha * dir_cc.y;
        tau += alpha * dtau;
        kap += alpha * dkap;
    }

    // ---- non-converged exit: report the best iterate seen ----
    out.x = best.x;
    out.y = best.y;
    out.s = best.s;
    out.objective = best.pobj;
    out.primal_res = best.pres;
    out.dual_res = best.dres;
    out.duality_gap = best.gap;
    out.iterations = iter;
    out.status = numerical_failure ? SolveStatus::NumericalFailure : SolveStatus::MaxIterations;
    if (best.x.size() == 0) { // never assembled anything (immediate failure)
        out.x = VectorXd::Zero(n_);
        out.y = VectorXd::Zero(prog_.num_rows());
        out.s = VectorXd::Zero(prog_.num_rows());
        out.status = SolveStatus::NumericalFailure;
    }
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace

ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings) {
    if (!prog.well_formed())
        throw std::invalid_argument("solve: malformed cone program");
    HsdeSolver solver(prog, settings);
    return solver.run();
}

} // namespace lcvx
