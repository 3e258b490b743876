// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "lcvx/discretization.hpp"

#include <cmath>
#include <stdexcept>

namespace lcvx {
namespace {

using Eigen::MatrixXd;

// Evaluate the degree-m diagonal Pade approximant p(A)/q(A) with
// p = sum b[k] A^k over even/odd split: U holds the odd part, V the even
// part, and exp(A) ~ (V - U)^{-1} (V + U).
MatrixXd pade_solve(const MatrixXd& U, const MatrixXd& V) {
    return (V - U).partialPivLu().solve(V + U);
}

MatrixXd expm_pade3(const MatrixXd& A, const MatrixXd& A2) {
    static const double b[] = {120.0, 60.0, 12.0, 1.0};
    const MatrixXd I = MatrixXd::Identity(A.rows(), A.cols());
    const MatrixXd U = A * (b[3] * A2 + b[1] * I);
    const MatrixXd V = b[2] * A2 + b[0] * I;
    return pade_solve(U, V);
}

MatrixXd expm_pade5(const MatrixXd& A, const MatrixXd& A2, const MatrixXd& A4) {
    static const double b[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
    const MatrixXd I = MatrixXd::Identity(A.rows(), A.cols());
    const MatrixXd U = A * (b[5] * A4 + b[3] * A2 + b[1] * I);
    const MatrixXd V = b[4] * A4 + b[2] * A2 + b[0] * I;
    return pade_solve(U, V);
}

MatrixXd expm_pade7(const MatrixXd& A, const MatrixXd& A2, const MatrixXd& A4,
                    const MatrixXd& A6) {
    static const double b[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                               25200.0,    1512.0,    56.0,      1.0};
    const MatrixXd I = MatrixXd::Identity(A.rows(), A.cols());
    const MatrixXd U = A * (b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    const MatrixXd V = b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    return pade_solve(U, V);
}

MatrixXd expm_pade9(const MatrixXd& A, const MatrixXd& A2, const MatrixXd& A4,
                    const MatrixXd& A6) {
    static const double b[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                               30270240.0,    2162160.0,    110880.0,     3960.0,
                               90.0,          1.0};
    const MatrixXd I = MatrixXd::Identity(A.rows(), A.cols());
    const MatrixXd A8 = A4 * A4;
    const MatrixXd U = A * (b[9] * A8 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    const MatrixXd V = b[8] * A8 + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    return pade_solve(U, V);
}

MatrixXd expm_pade13(const MatrixXd& A, const MatrixXd& A2, const MatrixXd& A4,
                     const MatrixXd& A6) {
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const MatrixXd I = MatrixXd::Identity(A.rows(), A.cols());
    const MatrixXd U =
        A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
             b[1] * I);
    const MatrixXd V =
        A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    return pade_solve(U, V);
}

} // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols()) throw std::invalid_argument("expm: matrix must be square");
    if (!M.allFinite()) throw std::invalid_argument("expm: matrix must be finite");
    if (M.rows() == 0) return M;

    // Degree thresholds on the 1-norm (standard scaling-and-squaring bounds).
    constexpr double theta3 = 1.495585217958292e-2;
    constexpr double theta5 = 2.539398330063230e-1;
    constexpr double theta7 = 9.504178996162932e-1;
    constexpr double theta9 = 2.097847961257068;
    constexpr double theta13 = 5.371920351148152;

    const double norm = M.cwiseAbs().colwise().sum().maxCoeff(); // 1-norm

    if (norm <= theta9) {
        const MatrixXd A2 = M * M;
        if (norm <= theta3) return expm_pade3(M, A2);
        const MatrixXd A4 = A2 * A2;
        if (norm <= theta5) return expm_pade5(M, A2, A4);
        const MatrixXd A6 = A2 * A4;
        if (norm <= theta7) return expm_pade7(M, A2, A4, A6);
        return expm_pade9(M, A2, A4, A6);
    }

    // Scale down by 2^s so the norm falls under theta13, then square back.
    const int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
    const MatrixXd A = M / std::pow(2.0, s);
    const MatrixXd A2 = A * A;
    const MatrixXd A4 = A2 * A2;
    const MatrixXd A6 = A2 * A4;
    MatrixXd E = expm_pade13(A, A2, A4, A6);
    for (int i = 0; i < s; ++i) E = E * E;
    return E;
}

DiscreteDynamics zoh_discretize(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& w, double dt) {
    const auto n = A.rows();
    const auto m = B.cols();
    if (A.rows() != A.cols()) throw std::invalid_argument("zoh_discretize: A must be square");
    if (B.rows() != n) throw std::invalid_argument("zoh_discretize: B row count must match A");
    if (w.size() != n) throw std::invalid_argument("zoh_discretize: w size must match A");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("zoh_discretize: dt must be positive and finite");

    // Augmented generator: one exponential yields state, input, and drift maps.
    //     [ A  B  w ]           [ Ad  Bd  wd ]
    // exp([ 0  0  0 ] dt)  =    [ 0   I   0  ]
    //     [ 0  0  0 ]           [ 0   0   1  ]
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m + 1, n + m + 1);
    aug.topLeftCorner(n, n) = A;
    aug.block(0, n, n, m) = B;
    aug.block(0, n + m, n, 1) = w;
    const Eigen::MatrixXd E = expm(aug * dt);

    DiscreteDynamics d;
    d.Ad = E.topLeftCorner(n, n);
    d.Bd = E.block(0, n, n, m);
    d.wd = E.block(0, n + m, n, 1);
    return d;
}

} // namespace lcvx
