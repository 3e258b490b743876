// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "test_helpers.hpp"

#include <limits>

namespace lcvx_test {

double lp_vertex_enumeration(const VectorXd& c, const MatrixXd& A, const VectorXd& b) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    double best = std::numeric_limits<double>::infinity();

    std::vector<int> pick(n);
    // Iterate over all n-combinations of {0..m-1} in lexicographic order.
    for (int i = 0; i < n; ++i) pick[i] = i;
    if (n > m) return best;
    while (true) {
        MatrixXd Aact(n, n);
        VectorXd bact(n);
        for (int i = 0; i < n; ++i) {
            Aact.row(i) = A.row(pick[i]);
            bact[i] = b[pick[i]];
        }
        Eigen::FullPivLU<MatrixXd> lu(Aact);
        if (lu.isInvertible()) {
            const VectorXd x = lu.solve(bact);
            // Feasible vertex? (inequalities are A x <= b)
            if (((A * x).array() <= b.array() + 1e-9).all())
                best = std::min(best, c.dot(x));
        }
        // Next combination.
        int i = n - 1;
        while (i >= 0 && pick[i] == m - n + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

} // namespace lcvx_test
