#pragma once

#include <functional>
#include <vector>

namespace nslab {

using Vec = std::vector<double>;
using LinearOp = std::function<Vec(const Vec&)>;

struct GmresResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Right-preconditioned restarted GMRES: solves A x = b, x holds the initial guess.
GmresResult gmres(const LinearOp& A, const LinearOp& M_inv, const Vec& b, Vec& x, double tol, int max_iter,
                  int restart = 40);

}  // namespace nslab
