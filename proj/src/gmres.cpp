#include "nslab/gmres.hpp"

#include <cmath>

namespace nslab {

namespace {

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double nrm(const Vec& a) { return std::sqrt(dot(a, a)); }

}  // namespace

GmresResult gmres(const LinearOp& A, const LinearOp& M_inv, const Vec& b, Vec& x, double tol, int max_iter,
                  int restart) {
    GmresResult res;
    const double bnorm = nrm(b);
    if (bnorm == 0.0) {
        x.assign(b.size(), 0.0);
        res.converged = true;
        return res;
    }
    const std::size_t n = b.size();
    while (res.iterations < max_iter) {
        Vec r = A(x);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        double beta = nrm(r);
        res.relative_residual = beta / bnorm;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
        const int m = restart;
        const std::size_t ms = std::size_t(m);
        std::vector<Vec> V(ms + 1), Z(ms);
        std::vector<std::vector<double>> H(ms + 1, std::vector<double>(ms, 0.0));
        std::vector<double> cs(ms), sn(ms), g(ms + 1, 0.0);
        V[0] = r;
        for (auto& v : V[0]) v /= beta;
        g[0] = beta;
        int j = 0;
        for (; j < m && res.iterations < max_iter; ++j) {
            ++res.iterations;
            const std::size_t J = std::size_t(j);
            Z[J] = M_inv(V[J]);
            Vec w = A(Z[J]);
            for (int i = 0; i <= j; ++i) {
                const std::size_t I = std::size_t(i);
                H[I][J] = dot(w, V[I]);
                for (std::size_t k = 0; k < n; ++k) w[k] -= H[I][J] * V[I][k];
            }
            H[J + 1][J] = nrm(w);
            V[J + 1] = w;
            if (H[J + 1][J] > 0)
                for (auto& v : V[J + 1]) v /= H[J + 1][J];
            for (int i = 0; i < j; ++i) {
                const std::size_t I = std::size_t(i);
                const double t = cs[I] * H[I][J] + sn[I] * H[I + 1][J];
                H[I + 1][J] = -sn[I] * H[I][J] + cs[I] * H[I + 1][J];
                H[I][J] = t;
            }
            const double den = std::hypot(H[J][J], H[J + 1][J]);
            cs[J] = H[J][J] / den;
            sn[J] = H[J + 1][J] / den;
            H[J][J] = den;
            H[J + 1][J] = 0.0;
            g[J + 1] = -sn[J] * g[J];
            g[J] = cs[J] * g[J];
            res.relative_residual = std::abs(g[J + 1]) / bnorm;
            if (res.relative_residual <= tol) {
                ++j;
                break;
            }
        }
        // back substitution and update x += Z y
        std::vector<double> y(std::size_t(j), 0.0);
        for (int i = j - 1; i >= 0; --i) {
            const std::size_t I = std::size_t(i);
            double s = g[I];
            for (int k = i + 1; k < j; ++k) s -= H[I][std::size_t(k)] * y[std::size_t(k)];
            y[I] = s / H[I][I];
        }
        for (int i = 0; i < j; ++i)
            for (std::size_t k = 0; k < n; ++k) x[k] += y[std::size_t(i)] * Z[std::size_t(i)][k];
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

}  // namespace nslab
