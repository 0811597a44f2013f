#include "mattisglass/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mattis {

namespace {

// Symmetric tridiagonal QL with implicit shifts, accumulating the rotations
// so that z stays the matrix of eigenvectors (z starts as identity). Diagonal
// in d, subdiagonal in e (e[n-1] unused).
void tridiag_ql(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z)
{
    const int n = static_cast<int>(d.size());
    auto zat = [&](int i, int j) -> double& { return z[static_cast<size_t>(i) * n + j]; };

    e[static_cast<size_t>(n) - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (++iter > 50) throw std::runtime_error("quadrature: QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                int i = m - 1;
                for (; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = zat(k, i + 1);
                        zat(k, i + 1) = s * zat(k, i) + c * f;
                        zat(k, i) = c * zat(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

GaussHermite::GaussHermite(int n)
{
    if (n < 1) throw std::invalid_argument("quadrature: node count must be >= 1");
    if (n == 1) {
        nodes_ = {0.0};
        weights_ = {1.0};
        return;
    }

    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    // polynomials: zero diagonal, subdiagonal sqrt(i). Eigenvalues are the
    // nodes; squared first eigenvector components are the weights (mu_0 = 1).
    std::vector<double> d(static_cast<size_t>(n), 0.0);
    std::vector<double> e(static_cast<size_t>(n), 0.0);
    for (int i = 1; i < n; ++i) e[static_cast<size_t>(i) - 1] = std::sqrt(static_cast<double>(i));
    std::vector<double> z(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) z[static_cast<size_t>(i) * n + i] = 1.0;

    tridiag_ql(d, e, z);

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (d[static_cast<size_t>(order[j])] < d[static_cast<size_t>(order[i])]) std::swap(order[i], order[j]);

    nodes_.resize(static_cast<size_t>(n));
    weights_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        nodes_[static_cast<size_t>(i)] = d[static_cast<size_t>(order[i])];
        const double z0 = z[static_cast<size_t>(order[i])];
        weights_[static_cast<size_t>(i)] = z0 * z0;
    }

    // enforce the exact +/- symmetry of the rule so odd moments vanish
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (nodes_[static_cast<size_t>(j)] - nodes_[static_cast<size_t>(i)]);
        nodes_[static_cast<size_t>(i)] = -x;
        nodes_[static_cast<size_t>(j)] = x;
        const double w = 0.5 * (weights_[static_cast<size_t>(i)] + weights_[static_cast<size_t>(j)]);
        weights_[static_cast<size_t>(i)] = w;
        weights_[static_cast<size_t>(j)] = w;
    }
    if (n % 2 == 1) nodes_[static_cast<size_t>(n) / 2] = 0.0;

    double wsum = 0.0;
    for (double w : weights_) wsum += w;
    for (double& w : weights_) w /= wsum;
}

}  // namespace mattis
