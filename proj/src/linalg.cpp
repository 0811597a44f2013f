#include "mattisglass/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace mattis {

SymMat& SymMat::operator+=(const SymMat& o)
{
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

SymMat& SymMat::operator-=(const SymMat& o)
{
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

SymMat SymMat::operator+(const SymMat& o) const
{
    SymMat r = *this;
    r += o;
    return r;
}

SymMat SymMat::operator-(const SymMat& o) const
{
    SymMat r = *this;
    r -= o;
    return r;
}

SymMat SymMat::operator*(double s) const
{
    SymMat r = *this;
    for (double& v : r.a_) v *= s;
    return r;
}

double SymMat::dot(const SymMat& o) const
{
    double s = 0.0;
    for (size_t i = 0; i < a_.size(); ++i) s += a_[i] * o.a_[i];
    return s;
}

double SymMat::frobenius() const { return std::sqrt(dot(*this)); }

void SymMat::add_outer(std::span<const double> v, double s)
{
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) (*this)(i, j) += s * v[i] * v[j];
}

SymEigen sym_eigen(const SymMat& a)
{
    const int n = a.dim();
    if (n <= 0) throw std::invalid_argument("sym_eigen: empty matrix");

    std::vector<double> m(a.data().begin(), a.data().end());
    std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;

    auto at = [&](std::vector<double>& w, int i, int j) -> double& { return w[static_cast<size_t>(i) * n + j]; };

    if (n == 1) {
        return SymEigen{{m[0]}, {1.0}};
    }

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(m, p, q) * at(m, p, q);
        double scale = 0.0;
        for (int p = 0; p < n; ++p) scale += std::abs(at(m, p, p));
        if (off <= 1e-30 * (1.0 + scale * scale)) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(m, p, q);
                if (apq == 0.0) continue;
                const double app = at(m, p, p), aqq = at(m, q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double mkp = at(m, k, p), mkq = at(m, k, q);
                    at(m, k, p) = c * mkp - s * mkq;
                    at(m, k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = at(m, p, k), mqk = at(m, q, k);
                    at(m, p, k) = c * mpk - s * mqk;
                    at(m, q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = at(v, k, p), vkq = at(v, k, q);
                    at(v, k, p) = c * vkp - s * vkq;
                    at(v, k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    // sort ascending, permuting eigenvector columns alongside
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (at(m, order[j], order[j]) < at(m, order[i], order[i])) std::swap(order[i], order[j]);

    SymEigen out;
    out.values.resize(n);
    out.vectors.assign(static_cast<size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j) {
        out.values[j] = at(m, order[j], order[j]);
        for (int i = 0; i < n; ++i) out.vectors[static_cast<size_t>(i) * n + j] = at(v, i, order[j]);
    }
    return out;
}

double min_eigenvalue(const SymMat& a)
{
    if (a.dim() == 1) return a(0, 0);
    return sym_eigen(a).values.front();
}

std::vector<std::vector<double>> gaussian_factor(const SymMat& a, double rel_tol)
{
    const int n = a.dim();
    SymEigen e = sym_eigen(a);
    double lmax = 0.0;
    for (double l : e.values) lmax = std::max(lmax, std::abs(l));
    const double cut = rel_tol * std::max(1.0, lmax);

    std::vector<std::vector<double>> cols;
    for (int j = 0; j < n; ++j) {
        if (e.values[j] <= cut) continue;
        const double r = std::sqrt(e.values[j]);
        std::vector<double> u(n);
        for (int i = 0; i < n; ++i) u[i] = r * e.vectors[static_cast<size_t>(i) * n + j];
        cols.push_back(std::move(u));
    }
    return cols;
}

}  // namespace mattis
