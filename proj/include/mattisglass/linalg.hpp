#pragma once

#include <span>
#include <vector>

namespace mattis {

// Dense D x D symmetric matrix with full row-major storage. D stays <= 4 at
// desk scale, so nothing here is packed or blocked.
class SymMat {
public:
    SymMat() = default;
    explicit SymMat(int dim, double fill = 0.0) : dim_(dim), a_(static_cast<size_t>(dim) * dim, fill) {}

    static SymMat zero(int dim) { return SymMat(dim); }
    static SymMat identity(int dim)
    {
        SymMat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
    static SymMat scalar(double v)
    {
        SymMat m(1);
        m(0, 0) = v;
        return m;
    }

    int dim() const { return dim_; }
    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }

    std::span<const double> data() const { return a_; }
    std::span<double> data() { return a_; }

    SymMat& operator+=(const SymMat& o);
    SymMat& operator-=(const SymMat& o);
    SymMat operator+(const SymMat& o) const;
    SymMat operator-(const SymMat& o) const;
    SymMat operator*(double s) const;

    // Frobenius inner product a.b = sum_ij a_ij b_ij
    double dot(const SymMat& o) const;
    double frobenius() const;

    // rank-one update: += s * v v^T
    void add_outer(std::span<const double> v, double s = 1.0);

private:
    int dim_ = 0;
    std::vector<double> a_;
};

struct SymEigen {
    std::vector<double> values;   // ascending
    std::vector<double> vectors;  // row-major; column j is the eigenvector of values[j]
};

// Cyclic Jacobi diagonalization; plenty for D <= 4.
SymEigen sym_eigen(const SymMat& a);

double min_eigenvalue(const SymMat& a);

// Columns u_j with sum_j u_j u_j^T = a, restricted to eigenvalues above
// rel_tol * max(1, |lambda|_max). Empty for the zero matrix; the column count
// is the rank used to drive Gaussian quadrature over a possibly degenerate
// covariance.
std::vector<std::vector<double>> gaussian_factor(const SymMat& a, double rel_tol = 1e-12);

}  // namespace mattis
