#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mattisglass/expr.hpp"
#include "mattisglass/linalg.hpp"

namespace mattis {

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// eigenvalue slack for PSD checks; optimizer-produced increments carry round-off
inline constexpr double kPsdTol = 1e-10;

enum class MixtureKind { scalar_mixture, quadratic_matrix };

// Covariance mixture from a fixed catalog with closed-form gradients:
//   scalar-mixture  (D = 1):  xi(a) = sum_p beta_p^2 a^p
//   quadratic-matrix (D >= 1): xi(a) = beta^2 |a|^2
// Both are convex on S^D_+ with xi(0) = 0 by construction.
class Mixture {
public:
    static Mixture scalar(std::vector<double> betas);
    static Mixture quadratic(int dim, double beta);

    MixtureKind kind() const { return kind_; }
    int dim() const { return dim_; }
    std::span<const double> betas() const { return betas_; }

    double value(const SymMat& a) const;
    SymMat grad(const SymMat& a) const;
    // theta(a) = a . grad xi(a) - xi(a)
    double theta(const SymMat& a) const;

    int max_order() const;  // largest p with beta_p > 0 (2 for quadratic-matrix)

private:
    MixtureKind kind_ = MixtureKind::scalar_mixture;
    int dim_ = 1;
    std::vector<double> betas_;  // betas_[p-1] = beta_p; single entry for quadratic-matrix
};

struct SpinPrior {
    int dim = 1;
    std::vector<std::vector<double>> support;  // vectors in the unit ball of R^D
    std::vector<double> weights;               // strictly positive, not necessarily normalized
    double mass() const;
};

struct DisorderLaw {
    int dim = 1;
    std::vector<std::vector<double>> support;  // vectors in R^L
    std::vector<double> probs;                 // nonnegative, sum to 1
};

// h : R^D x R^L -> R^d, one expression per component in tau_1..tau_D,
// chi_1..chi_L (tau1/chi1 spellings are accepted aliases)
struct SpinMap {
    int out_dim = 1;
    std::vector<Expression> components;
    void eval(std::span<const double> tau, std::span<const double> chi, std::span<double> out) const;
};

// Monotone cadlag step path [0,1) -> S^D_+ with finitely many jumps.
// q(s) = value(l) on [zeta_l, zeta_{l+1}) with zeta_0 = 0, zeta_{k+1} = 1,
// and q(1) = value(k).
class StepPath {
public:
    StepPath() = default;
    StepPath(int dim, std::vector<double> zetas, std::vector<SymMat> values);

    static StepPath zero(int dim) { return constant(SymMat::zero(dim)); }
    static StepPath constant(SymMat v) { return StepPath(v.dim(), {}, {std::move(v)}); }

    int dim() const { return dim_; }
    int jump_count() const { return static_cast<int>(zetas_.size()); }
    double zeta(int l) const { return zetas_[static_cast<size_t>(l) - 1]; }  // l = 1..k
    const SymMat& value(int l) const { return values_[static_cast<size_t>(l)]; }  // l = 0..k
    const std::vector<double>& zetas() const { return zetas_; }
    const std::vector<SymMat>& values() const { return values_; }

    // step-function evaluation, left-closed convention; s = 1 returns value(k)
    SymMat at(double s) const;

    // q_0 PSD, increments PSD, zetas strictly increasing in (0,1)
    void check_monotone(const std::string& context) const;

private:
    int dim_ = 0;
    std::vector<double> zetas_;
    std::vector<SymMat> values_;
};

struct ModelSpec {
    int spin_dim = 1;  // D
    int mag_dim = 1;   // d
    int chi_dim = 1;   // L

    Mixture xi;
    SpinPrior prior;
    DisorderLaw chi_law;
    SpinMap h;
    Expression mattis_g;  // in m_1..m_d (m1.. accepted)
    double t = 0.0;
    StepPath q;  // base external-field path

    // derived by validate_spec
    bool validated = false;
    double h_bound = 0.0;    // L_h = max |h(tau, chi)| over the product support
    double prior_mass = 0.0;

    // h values on the product support, cached at validation:
    // h_table[chi_idx][prior_idx] is a d-vector
    std::vector<std::vector<std::vector<double>>> h_table;

    std::span<const double> h_at(int prior_idx, int chi_idx) const
    {
        return h_table[static_cast<size_t>(chi_idx)][static_cast<size_t>(prior_idx)];
    }
};

// Checks every structural invariant and fills the derived fields; throws
// SpecError naming the violated invariant otherwise.
ModelSpec validate_spec(ModelSpec spec);

std::vector<std::string> h_variable_names(int spin_dim, int chi_dim);
std::vector<std::string> g_variable_names(int mag_dim);

}  // namespace mattis
