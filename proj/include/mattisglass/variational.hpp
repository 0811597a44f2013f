#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mattisglass/model.hpp"
#include "mattisglass/parisi.hpp"
#include "mattisglass/rate_table.hpp"
#include "mattisglass/rng.hpp"

namespace mattis {

// Free parameters for a k-level monotone step path. Layout:
//   raw[0..k-1]        jump locations through a chained logistic map, so the
//                      decoded zetas are strictly increasing in (0,1)
//   raw[k..]           k+1 lower-triangular factors A_l, D(D+1)/2 reals each;
//                      increments are q_l - q_{l-1} = A_l A_l^T
// If |q_k|_F exceeds q_cap the whole path is scaled back onto the cap.
struct PathParameterization {
    int levels = 0;  // k
    int dim = 1;
    double q_cap = 8.0;

    int factor_size() const { return dim * (dim + 1) / 2; }
    int param_count() const { return levels + (levels + 1) * factor_size(); }

    StepPath decode(std::span<const double> raw) const;

    std::vector<double> zero_start() const;
    std::vector<double> constant_start(double level_value) const;
    std::vector<double> random_start(RngStream& rng) const;
    // lift k-1 level parameters into this parameterization without changing
    // the decoded path (appends a duplicated-value jump)
    std::vector<double> embed(std::span<const double> raw_km1) const;
};

struct PhiOptions {
    int k = 1;
    int quad_nodes = 32;
    double q_cap = 8.0;
    std::uint64_t seed = 1;
    double nm_step = 0.35;
    double nm_ftol = 1e-11;
    int nm_max_evals = 0;  // 0: 150 per free parameter + 60
};

struct PhiResult {
    double value = 0.0;
    StepPath path;
    int k_used = 0;                             // level count of the winning path
    std::vector<std::vector<double>> raw_by_k;  // best raw params per level count 0..k
    std::vector<double> value_by_k;
};

// phi(x) lower bound: maximizes the Parisi functional over the k-level path
// family by multi-start Nelder-Mead (zero path, constant paths at 3 levels,
// random, plus optional warm hints). Sweeps level counts 0..k and keeps the
// envelope, so the reported value is non-decreasing in k by construction.
PhiResult phi_of_x(const ModelSpec& spec, std::span<const double> x, const PhiOptions& opts,
                   const PhiResult* warm_hint = nullptr);

// Memoizing phi evaluator; nearest cached argmax paths seed later
// optimizations. The cache mutates on eval, so keep one instance per worker.
class PhiEvaluator {
public:
    PhiEvaluator(const ModelSpec& spec, PhiOptions opts);

    const PhiResult& eval(std::span<const double> x);
    double value(std::span<const double> x) { return eval(x).value; }
    double value1(double x) { return value(std::span<const double>(&x, 1)); }
    double operator()(std::span<const double> x) { return value(x); }

    const ModelSpec& spec() const { return spec_; }
    const PhiOptions& options() const { return opts_; }
    size_t cache_size() const { return entries_.size(); }

private:
    const ModelSpec& spec_;
    PhiOptions opts_;
    struct Entry {
        std::vector<double> x;
        PhiResult result;
    };
    std::deque<Entry> entries_;  // deque: cached references stay valid as it grows
};

struct DualOptions {
    double x_box = 4.0;            // initial half-width of the x search box
    int x_points = 257;            // grid points per x dimension
    double x_box_cap_factor = 64;  // hard cap X_max = factor * (1 + |m|)
    double golden_xtol = 1e-4;
    double golden_vtol = 1e-7;
    int max_grid_points = 200000;
};

struct DualResult {
    double value = 0.0;
    std::vector<double> argmax_x;
    bool boundary_limited = false;
};

// phi*(m) = sup_x { x.m + phi(x) }: grid sup refined by golden section along
// the top candidate's axes; the box doubles while the argmax sits on the
// boundary, up to the cap (flagged). Returns +inf outside |m|_inf <= h_bound.
DualResult legendre_dual(const std::function<double(std::span<const double>)>& phi, int dim,
                         std::span<const double> m, double h_bound, const DualOptions& opts);

// phi*(m) over an m-grid, plus phi(0) (used by the Fenchel identity check)
struct ConjugateTable {
    int dim = 1;
    std::vector<std::vector<double>> m_points;
    std::vector<double> values;
    std::vector<char> boundary_limited;
    double phi_at_zero = 0.0;
    bool any_boundary_limited = false;
    nlohmann::json metadata;
};

std::vector<std::vector<double>> uniform_grid(int dim, double lo, double hi, int points_per_dim);

ConjugateTable build_conjugate(PhiEvaluator& phi, const std::vector<std::vector<double>>& m_points,
                               const DualOptions& opts);

// I^G(m) = -G(m) + phi*(m) + sup_grid { G - phi* }; the sup constant is
// locally golden-refined when a refiner for off-grid phi* is supplied.
// Ties in the argmax break toward the smallest index.
RateFunctionTable rate_function_ig(const ConjugateTable& conj,
                                   const std::function<double(std::span<const double>)>& g_of_m,
                                   const std::function<double(std::span<const double>)>* phistar_refiner = nullptr);

// J for the concrete +/-1 model: requires D = d = L = 1, xi(a) = a^2, the
// uniform +/-1 prior, Rademacher chi, h = tau*chi, G(m) = m^2 and q = 0.
RateFunctionTable rate_function_j_basic(const ConjugateTable& conj, const ModelSpec& spec);
void require_basic_model(const ModelSpec& spec);

enum class LimitMethod { reduced, infsup };

struct LimitFreeEnergy {
    double value = 0.0;
    std::vector<double> argmin_m;
    bool boundary_limited = false;
};

// lim F_N^G: reduced form inf_m { phi*(m) - G(m) } over the conjugate grid
// with local refinement, or the literal inf-sup with the x-supremum nested
// inside the m-search.
LimitFreeEnergy limit_free_energy(PhiEvaluator& phi, const ConjugateTable& conj,
                                  const std::function<double(std::span<const double>)>& g_of_m,
                                  LimitMethod method, const DualOptions& opts);

struct PhiPropertyReport {
    double lipschitz_bound = 0.0;     // L_h
    double lipschitz_max_ratio = 0.0;
    double min_midpoint_defect = 0.0;  // phi(mid) - avg(phi(ends)); concavity wants >= 0
    std::vector<double> quotient_gaps;   // max |fwd - bwd| difference quotient per step level
    std::vector<double> quotient_ratios; // successive gap ratios (differentiability proxy)
    int pairs = 0;
};

// Regularity report for phi: Lipschitz ratio vs L_h, midpoint concavity
// defects, and forward/backward difference-quotient gaps under step halving.
PhiPropertyReport check_phi_properties(PhiEvaluator& phi, int n_pairs, double box,
                                       int n_diff_points, int halvings, std::uint64_t seed);

}  // namespace mattis
