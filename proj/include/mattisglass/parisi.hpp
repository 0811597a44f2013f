#pragma once

#include <span>

#include "mattisglass/model.hpp"
#include "mattisglass/quadrature.hpp"

namespace mattis {

// log sum_tau w_tau exp(y.tau - (1/2) q1.(tau tau^T) + x.h(tau,chi)),
// summed over the finite support of the prior, max-stabilized.
double terminal_condition(std::span<const double> y, int chi_idx, std::span<const double> x,
                          const SymMat& q1, const ModelSpec& spec);

// psi(path; x) by the exact cascade recursion for step paths:
//   A_{k+1}(y)   = terminal condition with q(1) = q_k
//   A_l(y)       = (1/zeta_l) log E_z exp(zeta_l A_{l+1}(y + z)),
//                  z centered Gaussian with covariance q_l - q_{l-1}
//   psi          = -E_chi E_{z0} A_1(z0),  z0 with covariance q_0.
// Gaussian expectations run through the quadrature rule along a factor of the
// increment covariance; rank-deficient increments integrate only over the
// directions with nonzero eigenvalue. No cascade sampling occurs.
double psi_eval(const StepPath& path, std::span<const double> x, const ModelSpec& spec,
                const GaussHermite& quad);

// s -> q(s) + t grad xi(p(s)) as a step path over the merged jump set
StepPath effective_path(const StepPath& q, double t, const Mixture& xi, const StepPath& p);

// P(p, x) = psi(q + t grad xi(p); x) - t * sum_l (zeta_{l+1}-zeta_l) theta(p_l),
// the exact value of psi(q + t grad xi(p); x) - t int_0^1 theta(p(s)) ds for
// step paths.
double parisi_functional(const StepPath& p, std::span<const double> x, const ModelSpec& spec,
                         const GaussHermite& quad);

}  // namespace mattis
