#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mattisglass/model.hpp"

namespace mattis {

// One quenched realization of the Gaussian couplings and chi-variables for a
// finite-N system. Regenerating with the same seed reproduces identical
// entries bit for bit.
//
// scalar-mixture (D = 1):
//   H_N(sigma) = sum_p beta_p N^{-(p-1)/2} sum_{i_1..i_p} g^{(p)}_{i_1..i_p}
//                sigma_{i_1} ... sigma_{i_p}
// quadratic-matrix (D >= 1):
//   H_N(sigma) = beta N^{-1/2} sum_{ij} g_{ij} (sigma_i . sigma_j)
// Both realize E[H(sigma) H(sigma')] = N xi(sigma sigma'^T / N).
struct DisorderSample {
    int n_sites = 0;
    int spin_dim = 1;
    std::uint64_t seed = 0;
    MixtureKind kind = MixtureKind::scalar_mixture;

    std::vector<int> orders;                    // p with beta_p > 0 ({2} for quadratic)
    std::vector<double> order_betas;            // matching beta_p
    std::vector<std::vector<double>> tensors;   // row-major N^p per order (N^2 for quadratic)
    std::vector<int> chi_idx;                   // per-site index into the chi-law support

    void save(const std::string& path) const;
    static DisorderSample load(const std::string& path);
};

// Deterministic in (spec, N, seed). The simulation side requires q = 0 and,
// for D > 1, the quadratic-matrix catalog.
DisorderSample sample_disorder(const ModelSpec& spec, int n, std::uint64_t seed);

// Full O(N^p) Hamiltonian contraction; config holds per-site support indices.
double hamiltonian_value(const DisorderSample& sample, const ModelSpec& spec,
                         std::span<const int> config);

}  // namespace mattis
