#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mattisglass/disorder.hpp"
#include "mattisglass/model.hpp"
#include "mattisglass/rate_table.hpp"

namespace mattis {

// Mattis term used by an oracle run: the spec's own G, zero, a linear tilt
// y.m, or an arbitrary expression in the m variables.
struct GOverride {
    enum class Kind { spec_g, zero, linear, expr };
    Kind kind = Kind::spec_g;
    std::vector<double> y;
    const Expression* expression = nullptr;

    static GOverride spec_g() { return {}; }
    static GOverride zero() { return {Kind::zero, {}, nullptr}; }
    static GOverride linear(std::vector<double> tilt) { return {Kind::linear, std::move(tilt), nullptr}; }
    static GOverride expr(const Expression* e) { return {Kind::expr, {}, e}; }

    double eval(const ModelSpec& spec, std::span<const double> m, std::vector<double>& scratch) const;
    std::string tag() const;
};

// Exact bin masses of m_N over the box |m|_inf <= L_h, 64 bins per axis.
struct MagnetizationDistribution {
    int dim = 1;
    double h_bound = 1.0;
    int bins_per_axis = 64;
    int n_sites = 0;
    std::vector<double> mass;  // flat row-major over axes
    std::string spec_hash;
    std::string g_tag;
    long long sweeps = -1;  // -1 marks exact enumeration

    size_t bin_count() const { return mass.size(); }
    size_t bin_of(std::span<const double> m) const;
    std::vector<double> bin_center(size_t flat) const;
};

// Incrementally tracked configuration state shared by the Gray-code
// enumeration and the Metropolis chain. Tracks the Hamiltonian, the
// self-overlap sigma sigma^T, the magnetization sum and the log prior weight
// under single-site changes; refresh() recomputes everything from scratch to
// cap accumulated round-off.
class GibbsState {
public:
    GibbsState(const ModelSpec& spec, const DisorderSample& sample, GOverride g);

    int n_sites() const { return n_; }
    int support_size() const { return s_; }
    const std::vector<int>& config() const { return config_; }

    void reset(std::span<const int> config);
    void refresh();

    double exponent() const;  // log prior weight + full energy of the current config
    void magnetization(std::span<double> out) const;

    // candidate exponent for a single-site change; accept() commits it
    double propose(int site, int new_idx);
    void accept();
    void apply(int site, int new_idx);

private:
    double hamiltonian_delta(int site, int new_idx) const;
    double energy_terms(double h, const SymMat& overlap, std::span<const double> msum) const;

    const ModelSpec& spec_;
    const DisorderSample& sample_;
    GOverride g_;
    int n_ = 0, s_ = 0, dim_ = 1;
    double log_mass_ = 0.0;

    std::vector<int> config_;
    std::vector<double> sigma_flat_;  // current spin vectors, N x D row-major
    double h_ = 0.0;
    SymMat overlap_;
    std::vector<double> msum_;
    double logw_ = 0.0;

    // pending proposal
    int prop_site_ = -1, prop_idx_ = -1;
    double prop_h_ = 0.0, prop_logw_ = 0.0;
    SymMat prop_overlap_;
    std::vector<double> prop_msum_;

    mutable SymMat overlap_scratch_;
    mutable std::vector<double> m_scratch_, g_scratch_;
};

struct EnumerationOptions {
    std::vector<std::vector<double>> tilt_y;  // also accumulate log sum exp(e + N y.m)
    const Expression* tilt_g = nullptr;       // also accumulate log sum exp(e + N g(m))
    bool bins = false;
    std::uint64_t budget = 1ull << 24;
};

struct EnumerationResult {
    double log_z = 0.0;
    double free_energy = 0.0;  // -(1/N) log_z
    std::vector<double> tilt_log_z;
    double tilt_g_log_z = 0.0;
    MagnetizationDistribution dist;
    std::uint64_t configs = 0;
};

// Gray-code walk over the product support with O(N)-per-step incremental
// energy updates (orders p <= 2; higher orders pay O(p N^{p-1}) per step).
EnumerationResult enumerate_gibbs(const ModelSpec& spec, const DisorderSample& sample,
                                  const GOverride& g, const EnumerationOptions& opts);

// F_N^G = -(1/N) log sum_sigma (prod_i w/mass) exp(energy); throws past the
// enumeration budget with a pointer at the MCMC path.
double finite_free_energy(const ModelSpec& spec, const DisorderSample& sample, const GOverride& g,
                          std::uint64_t budget = 1ull << 24);

// (1/N) log < e^{N y.m_N} >_N^0 from a single enumeration of the G = 0 weights
double lambda_n(const ModelSpec& spec, const DisorderSample& sample, std::span<const double> y);

MagnetizationDistribution gibbs_magnetization_dist(const ModelSpec& spec, const DisorderSample& sample,
                                                   std::uint64_t budget = 1ull << 24);

// per bin -(1/N) log mass, shifted so the minimum is zero; empty bins +inf
RateFunctionTable empirical_rate(const MagnetizationDistribution& dist);

// (1/N) log < e^{N G(m_N)} >_N^0 with the spec's own G
double varadhan_lhs(const ModelSpec& spec, const DisorderSample& sample);

// Reference enumeration: lexicographic order, full recomputation per config.
// Kept deliberately independent of the incremental path it cross-checks.
double naive_free_energy(const ModelSpec& spec, const DisorderSample& sample, const GOverride& g);

// N G(m_N) + sqrt(2t) H_N - N t xi(self overlap / N) for one configuration,
// computed through the incremental state (used by tests and the CLI).
double energy_total(const ModelSpec& spec, const DisorderSample& sample, std::span<const int> config,
                    const GOverride& g);

struct McmcResult {
    MagnetizationDistribution dist;
    double acceptance_rate = 0.0;
    long long sweeps = 0;
};

// Single-site Metropolis over the product support; records the m_N bin after
// every post-burn-in sweep.
McmcResult mcmc_sample(const ModelSpec& spec, const DisorderSample& sample, long long sweeps,
                       long long burn_in, std::uint64_t seed);

double total_variation(const MagnetizationDistribution& a, const MagnetizationDistribution& b);

}  // namespace mattis
