#include "mattisglass/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mattisglass/rng.hpp"
#include "mattisglass/spec_io.hpp"

namespace mattis {

namespace {

// streaming log-sum-exp with Kahan compensation on the rescaled sum
struct LogSumExp {
    double best = -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    double comp = 0.0;

    void add(double e)
    {
        if (e <= best) {
            const double term = std::exp(e - best);
            const double y = term - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        } else {
            const double scale = best == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(best - e);
            acc = acc * scale + 1.0;
            comp *= scale;
            best = e;
        }
    }

    double value() const
    {
        if (acc <= 0.0) return -std::numeric_limits<double>::infinity();
        return best + std::log(acc);
    }
};

double checked_pow_count(int base, int n, std::uint64_t budget)
{
    double total = 1.0;
    for (int i = 0; i < n; ++i) {
        total *= base;
        if (total > static_cast<double>(budget) * 1.000001) return total;
    }
    return total;
}

}  // namespace

double GOverride::eval(const ModelSpec& spec, std::span<const double> m, std::vector<double>& scratch) const
{
    switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::linear: {
            double s = 0.0;
            for (size_t i = 0; i < m.size(); ++i) s += y[i] * m[i];
            return s;
        }
        case Kind::spec_g:
        case Kind::expr: {
            scratch.resize(2 * m.size());
            for (size_t i = 0; i < m.size(); ++i) scratch[2 * i] = scratch[2 * i + 1] = m[i];
            const Expression& g = kind == Kind::spec_g ? spec.mattis_g : *expression;
            return g.eval(scratch);
        }
    }
    return 0.0;
}

std::string GOverride::tag() const
{
    switch (kind) {
        case Kind::zero: return "0";
        case Kind::linear: {
            std::string s = "linear(";
            for (size_t i = 0; i < y.size(); ++i) s += (i ? "," : "") + format_full(y[i]);
            return s + ")";
        }
        case Kind::spec_g: return "G";
        case Kind::expr: return expression ? expression->source() : "expr";
    }
    return "?";
}

size_t MagnetizationDistribution::bin_of(std::span<const double> m) const
{
    size_t flat = 0;
    const double width = h_bound > 0 ? 2.0 * h_bound / bins_per_axis : 1.0;
    for (int a = 0; a < dim; ++a) {
        int idx = h_bound > 0 ? static_cast<int>(std::floor((m[static_cast<size_t>(a)] + h_bound) / width)) : 0;
        idx = std::clamp(idx, 0, bins_per_axis - 1);
        flat = flat * static_cast<size_t>(bins_per_axis) + static_cast<size_t>(idx);
    }
    return flat;
}

std::vector<double> MagnetizationDistribution::bin_center(size_t flat) const
{
    std::vector<double> c(static_cast<size_t>(dim));
    const double width = h_bound > 0 ? 2.0 * h_bound / bins_per_axis : 1.0;
    for (int a = dim - 1; a >= 0; --a) {
        const size_t idx = flat % static_cast<size_t>(bins_per_axis);
        flat /= static_cast<size_t>(bins_per_axis);
        c[static_cast<size_t>(a)] = h_bound > 0 ? -h_bound + width * (static_cast<double>(idx) + 0.5) : 0.0;
    }
    return c;
}

GibbsState::GibbsState(const ModelSpec& spec, const DisorderSample& sample, GOverride g)
    : spec_(spec),
      sample_(sample),
      g_(std::move(g)),
      overlap_(spec.spin_dim),
      prop_overlap_(spec.spin_dim),
      overlap_scratch_(spec.spin_dim)
{
    if (!spec.validated) throw SpecError("GibbsState: spec not validated");
    n_ = sample.n_sites;
    s_ = static_cast<int>(spec.prior.support.size());
    dim_ = spec.spin_dim;
    log_mass_ = std::log(spec.prior_mass);
    msum_.assign(static_cast<size_t>(spec.mag_dim), 0.0);
    prop_msum_ = msum_;
    m_scratch_.resize(static_cast<size_t>(spec.mag_dim));
    sigma_flat_.assign(static_cast<size_t>(n_) * dim_, 0.0);
    config_.assign(static_cast<size_t>(n_), 0);
    refresh();
}

void GibbsState::reset(std::span<const int> config)
{
    config_.assign(config.begin(), config.end());
    refresh();
}

void GibbsState::refresh()
{
    h_ = hamiltonian_value(sample_, spec_, config_);
    overlap_ = SymMat(dim_);
    std::fill(msum_.begin(), msum_.end(), 0.0);
    logw_ = -static_cast<double>(n_) * log_mass_;
    for (int i = 0; i < n_; ++i) {
        const int idx = config_[static_cast<size_t>(i)];
        const auto& tau = spec_.prior.support[static_cast<size_t>(idx)];
        overlap_.add_outer(tau);
        for (int c = 0; c < dim_; ++c) sigma_flat_[static_cast<size_t>(i) * dim_ + c] = tau[static_cast<size_t>(c)];
        const auto hv = spec_.h_at(idx, sample_.chi_idx[static_cast<size_t>(i)]);
        for (size_t j = 0; j < msum_.size(); ++j) msum_[j] += hv[j];
        logw_ += std::log(spec_.prior.weights[static_cast<size_t>(idx)]);
    }
    prop_site_ = -1;
}

double GibbsState::energy_terms(double h, const SymMat& overlap, std::span<const double> msum) const
{
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (size_t j = 0; j < msum.size(); ++j) m_scratch_[j] = msum[j] * inv_n;
    double e = static_cast<double>(n_) * g_.eval(spec_, m_scratch_, g_scratch_);
    if (spec_.t > 0.0) {
        e += std::sqrt(2.0 * spec_.t) * h;
        const auto src = overlap.data();
        const auto dst = overlap_scratch_.data();
        for (size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * inv_n;
        e -= static_cast<double>(n_) * spec_.t * spec_.xi.value(overlap_scratch_);
    }
    return e;
}

double GibbsState::exponent() const { return logw_ + energy_terms(h_, overlap_, msum_); }

void GibbsState::magnetization(std::span<double> out) const
{
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (size_t j = 0; j < msum_.size(); ++j) out[j] = msum_[j] * inv_n;
}

double GibbsState::hamiltonian_delta(int site, int new_idx) const
{
    const int old_idx = config_[static_cast<size_t>(site)];
    if (new_idx == old_idx) return 0.0;
    const int n = n_;

    if (sample_.kind == MixtureKind::quadratic_matrix) {
        const auto& g = sample_.tensors[0];
        const auto& v_old = spec_.prior.support[static_cast<size_t>(old_idx)];
        const auto& v_new = spec_.prior.support[static_cast<size_t>(new_idx)];
        double dv[4];
        for (int c = 0; c < dim_; ++c) dv[c] = v_new[static_cast<size_t>(c)] - v_old[static_cast<size_t>(c)];
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == site) continue;
            const double* sj = sigma_flat_.data() + static_cast<size_t>(j) * dim_;
            double dot = 0.0;
            for (int c = 0; c < dim_; ++c) dot += dv[c] * sj[c];
            acc += (g[static_cast<size_t>(site) * n + j] + g[static_cast<size_t>(j) * n + site]) * dot;
        }
        double self_new = 0.0, self_old = 0.0;
        for (int c = 0; c < dim_; ++c) {
            self_new += v_new[static_cast<size_t>(c)] * v_new[static_cast<size_t>(c)];
            self_old += v_old[static_cast<size_t>(c)] * v_old[static_cast<size_t>(c)];
        }
        acc += g[static_cast<size_t>(site) * n + site] * (self_new - self_old);
        return sample_.order_betas[0] / std::sqrt(static_cast<double>(n)) * acc;
    }

    const double s_old = spec_.prior.support[static_cast<size_t>(old_idx)][0];
    const double s_new = spec_.prior.support[static_cast<size_t>(new_idx)][0];
    const double* sigma = sigma_flat_.data();
    double delta = 0.0;

    for (size_t oi = 0; oi < sample_.orders.size(); ++oi) {
        const int p = sample_.orders[oi];
        const auto& g = sample_.tensors[oi];
        const double scale = sample_.order_betas[oi] * std::pow(static_cast<double>(n), -0.5 * (p - 1));

        if (p == 1) {
            delta += scale * g[static_cast<size_t>(site)] * (s_new - s_old);
            continue;
        }
        if (p == 2) {
            const double* grow = g.data() + static_cast<size_t>(site) * n;
            double row = 0.0;
            for (int k = 0; k < n; ++k) row += (grow[k] + g[static_cast<size_t>(k) * n + site]) * sigma[k];
            row -= 2.0 * grow[site] * s_old;
            delta += scale * ((s_new - s_old) * row + grow[site] * (s_new * s_new - s_old * s_old));
            continue;
        }

        // p >= 3: walk the tuples containing the changed site at least once.
        // Positions either pin to the site or range over the other indices.
        double acc = 0.0;
        auto recurse = [&](auto&& self, int pos, size_t flat, double prod_other, int count_site) -> void {
            if (pos == p) {
                if (count_site == 0) return;
                const double pw_new = std::pow(s_new, count_site);
                const double pw_old = std::pow(s_old, count_site);
                acc += g[flat] * prod_other * (pw_new - pw_old);
                return;
            }
            self(self, pos + 1, flat * static_cast<size_t>(n) + static_cast<size_t>(site), prod_other,
                 count_site + 1);
            for (int j = 0; j < n; ++j) {
                if (j == site) continue;
                self(self, pos + 1, flat * static_cast<size_t>(n) + static_cast<size_t>(j), prod_other * sigma[j],
                     count_site);
            }
        };
        recurse(recurse, 0, 0, 1.0, 0);
        delta += scale * acc;
    }
    return delta;
}

double GibbsState::propose(int site, int new_idx)
{
    const int old_idx = config_[static_cast<size_t>(site)];
    prop_site_ = site;
    prop_idx_ = new_idx;
    prop_h_ = h_ + hamiltonian_delta(site, new_idx);
    prop_logw_ = logw_ + std::log(spec_.prior.weights[static_cast<size_t>(new_idx)]) -
                 std::log(spec_.prior.weights[static_cast<size_t>(old_idx)]);
    prop_overlap_ = overlap_;
    prop_overlap_.add_outer(spec_.prior.support[static_cast<size_t>(old_idx)], -1.0);
    prop_overlap_.add_outer(spec_.prior.support[static_cast<size_t>(new_idx)], 1.0);
    prop_msum_ = msum_;
    {
        const auto h_old = spec_.h_at(old_idx, sample_.chi_idx[static_cast<size_t>(site)]);
        const auto h_new = spec_.h_at(new_idx, sample_.chi_idx[static_cast<size_t>(site)]);
        for (size_t j = 0; j < prop_msum_.size(); ++j) prop_msum_[j] += h_new[j] - h_old[j];
    }
    return prop_logw_ + energy_terms(prop_h_, prop_overlap_, prop_msum_);
}

void GibbsState::accept()
{
    config_[static_cast<size_t>(prop_site_)] = prop_idx_;
    const auto& tau = spec_.prior.support[static_cast<size_t>(prop_idx_)];
    for (int c = 0; c < dim_; ++c) sigma_flat_[static_cast<size_t>(prop_site_) * dim_ + c] = tau[static_cast<size_t>(c)];
    h_ = prop_h_;
    logw_ = prop_logw_;
    overlap_ = prop_overlap_;
    msum_ = prop_msum_;
    prop_site_ = -1;
}

void GibbsState::apply(int site, int new_idx)
{
    propose(site, new_idx);
    accept();
}

EnumerationResult enumerate_gibbs(const ModelSpec& spec, const DisorderSample& sample,
                                  const GOverride& g, const EnumerationOptions& opts)
{
    const int n = sample.n_sites;
    const int s = static_cast<int>(spec.prior.support.size());
    const double total = checked_pow_count(s, n, opts.budget);
    if (total > static_cast<double>(opts.budget))
        throw SpecError("enumeration budget exceeded (" + std::to_string(total) +
                        " configurations); use the mcmc path");

    GibbsState state(spec, sample, g);
    EnumerationResult res;

    LogSumExp lse;
    std::vector<LogSumExp> lse_tilt(opts.tilt_y.size());
    LogSumExp lse_g;
    std::vector<LogSumExp> lse_bins;

    if (opts.bins) {
        res.dist.dim = spec.mag_dim;
        res.dist.h_bound = spec.h_bound;
        res.dist.bins_per_axis = spec.h_bound > 0 ? 64 : 1;
        res.dist.n_sites = n;
        res.dist.spec_hash = spec_hash(spec);
        res.dist.g_tag = g.tag();
        double bins_total = 1.0;
        for (int a = 0; a < spec.mag_dim; ++a) bins_total *= res.dist.bins_per_axis;
        if (bins_total > 1e7) throw SpecError("magnetization bin grid too large for d = " + std::to_string(spec.mag_dim));
        lse_bins.resize(static_cast<size_t>(bins_total));
    }

    std::vector<double> m(static_cast<size_t>(spec.mag_dim));
    std::vector<double> g_scratch;

    auto observe = [&] {
        const double e = state.exponent();
        lse.add(e);
        ++res.configs;
        if (!opts.tilt_y.empty() || opts.tilt_g || opts.bins) {
            state.magnetization(m);
            for (size_t ti = 0; ti < opts.tilt_y.size(); ++ti) {
                double tilt = 0.0;
                for (size_t j = 0; j < m.size(); ++j) tilt += opts.tilt_y[ti][j] * m[j];
                lse_tilt[ti].add(e + n * tilt);
            }
            if (opts.tilt_g) {
                const GOverride tg = GOverride::expr(opts.tilt_g);
                lse_g.add(e + n * tg.eval(spec, m, g_scratch));
            }
            if (opts.bins) lse_bins[res.dist.bin_of(m)].add(e);
        }
    };

    // reflected mixed-radix Gray walk: one site moves by one support step at
    // a time, with a periodic full refresh to cap round-off drift
    std::vector<int> dir(static_cast<size_t>(n), 1);
    observe();
    std::uint64_t since_refresh = 0;
    while (true) {
        int site = -1, next = -1;
        for (int i = 0; i < n; ++i) {
            const int cand = state.config()[static_cast<size_t>(i)] + dir[static_cast<size_t>(i)];
            if (cand >= 0 && cand < s) {
                site = i;
                next = cand;
                break;
            }
            dir[static_cast<size_t>(i)] = -dir[static_cast<size_t>(i)];
        }
        if (site < 0) break;
        state.apply(site, next);
        if (++since_refresh == 4096) {
            state.refresh();
            since_refresh = 0;
        }
        observe();
    }

    res.log_z = lse.value();
    res.free_energy = -res.log_z / static_cast<double>(n);
    for (const auto& l : lse_tilt) res.tilt_log_z.push_back(l.value());
    if (opts.tilt_g) res.tilt_g_log_z = lse_g.value();
    if (opts.bins) {
        res.dist.mass.resize(lse_bins.size());
        for (size_t b = 0; b < lse_bins.size(); ++b) {
            const double v = lse_bins[b].value();
            res.dist.mass[b] = std::isfinite(v) ? std::exp(v - res.log_z) : 0.0;
        }
    }
    return res;
}

double finite_free_energy(const ModelSpec& spec, const DisorderSample& sample, const GOverride& g,
                          std::uint64_t budget)
{
    EnumerationOptions opts;
    opts.budget = budget;
    return enumerate_gibbs(spec, sample, g, opts).free_energy;
}

double lambda_n(const ModelSpec& spec, const DisorderSample& sample, std::span<const double> y)
{
    EnumerationOptions opts;
    opts.tilt_y.push_back(std::vector<double>(y.begin(), y.end()));
    const EnumerationResult r = enumerate_gibbs(spec, sample, GOverride::zero(), opts);
    return (r.tilt_log_z[0] - r.log_z) / static_cast<double>(sample.n_sites);
}

MagnetizationDistribution gibbs_magnetization_dist(const ModelSpec& spec, const DisorderSample& sample,
                                                   std::uint64_t budget)
{
    EnumerationOptions opts;
    opts.bins = true;
    opts.budget = budget;
    return enumerate_gibbs(spec, sample, GOverride::spec_g(), opts).dist;
}

RateFunctionTable empirical_rate(const MagnetizationDistribution& dist)
{
    RateFunctionTable t;
    t.dim = dist.dim;
    double min_rate = std::numeric_limits<double>::infinity();
    for (size_t b = 0; b < dist.mass.size(); ++b) {
        t.points.push_back(dist.bin_center(b));
        if (dist.mass[b] > 0.0) {
            const double rate = -std::log(dist.mass[b]) / static_cast<double>(dist.n_sites);
            t.values.push_back(rate);
            min_rate = std::min(min_rate, rate);
        } else {
            t.values.push_back(std::numeric_limits<double>::infinity());
        }
    }
    for (double& v : t.values)
        if (std::isfinite(v)) v -= min_rate;
    t.metadata["n_sites"] = dist.n_sites;
    t.metadata["bins_per_axis"] = dist.bins_per_axis;
    t.metadata["spec_hash"] = dist.spec_hash;
    t.metadata["g_tag"] = dist.g_tag;
    t.metadata["sweeps"] = dist.sweeps;
    return t;
}

double varadhan_lhs(const ModelSpec& spec, const DisorderSample& sample)
{
    EnumerationOptions opts;
    opts.tilt_g = &spec.mattis_g;
    const EnumerationResult r = enumerate_gibbs(spec, sample, GOverride::zero(), opts);
    return (r.tilt_g_log_z - r.log_z) / static_cast<double>(sample.n_sites);
}

double naive_free_energy(const ModelSpec& spec, const DisorderSample& sample, const GOverride& g)
{
    const int n = sample.n_sites;
    const int s = static_cast<int>(spec.prior.support.size());
    const double log_mass = std::log(spec.prior_mass);

    LogSumExp lse;
    std::vector<int> config(static_cast<size_t>(n), 0);
    std::vector<double> m(static_cast<size_t>(spec.mag_dim));
    std::vector<double> scratch;

    while (true) {
        const double hval = hamiltonian_value(sample, spec, config);
        SymMat overlap(spec.spin_dim);
        std::fill(m.begin(), m.end(), 0.0);
        double logw = -n * log_mass;
        for (int i = 0; i < n; ++i) {
            const int idx = config[static_cast<size_t>(i)];
            overlap.add_outer(spec.prior.support[static_cast<size_t>(idx)]);
            const auto hv = spec.h_at(idx, sample.chi_idx[static_cast<size_t>(i)]);
            for (size_t j = 0; j < m.size(); ++j) m[j] += hv[j];
            logw += std::log(spec.prior.weights[static_cast<size_t>(idx)]);
        }
        for (double& x : m) x /= n;
        double e = logw + n * g.eval(spec, m, scratch);
        if (spec.t > 0.0) {
            e += std::sqrt(2.0 * spec.t) * hval;
            e -= n * spec.t * spec.xi.value(overlap * (1.0 / n));
        }
        lse.add(e);

        int i = n - 1;
        while (i >= 0) {
            if (++config[static_cast<size_t>(i)] < s) break;
            config[static_cast<size_t>(i)] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return -lse.value() / static_cast<double>(n);
}

double energy_total(const ModelSpec& spec, const DisorderSample& sample, std::span<const int> config,
                    const GOverride& g)
{
    GibbsState state(spec, sample, g);
    state.reset(config);
    // exponent() carries the prior log-weight; strip it to leave the energy
    double logw = -sample.n_sites * std::log(spec.prior_mass);
    for (int idx : config) logw += std::log(spec.prior.weights[static_cast<size_t>(idx)]);
    return state.exponent() - logw;
}

McmcResult mcmc_sample(const ModelSpec& spec, const DisorderSample& sample, long long sweeps,
                       long long burn_in, std::uint64_t seed)
{
    if (sweeps < 1 || burn_in < 0) throw SpecError("mcmc: sweeps must be >= 1 and burn-in >= 0");
    const int n = sample.n_sites;
    const int s = static_cast<int>(spec.prior.support.size());
    GibbsState state(spec, sample, GOverride::spec_g());
    RngStream rng(seed, RngPurpose::mcmc, 0);

    std::vector<int> init(static_cast<size_t>(n));
    for (int& c : init) c = static_cast<int>(rng.uniform() * s) % s;
    state.reset(init);

    McmcResult out;
    out.sweeps = sweeps;
    out.dist.dim = spec.mag_dim;
    out.dist.h_bound = spec.h_bound;
    out.dist.bins_per_axis = spec.h_bound > 0 ? 64 : 1;
    out.dist.n_sites = n;
    out.dist.spec_hash = spec_hash(spec);
    out.dist.g_tag = GOverride::spec_g().tag();
    out.dist.sweeps = sweeps;
    double bins_total = 1.0;
    for (int a = 0; a < spec.mag_dim; ++a) bins_total *= out.dist.bins_per_axis;
    std::vector<double> counts(static_cast<size_t>(bins_total), 0.0);

    std::vector<double> m(static_cast<size_t>(spec.mag_dim));
    long long accepted = 0, proposed = 0;
    for (long long sweep = 0; sweep < burn_in + sweeps; ++sweep) {
        for (int site = 0; site < n; ++site) {
            const int cand = static_cast<int>(rng.uniform() * s) % s;
            const double e_old = state.exponent();
            const double e_new = state.propose(site, cand);
            ++proposed;
            if (e_new >= e_old || rng.uniform() < std::exp(e_new - e_old)) {
                state.accept();
                ++accepted;
            }
        }
        if ((sweep & 255) == 255) state.refresh();
        if (sweep >= burn_in) {
            state.magnetization(m);
            counts[out.dist.bin_of(m)] += 1.0;
        }
    }

    out.dist.mass.resize(counts.size());
    const double total = static_cast<double>(sweeps);
    for (size_t b = 0; b < counts.size(); ++b) out.dist.mass[b] = counts[b] / total;
    out.acceptance_rate = proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
    return out;
}

double total_variation(const MagnetizationDistribution& a, const MagnetizationDistribution& b)
{
    if (a.mass.size() != b.mass.size()) throw std::invalid_argument("total_variation: bin grids differ");
    double tv = 0.0;
    for (size_t i = 0; i < a.mass.size(); ++i) tv += std::abs(a.mass[i] - b.mass[i]);
    return 0.5 * tv;
}

}  // namespace mattis
