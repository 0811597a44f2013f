#include "mattisglass/disorder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "mattisglass/rng.hpp"

namespace mattis {

DisorderSample sample_disorder(const ModelSpec& spec, int n, std::uint64_t seed)
{
    if (!spec.validated) throw SpecError("sample_disorder: spec not validated");
    if (n < 1) throw SpecError("sample_disorder: N must be >= 1");
    if (spec.q.jump_count() != 0 || spec.q.value(0).frobenius() > 1e-12)
        throw SpecError("sample_disorder: the simulation oracle requires q = 0");
    if (spec.spin_dim > 1 && spec.xi.kind() != MixtureKind::quadratic_matrix)
        throw SpecError("sample_disorder: D > 1 requires the quadratic-matrix catalog");

    DisorderSample s;
    s.n_sites = n;
    s.spin_dim = spec.spin_dim;
    s.seed = seed;
    s.kind = spec.xi.kind();

    if (s.kind == MixtureKind::quadratic_matrix) {
        s.orders = {2};
        s.order_betas = {spec.xi.betas()[0]};
        RngStream rng(seed, RngPurpose::disorder, 2);
        std::vector<double> g(static_cast<size_t>(n) * n);
        for (double& v : g) v = rng.normal();
        s.tensors.push_back(std::move(g));
    } else {
        const auto betas = spec.xi.betas();
        for (size_t p = 1; p <= betas.size(); ++p) {
            if (betas[p - 1] == 0.0) continue;
            s.orders.push_back(static_cast<int>(p));
            s.order_betas.push_back(betas[p - 1]);
            RngStream rng(seed, RngPurpose::disorder, p);
            size_t count = 1;
            for (size_t i = 0; i < p; ++i) count *= static_cast<size_t>(n);
            std::vector<double> g(count);
            for (double& v : g) v = rng.normal();
            s.tensors.push_back(std::move(g));
        }
    }

    {
        RngStream rng(seed, RngPurpose::chi, 0);
        std::vector<double> cumulative(spec.chi_law.probs.size());
        double acc = 0.0;
        for (size_t i = 0; i < cumulative.size(); ++i) {
            acc += spec.chi_law.probs[i];
            cumulative[i] = acc;
        }
        s.chi_idx.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) s.chi_idx[static_cast<size_t>(i)] = rng.categorical(cumulative);
    }
    return s;
}

double hamiltonian_value(const DisorderSample& sample, const ModelSpec& spec,
                         std::span<const int> config)
{
    const int n = sample.n_sites;
    double h = 0.0;

    if (sample.kind == MixtureKind::quadratic_matrix) {
        const int D = sample.spin_dim;
        const auto& g = sample.tensors[0];
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto& si = spec.prior.support[static_cast<size_t>(config[static_cast<size_t>(i)])];
            for (int j = 0; j < n; ++j) {
                const auto& sj = spec.prior.support[static_cast<size_t>(config[static_cast<size_t>(j)])];
                double dot = 0.0;
                for (int c = 0; c < D; ++c) dot += si[static_cast<size_t>(c)] * sj[static_cast<size_t>(c)];
                acc += g[static_cast<size_t>(i) * n + j] * dot;
            }
        }
        return sample.order_betas[0] / std::sqrt(static_cast<double>(n)) * acc;
    }

    std::vector<double> sigma(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) sigma[static_cast<size_t>(i)] = spec.prior.support[static_cast<size_t>(config[static_cast<size_t>(i)])][0];

    for (size_t oi = 0; oi < sample.orders.size(); ++oi) {
        const int p = sample.orders[oi];
        const auto& g = sample.tensors[oi];
        const double scale = sample.order_betas[oi] * std::pow(static_cast<double>(n), -0.5 * (p - 1));
        double acc = 0.0;
        std::vector<int> idx(static_cast<size_t>(p), 0);
        size_t flat = 0;
        while (true) {
            double prod = g[flat];
            for (int r = 0; r < p; ++r) prod *= sigma[static_cast<size_t>(idx[static_cast<size_t>(r)])];
            acc += prod;
            int r = p - 1;
            while (r >= 0) {
                if (++idx[static_cast<size_t>(r)] < n) break;
                idx[static_cast<size_t>(r)] = 0;
                --r;
            }
            if (r < 0) break;
            flat = 0;
            for (int q = 0; q < p; ++q) flat = flat * static_cast<size_t>(n) + static_cast<size_t>(idx[static_cast<size_t>(q)]);
        }
        h += scale * acc;
    }
    return h;
}

namespace {

constexpr char kMagic[8] = {'M', 'G', 'D', 'I', 'S', 'O', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::FILE* f, std::uint32_t v)
{
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    std::fwrite(b, 1, 4, f);
}

void put_u64(std::FILE* f, std::uint64_t v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    std::fwrite(b, 1, 8, f);
}

void put_f64(std::FILE* f, double v)
{
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(f, bits);
}

std::uint32_t get_u32(std::FILE* f)
{
    unsigned char b[4];
    if (std::fread(b, 1, 4, f) != 4) throw std::runtime_error("disorder file truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t get_u64(std::FILE* f)
{
    unsigned char b[8];
    if (std::fread(b, 1, 8, f) != 8) throw std::runtime_error("disorder file truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

double get_f64(std::FILE* f)
{
    const std::uint64_t bits = get_u64(f);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void DisorderSample::save(const std::string& path) const
{
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write disorder file: " + path);
    std::fwrite(kMagic, 1, 8, f);
    put_u32(f, kVersion);
    put_u32(f, static_cast<std::uint32_t>(kind == MixtureKind::quadratic_matrix ? 1 : 0));
    put_u32(f, static_cast<std::uint32_t>(spin_dim));
    put_u64(f, static_cast<std::uint64_t>(n_sites));
    put_u64(f, seed);
    put_u32(f, static_cast<std::uint32_t>(orders.size()));
    for (size_t i = 0; i < orders.size(); ++i) {
        put_u32(f, static_cast<std::uint32_t>(orders[i]));
        put_f64(f, order_betas[i]);
        put_u64(f, tensors[i].size());
        for (double v : tensors[i]) put_f64(f, v);
    }
    put_u64(f, chi_idx.size());
    for (int c : chi_idx) put_u32(f, static_cast<std::uint32_t>(c));
    std::fclose(f);
}

DisorderSample DisorderSample::load(const std::string& path)
{
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open disorder file: " + path);
    char magic[8];
    if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, kMagic, 8) != 0) {
        std::fclose(f);
        throw std::runtime_error("not a disorder file: " + path);
    }
    DisorderSample s;
    try {
        const std::uint32_t version = get_u32(f);
        if (version != kVersion) throw std::runtime_error("unsupported disorder file version");
        s.kind = get_u32(f) == 1 ? MixtureKind::quadratic_matrix : MixtureKind::scalar_mixture;
        s.spin_dim = static_cast<int>(get_u32(f));
        s.n_sites = static_cast<int>(get_u64(f));
        s.seed = get_u64(f);
        const std::uint32_t n_orders = get_u32(f);
        for (std::uint32_t i = 0; i < n_orders; ++i) {
            s.orders.push_back(static_cast<int>(get_u32(f)));
            s.order_betas.push_back(get_f64(f));
            const std::uint64_t count = get_u64(f);
            std::vector<double> g(count);
            for (double& v : g) v = get_f64(f);
            s.tensors.push_back(std::move(g));
        }
        const std::uint64_t nchi = get_u64(f);
        for (std::uint64_t i = 0; i < nchi; ++i) s.chi_idx.push_back(static_cast<int>(get_u32(f)));
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    return s;
}

}  // namespace mattis
