#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mattisglass/oracle.hpp"
#include "mattisglass/spec_io.hpp"
#include "mattisglass/verify.hpp"

using namespace mattis;

namespace {

ModelSpec basic(double beta) { return spec_from_json(nlohmann::json::parse(builtin_spec_basic(beta))); }

ModelSpec basic_t0()
{
    nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
    j["t"] = 0.0;
    j["G"] = "0";
    return spec_from_json(j);
}

double binom_ln(int n, int k)
{
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

TEST_SUITE("oracle")
{
    TEST_CASE("disorder sampling is deterministic in the seed")
    {
        const ModelSpec spec = spec_from_json(nlohmann::json::parse(builtin_spec_mixture3()));
        const DisorderSample a = sample_disorder(spec, 6, 33);
        const DisorderSample b = sample_disorder(spec, 6, 33);
        const DisorderSample c = sample_disorder(spec, 6, 34);
        REQUIRE(a.tensors.size() == b.tensors.size());
        for (size_t t = 0; t < a.tensors.size(); ++t) CHECK(a.tensors[t] == b.tensors[t]);
        CHECK(a.chi_idx == b.chi_idx);
        CHECK(a.tensors[0] != c.tensors[0]);
        CHECK(a.orders == std::vector<int>{1, 2, 3});
    }

    TEST_CASE("orders with zero beta carry no tensor")
    {
        const ModelSpec spec = basic(0.2);  // betas [0, 1]
        const DisorderSample s = sample_disorder(spec, 4, 1);
        CHECK(s.orders == std::vector<int>{2});
        CHECK(s.tensors.size() == 1);
    }

    TEST_CASE("oracle preconditions")
    {
        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["q"] = {{"zetas", nlohmann::json::array()}, {"values", {{0.25}}}};
        const ModelSpec nonzero_q = spec_from_json(j);
        CHECK_THROWS_WITH_AS(sample_disorder(nonzero_q, 4, 1), doctest::Contains("q = 0"), SpecError);
    }

    TEST_CASE("energy vanishes when t = 0 and G = 0")
    {
        const ModelSpec spec = basic_t0();
        const DisorderSample s = sample_disorder(spec, 5, 2);
        CHECK(energy_total(spec, s, std::vector<int>{0, 1, 0, 1, 1}, GOverride::zero()) == 0.0);
    }

    TEST_CASE("ising self-overlap correction is the constant -N t")
    {
        // |sigma_i| = 1 so xi(sigma sigma^T / N) = 1 and the correction term
        // equals N t; with G = 0 the energy is sqrt(2t) H - N t
        const ModelSpec spec = basic(0.2);
        const int n = 6;
        const DisorderSample s = sample_disorder(spec, n, 3);
        const std::vector<int> config = {0, 1, 1, 0, 1, 0};
        const double e = energy_total(spec, s, config, GOverride::zero());
        const double h = hamiltonian_value(s, spec, config);
        CHECK(e == doctest::Approx(std::sqrt(2.0 * spec.t) * h - n * spec.t).epsilon(1e-13));
    }

    TEST_CASE("N = 2 energy against a hand-written sum")
    {
        const ModelSpec spec = basic(0.3);
        DisorderSample s;
        s.n_sites = 2;
        s.spin_dim = 1;
        s.seed = 0;
        s.kind = MixtureKind::scalar_mixture;
        s.orders = {2};
        s.order_betas = {1.0};
        s.tensors = {{0.3, -1.1, 0.7, 0.2}};  // g row-major
        s.chi_idx = {0, 1};                   // chi = (-1, +1)

        const std::vector<int> config = {1, 0};  // sigma = (+1, -1)
        // H = (1/sqrt(2)) sum_jk g_jk s_j s_k
        const double h_hand = (0.3 * 1 * 1 + (-1.1) * 1 * (-1) + 0.7 * (-1) * 1 + 0.2 * (-1) * (-1)) /
                              std::sqrt(2.0);
        CHECK(hamiltonian_value(s, spec, config) == doctest::Approx(h_hand).epsilon(1e-15));

        // m = (h(+1,-1) + h(-1,+1)) / 2 = -1, G contributes N m^2 = 2
        const double want = 2.0 * 1.0 + std::sqrt(2.0 * spec.t) * h_hand - 2.0 * spec.t;
        CHECK(energy_total(spec, s, config, GOverride::spec_g()) == doctest::Approx(want).epsilon(1e-13));
    }

    TEST_CASE("free energy trivial case and the naive cross-check")
    {
        const ModelSpec spec = basic_t0();
        const DisorderSample one = sample_disorder(spec, 1, 5);
        CHECK(std::abs(finite_free_energy(spec, one, GOverride::zero())) <= 1e-15);

        // N = 2 equals a literal four-term sum
        const ModelSpec sk = basic(0.3);
        const DisorderSample s = sample_disorder(sk, 2, 6);
        double z = 0.0;
        std::vector<double> scratch;
        for (int c0 = 0; c0 < 2; ++c0)
            for (int c1 = 0; c1 < 2; ++c1) {
                const std::vector<int> config = {c0, c1};
                z += 0.25 * std::exp(energy_total(sk, s, config, GOverride::spec_g()));
            }
        const double f_hand = -0.5 * std::log(z);
        CHECK(finite_free_energy(sk, s, GOverride::spec_g()) == doctest::Approx(f_hand).epsilon(1e-13));
    }

    TEST_CASE("gray code equals naive enumeration")
    {
        struct Case {
            std::string raw;
            int n;
        };
        const Case cases[] = {
            {builtin_spec_basic(0.2), 6},
            {builtin_spec_mixture3(), 5},
            {builtin_spec_vector_d2(), 4},
        };
        for (const Case& c : cases) {
            const ModelSpec spec = spec_from_json(nlohmann::json::parse(c.raw));
            const DisorderSample s = sample_disorder(spec, c.n, 7);
            const double fg = finite_free_energy(spec, s, GOverride::spec_g());
            const double fn = naive_free_energy(spec, s, GOverride::spec_g());
            CHECK(std::abs(fg - fn) <= 1e-12);
        }

        // non-uniform prior weights exercise the mass normalization
        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.25));
        j["prior"]["weights"] = {0.25, 0.75};
        const ModelSpec skew = spec_from_json(j);
        const DisorderSample s = sample_disorder(skew, 6, 8);
        CHECK(std::abs(finite_free_energy(skew, s, GOverride::spec_g()) -
                       naive_free_energy(skew, s, GOverride::spec_g())) <= 1e-12);
    }

    TEST_CASE("lambda identity and convexity")
    {
        const ModelSpec spec = basic(0.2);
        const DisorderSample s = sample_disorder(spec, 8, 9);
        const double f0 = finite_free_energy(spec, s, GOverride::zero());
        for (double y : {0.0, 0.5, -0.5}) {
            const double lam = lambda_n(spec, s, std::span<const double>(&y, 1));
            const double fy = finite_free_energy(spec, s, GOverride::linear({y}));
            CHECK(std::abs(lam + fy - f0) <= 1e-12);
        }
        {
            const double zero = 0.0;
            CHECK(lambda_n(spec, s, std::span<const double>(&zero, 1)) == 0.0);
        }

        EnumerationOptions opts;
        for (int i = 0; i < 17; ++i) opts.tilt_y.push_back({-2.0 + 0.25 * i});
        const EnumerationResult er = enumerate_gibbs(spec, s, GOverride::zero(), opts);
        std::vector<double> lam;
        for (double t : er.tilt_log_z) lam.push_back((t - er.log_z) / 8.0);
        for (size_t i = 1; i + 1 < lam.size(); ++i)
            CHECK(lam[i + 1] - 2.0 * lam[i] + lam[i - 1] >= -1e-9);
    }

    TEST_CASE("magnetization distribution is a probability law")
    {
        const ModelSpec spec = basic(0.2);
        const DisorderSample s = sample_disorder(spec, 8, 10);
        const MagnetizationDistribution dist = gibbs_magnetization_dist(spec, s);
        double total = 0.0;
        for (double m : dist.mass) total += m;
        CHECK(std::abs(total - 1.0) <= 1e-10);
    }

    TEST_CASE("free law at t = 0 is binomial in the bin sums")
    {
        // t = 0, G = 0, h = tau chi with Rademacher chi: each h(s_i, chi_i) is
        // an independent uniform sign, so N m_N ~ 2 Binom(N, 1/2) - N
        const ModelSpec spec = basic_t0();
        const int n = 8;
        const DisorderSample s = sample_disorder(spec, n, 11);
        const MagnetizationDistribution dist = gibbs_magnetization_dist(spec, s);
        for (int k = 0; k <= n; ++k) {
            const double m = (2.0 * k - n) / n;
            const double want = std::exp(binom_ln(n, k) - n * std::log(2.0));
            const size_t bin = dist.bin_of(std::vector<double>{m});
            CHECK(dist.mass[bin] == doctest::Approx(want).epsilon(1e-10));
        }
    }

    TEST_CASE("N = 3 distribution equals a naive loop")
    {
        const ModelSpec spec = basic(0.4);
        const DisorderSample s = sample_disorder(spec, 3, 12);
        const MagnetizationDistribution dist = gibbs_magnetization_dist(spec, s);

        std::vector<double> mass(dist.mass.size(), 0.0);
        double z = 0.0;
        std::vector<double> scratch;
        for (int c0 = 0; c0 < 2; ++c0)
            for (int c1 = 0; c1 < 2; ++c1)
                for (int c2 = 0; c2 < 2; ++c2) {
                    const std::vector<int> config = {c0, c1, c2};
                    const double w = 0.125 * std::exp(energy_total(spec, s, config, GOverride::spec_g()));
                    double msum = 0.0;
                    for (int i = 0; i < 3; ++i)
                        msum += spec.h_at(config[static_cast<size_t>(i)], s.chi_idx[static_cast<size_t>(i)])[0];
                    const double m = msum / 3.0;
                    mass[dist.bin_of(std::vector<double>{m})] += w;
                    z += w;
                }
        for (size_t b = 0; b < mass.size(); ++b)
            CHECK(dist.mass[b] == doctest::Approx(mass[b] / z).epsilon(1e-11));
    }

    TEST_CASE("empirical rate conventions")
    {
        MagnetizationDistribution d;
        d.dim = 1;
        d.h_bound = 1.0;
        d.bins_per_axis = 4;
        d.n_sites = 10;
        d.mass = {0.0, 0.7, 0.3, 0.0};
        const RateFunctionTable t = empirical_rate(d);
        CHECK(t.values[1] == 0.0);  // mode shifts to zero
        CHECK(t.values[2] == doctest::Approx((std::log(0.7) - std::log(0.3)) / 10.0).epsilon(1e-12));
        CHECK(std::isinf(t.values[0]));
        CHECK(std::isinf(t.values[3]));

        MagnetizationDistribution point = d;
        point.mass = {0.0, 1.0, 0.0, 0.0};
        const RateFunctionTable tp = empirical_rate(point);
        CHECK(tp.values[1] == 0.0);
        CHECK(std::isinf(tp.values[0]));
    }

    TEST_CASE("varadhan plumbing")
    {
        const ModelSpec spec = basic(0.2);
        const DisorderSample s = sample_disorder(spec, 8, 13);

        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["G"] = "0";
        const ModelSpec zero_g = spec_from_json(j);
        CHECK(varadhan_lhs(zero_g, s) == 0.0);

        nlohmann::json j2 = nlohmann::json::parse(builtin_spec_basic(0.2));
        j2["G"] = "0.3*m_1";
        const ModelSpec lin_g = spec_from_json(j2);
        const double y = 0.3;
        CHECK(std::abs(varadhan_lhs(lin_g, s) - lambda_n(spec, s, std::span<const double>(&y, 1))) <= 1e-12);
    }

    TEST_CASE("enumeration budget is enforced")
    {
        const ModelSpec spec = basic(0.2);
        const DisorderSample s = sample_disorder(spec, 30, 14);
        CHECK_THROWS_WITH_AS(finite_free_energy(spec, s, GOverride::zero()), doctest::Contains("mcmc"),
                             SpecError);
    }

    TEST_CASE("free-energy concentration improves with N")
    {
        const ModelSpec spec = basic(0.3);
        auto sd_at = [&](int n) {
            double mean = 0.0, m2 = 0.0;
            for (int i = 0; i < 50; ++i) {
                const double f =
                    finite_free_energy(spec, sample_disorder(spec, n, 100 + 17 * i), GOverride::zero());
                const double delta = f - mean;
                mean += delta / (i + 1);
                m2 += delta * (f - mean);
            }
            return std::sqrt(m2 / 49.0);
        };
        CHECK(sd_at(18) < sd_at(10));
    }

    TEST_CASE("scalar and quadratic catalogs agree at D = 1")
    {
        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["xi"] = {{"kind", "quadratic-matrix"}, {"betas", {1.0}}};
        const ModelSpec quad_spec = spec_from_json(j);
        const ModelSpec scalar_spec = basic(0.2);
        // the order-2 stream is shared, so the couplings coincide exactly
        const DisorderSample sq = sample_disorder(quad_spec, 7, 31);
        const DisorderSample ss = sample_disorder(scalar_spec, 7, 31);
        CHECK(sq.tensors[0] == ss.tensors[0]);
        CHECK(std::abs(finite_free_energy(quad_spec, sq, GOverride::spec_g()) -
                       finite_free_energy(scalar_spec, ss, GOverride::spec_g())) <= 1e-12);
    }

    TEST_CASE("two-component magnetization law")
    {
        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["d"] = 2;
        j["h"] = {"tau_1*chi_1", "0.5*tau_1"};
        j["G"] = "m_1^2 + 0.3*m_2";
        const ModelSpec spec = spec_from_json(j);
        const DisorderSample s = sample_disorder(spec, 5, 32);
        const MagnetizationDistribution dist = gibbs_magnetization_dist(spec, s);
        CHECK(dist.dim == 2);
        CHECK(dist.bin_count() == 64u * 64u);
        double total = 0.0;
        for (double m : dist.mass) total += m;
        CHECK(std::abs(total - 1.0) <= 1e-10);

        // bin_of and bin_center invert each other on occupied cells
        for (size_t b = 0; b < dist.bin_count(); ++b) {
            if (dist.mass[b] <= 0.0) continue;
            CHECK(dist.bin_of(dist.bin_center(b)) == b);
        }

        CHECK(std::abs(finite_free_energy(spec, s, GOverride::spec_g()) -
                       naive_free_energy(spec, s, GOverride::spec_g())) <= 1e-12);
    }

    TEST_CASE("constant generalized spin collapses the law to one bin")
    {
        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["h"] = {"0"};
        j["G"] = "m_1";
        const ModelSpec spec = spec_from_json(j);
        CHECK(spec.h_bound == 0.0);
        const DisorderSample s = sample_disorder(spec, 4, 33);
        const MagnetizationDistribution dist = gibbs_magnetization_dist(spec, s);
        CHECK(dist.bin_count() == 1);
        CHECK(dist.mass[0] == doctest::Approx(1.0).epsilon(1e-12));
        const RateFunctionTable r = empirical_rate(dist);
        CHECK(r.values[0] == 0.0);
    }

    TEST_CASE("disorder file round trip")
    {
        const ModelSpec spec = spec_from_json(nlohmann::json::parse(builtin_spec_mixture3()));
        const DisorderSample a = sample_disorder(spec, 5, 15);
        const std::string path = (std::filesystem::temp_directory_path() / "mattisglass_test.disorder").string();
        a.save(path);
        const DisorderSample b = DisorderSample::load(path);
        CHECK(a.n_sites == b.n_sites);
        CHECK(a.seed == b.seed);
        CHECK(a.orders == b.orders);
        CHECK(a.order_betas == b.order_betas);
        for (size_t t = 0; t < a.tensors.size(); ++t) CHECK(a.tensors[t] == b.tensors[t]);
        CHECK(a.chi_idx == b.chi_idx);
        std::remove(path.c_str());

        CHECK_THROWS(DisorderSample::load("/nonexistent/file.disorder"));
    }
}
