#include "doctest.h"

#include <cmath>
#include <limits>

#include "mattisglass/oracle.hpp"
#include "mattisglass/rng.hpp"
#include "mattisglass/spec_io.hpp"
#include "mattisglass/variational.hpp"
#include "mattisglass/verify.hpp"

using namespace mattis;

namespace {

ModelSpec field_t0_spec()
{
    nlohmann::json j = nlohmann::json::parse(builtin_spec_ising_field());
    j["t"] = 0.0;
    return spec_from_json(j);
}

ModelSpec basic02() { return spec_from_json(nlohmann::json::parse(builtin_spec_basic(0.2))); }

double binary_entropy_conjugate(double m)
{
    // sup_x { x m - log cosh x } for |m| < 1
    if (m == 0.0) return 0.0;
    return 0.5 * ((1.0 + m) * std::log1p(m) + (1.0 - m) * std::log1p(-m));
}

PhiOptions fast_opts(int k)
{
    PhiOptions o;
    o.k = k;
    o.quad_nodes = 16;
    o.seed = 9;
    return o;
}

}  // namespace

TEST_SUITE("variational")
{
    TEST_CASE("path parameterization decodes valid monotone paths")
    {
        RngStream rng(14, RngPurpose::test, 0);
        for (int dim : {1, 2}) {
            for (int k : {0, 1, 2}) {
                const PathParameterization param{k, dim, 8.0};
                for (int trial = 0; trial < 25; ++trial) {
                    std::vector<double> raw(static_cast<size_t>(param.param_count()));
                    for (double& v : raw) v = rng.uniform(-3.0, 3.0);
                    const StepPath p = param.decode(raw);
                    p.check_monotone("decoded");
                    CHECK(p.jump_count() == k);
                    CHECK(p.value(k).frobenius() <= 8.0 + 1e-9);
                }
            }
        }
    }

    TEST_CASE("embedding preserves the decoded path")
    {
        const PathParameterization small{1, 1, 8.0};
        const PathParameterization big{2, 1, 8.0};
        RngStream rng(15, RngPurpose::test, 0);
        const GaussHermite quad(16);
        const ModelSpec spec = basic02();
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> raw(static_cast<size_t>(small.param_count()));
            for (double& v : raw) v = rng.uniform(-2.0, 2.0);
            const std::vector<double> lifted = big.embed(raw);
            const std::vector<double> x = {rng.uniform(-1.0, 1.0)};
            const double a = parisi_functional(small.decode(raw), x, spec, quad);
            const double b = parisi_functional(big.decode(lifted), x, spec, quad);
            CHECK(a == doctest::Approx(b).epsilon(1e-12));
        }
    }

    TEST_CASE("t = 0 collapses phi to the terminal value")
    {
        // spins decouple at t = 0: phi(x) = -log cosh(x), independent of the path
        const ModelSpec spec = field_t0_spec();
        PhiEvaluator phi(spec, fast_opts(1));
        for (double x : {0.0, 0.5, 1.0, -1.3}) {
            CHECK(phi.value1(x) == doctest::Approx(-std::log(std::cosh(x))).epsilon(1e-12));
        }
    }

    TEST_CASE("phi dominates the zero path and is monotone in k")
    {
        const ModelSpec spec = basic02();
        const GaussHermite quad(16);
        const std::vector<double> x0 = {0.0};
        const double zero_path_value = parisi_functional(StepPath::zero(1), x0, spec, quad);

        const PhiResult r0 = phi_of_x(spec, x0, fast_opts(0));
        CHECK(r0.value >= zero_path_value - 1e-12);

        const PhiResult r2 = phi_of_x(spec, x0, fast_opts(2));
        CHECK(r2.value_by_k.size() == 3);
        CHECK(r2.value_by_k[1] >= r2.value_by_k[0] - 1e-9);
        CHECK(r2.value_by_k[2] >= r2.value_by_k[1] - 1e-9);
        CHECK(r2.value >= r0.value - 1e-9);
    }

    TEST_CASE("legendre dual of a synthetic quadratic")
    {
        DualOptions opts;
        auto phi = [](std::span<const double> x) { return -0.5 * x[0] * x[0]; };
        const std::vector<double> m1 = {1.0};
        const DualResult r = legendre_dual(phi, 1, m1, 2.0, opts);
        CHECK(r.value == doctest::Approx(0.5).epsilon(1e-8));
        CHECK(!r.boundary_limited);

        const std::vector<double> m0 = {0.0};
        CHECK(legendre_dual(phi, 1, m0, 2.0, opts).value == doctest::Approx(0.0).epsilon(1e-10));

        // outside the reachable box the conjugate is +inf
        const std::vector<double> m_far = {3.0};
        CHECK(std::isinf(legendre_dual(phi, 1, m_far, 2.0, opts).value));

        // convexity along the grid for the synthetic input
        std::vector<double> vals;
        for (int i = 0; i <= 40; ++i) {
            const std::vector<double> m = {-1.0 + 0.05 * i};
            vals.push_back(legendre_dual(phi, 1, m, 2.0, opts).value);
        }
        for (size_t i = 1; i + 1 < vals.size(); ++i)
            CHECK(vals[i + 1] - 2.0 * vals[i] + vals[i - 1] >= -1e-8);
    }

    TEST_CASE("legendre dual in two m-dimensions (synthetic)")
    {
        DualOptions opts;
        opts.x_points = 65;
        auto phi = [](std::span<const double> x) { return -0.5 * x[0] * x[0] - x[1] * x[1]; };
        // conjugate of -(x1^2/2 + x2^2): m1^2/2 + m2^2/4
        const std::vector<double> m = {0.8, -0.6};
        const DualResult r = legendre_dual(phi, 2, m, 2.0, opts);
        CHECK(r.value == doctest::Approx(0.5 * 0.64 + 0.25 * 0.36).epsilon(1e-6));
        CHECK(!r.boundary_limited);
        CHECK(r.argmax_x[0] == doctest::Approx(0.8).epsilon(1e-3));
        CHECK(r.argmax_x[1] == doctest::Approx(-0.3).epsilon(1e-2));
    }

    TEST_CASE("phi with vector spins stays a valid lower envelope")
    {
        const ModelSpec spec = spec_from_json(nlohmann::json::parse(builtin_spec_vector_d2()));
        PhiOptions opts;
        opts.k = 0;
        opts.quad_nodes = 8;
        opts.seed = 9;
        const std::vector<double> x = {0.4};
        const GaussHermite quad(8);
        const double zero_path = parisi_functional(StepPath::zero(2), x, spec, quad);
        const PhiResult r = phi_of_x(spec, x, opts);
        CHECK(std::isfinite(r.value));
        CHECK(r.value >= zero_path - 1e-12);
        r.path.check_monotone("d2 argmax");
    }

    TEST_CASE("t = 0 conjugate matches the entropy transform")
    {
        const ModelSpec spec = field_t0_spec();
        PhiEvaluator phi(spec, fast_opts(0));
        DualOptions opts;
        for (double m : {0.0, 0.3, -0.3, 0.7, -0.9}) {
            const std::vector<double> mv = {m};
            const DualResult r = legendre_dual([&phi](std::span<const double> x) { return phi.value(x); },
                                               1, mv, spec.h_bound, opts);
            CHECK(r.value == doctest::Approx(binary_entropy_conjugate(m)).epsilon(1e-5));
        }
    }

    TEST_CASE("rate table I^G properties")
    {
        const ModelSpec spec = field_t0_spec();
        PhiEvaluator phi(spec, fast_opts(0));
        DualOptions opts;
        const ConjugateTable conj = build_conjugate(phi, uniform_grid(1, -1.0, 1.0, 65), opts);

        SUBCASE("G = 0 gives phi* - phi(0)")
        {
            auto zero = [](std::span<const double>) { return 0.0; };
            RateFunctionTable t = rate_function_ig(conj, zero);
            double min_star = std::numeric_limits<double>::infinity();
            for (double v : conj.values) min_star = std::min(min_star, v);
            CHECK(std::abs(min_star - conj.phi_at_zero) <= 1e-3);  // Fenchel-Moreau
            // I(m) = phi*(m) - inf phi*
            for (size_t i = 0; i < t.values.size(); ++i) {
                if (!std::isfinite(t.values[i])) continue;
                CHECK(t.values[i] == doctest::Approx(conj.values[i] - min_star).epsilon(1e-12));
                CHECK(t.values[i] >= -1e-8);
            }
            CHECK(t.min_value() <= 1e-6);
        }

        SUBCASE("normalization zeroes the grid argmax")
        {
            auto g = [](std::span<const double> m) { return m[0] * m[0]; };
            RateFunctionTable t = rate_function_ig(conj, g);
            CHECK(t.min_value() <= 1e-6);
            for (double v : t.values)
                if (std::isfinite(v)) CHECK(v >= -1e-8);
        }
    }

    TEST_CASE("basic-model guard")
    {
        const ModelSpec good = basic02();
        CHECK_NOTHROW(require_basic_model(good));

        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["prior"]["support"] = {{-1.0}, {0.5}};
        CHECK_THROWS_AS(require_basic_model(spec_from_json(j)), SpecError);

        nlohmann::json j2 = nlohmann::json::parse(builtin_spec_basic(0.2));
        j2["G"] = "m_1^2 + m_1";
        CHECK_THROWS_AS(require_basic_model(spec_from_json(j2)), SpecError);
    }

    TEST_CASE("limit free energy closed cases and method agreement")
    {
        SUBCASE("t = 0 with G = 0 gives zero")
        {
            nlohmann::json j = nlohmann::json::parse(builtin_spec_ising_field());
            j["t"] = 0.0;
            j["G"] = "0";
            const ModelSpec spec = spec_from_json(j);
            PhiEvaluator phi(spec, fast_opts(0));
            DualOptions opts;
            const ConjugateTable conj = build_conjugate(phi, uniform_grid(1, -1.0, 1.0, 65), opts);
            std::vector<double> scratch;
            const std::function<double(std::span<const double>)> g =
                [&](std::span<const double> m) { return GOverride::spec_g().eval(spec, m, scratch); };
            const LimitFreeEnergy r = limit_free_energy(phi, conj, g, LimitMethod::reduced, opts);
            CHECK(std::abs(r.value) <= 1e-6);
        }

        SUBCASE("G = 0 recovers phi(0); reduced and infsup agree")
        {
            const ModelSpec spec = basic02();
            PhiEvaluator phi(spec, fast_opts(1));
            DualOptions opts;
            const ConjugateTable conj = build_conjugate(phi, uniform_grid(1, -1.0, 1.0, 65), opts);

            auto zero = [](std::span<const double>) { return 0.0; };
            const LimitFreeEnergy rz = limit_free_energy(phi, conj, zero, LimitMethod::reduced, opts);
            const std::vector<double> x0 = {0.0};
            CHECK(std::abs(rz.value - phi.value(x0)) <= 1e-3);

            auto g = [](std::span<const double> m) { return m[0] * m[0]; };
            const LimitFreeEnergy ra = limit_free_energy(phi, conj, g, LimitMethod::reduced, opts);
            const LimitFreeEnergy rb = limit_free_energy(phi, conj, g, LimitMethod::infsup, opts);
            CHECK(std::abs(ra.value - rb.value) <= 2e-3);
        }
    }

    TEST_CASE("J at zero coupling composes from the entropy transform")
    {
        // t = 0 basic model: J(m) = -m^2 + phi*(m) + sup { m'^2 - phi*(m') }
        // with phi* the entropy transform; the constant comes from an
        // independent golden-section maximization of the closed form
        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["t"] = 0.0;
        const ModelSpec spec = spec_from_json(j);
        PhiEvaluator phi(spec, fast_opts(0));
        DualOptions opts;
        const ConjugateTable conj = build_conjugate(phi, uniform_grid(1, -1.0, 1.0, 129), opts);
        const RateFunctionTable jtab = rate_function_j_basic(conj, spec);

        // oracle: maximize m^2 - entropy(m) on [0, 1) by golden section
        double lo = 0.0, hi = 1.0 - 1e-9;
        const double invphi = 0.6180339887498949;
        auto f = [&](double m) { return m * m - binary_entropy_conjugate(m); };
        for (int it = 0; it < 200; ++it) {
            const double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
            if (f(x1) < f(x2))
                lo = x1;
            else
                hi = x2;
        }
        const double c_oracle = f(0.5 * (lo + hi));
        const double m_star = 0.5 * (lo + hi);
        CHECK(m_star == doctest::Approx(0.957504).epsilon(1e-4));  // frozen from the oracle run

        // J(0) equals the normalization constant; the grid minimum is zero
        const size_t mid = 64;  // m = 0 on the 129-point grid
        CHECK(jtab.points[mid][0] == 0.0);
        CHECK(jtab.values[mid] == doctest::Approx(c_oracle).epsilon(2e-4));
        CHECK(jtab.min_value() <= 1e-6);
        for (double v : jtab.values)
            if (std::isfinite(v)) CHECK(v >= -1e-8);
    }

    TEST_CASE("k-envelope is monotone at beta = 0.5")
    {
        const ModelSpec spec = spec_from_json(nlohmann::json::parse(builtin_spec_basic(0.5)));
        CHECK(spec.t == doctest::Approx(0.125));
        const std::vector<double> x0 = {0.0};
        const PhiResult r = phi_of_x(spec, x0, fast_opts(1));
        CHECK(r.value_by_k[1] >= r.value_by_k[0] - 1e-9);
    }

    TEST_CASE("empirical rate approaches the entropy rate at zero coupling")
    {
        // pure prior sampling (t = 0, G = 0) at N = 18 against the entropy
        // table on the bin centers: the bulk matches tightly, while the two
        // deepest occupied bins carry the -(1/N) log(mode mass) normalization
        // defect (about 0.048 at N = 18), which only decays like log N / N
        nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.2));
        j["t"] = 0.0;
        j["G"] = "0";
        const ModelSpec spec = spec_from_json(j);
        const DisorderSample s = sample_disorder(spec, 18, 1);
        const MagnetizationDistribution dist = gibbs_magnetization_dist(spec, s);
        const RateFunctionTable emp = empirical_rate(dist);

        PhiEvaluator phi(spec, fast_opts(0));
        DualOptions opts;
        std::vector<std::vector<double>> centers;
        for (size_t b = 0; b < dist.bin_count(); ++b) centers.push_back(dist.bin_center(b));
        const ConjugateTable conj = build_conjugate(phi, centers, opts);
        auto zero = [](std::span<const double>) { return 0.0; };
        const RateFunctionTable entropy_rate = rate_function_ig(conj, zero);

        double sup_all = 0.0, sup_bulk = 0.0;
        for (size_t b = 0; b < dist.mass.size(); ++b) {
            if (dist.mass[b] <= 0.0) continue;
            const double d = std::abs(emp.values[b] - entropy_rate.values[b]);
            sup_all = std::max(sup_all, d);
            if (dist.mass[b] >= 1e-3) sup_bulk = std::max(sup_bulk, d);
        }
        CHECK(sup_all <= 0.05);
        CHECK(sup_bulk <= 0.02);
    }

    TEST_CASE("optimizer-produced conjugate is convex along the grid")
    {
        const ModelSpec spec = basic02();
        PhiEvaluator phi(spec, fast_opts(1));
        DualOptions opts;
        const ConjugateTable conj = build_conjugate(phi, uniform_grid(1, -0.95, 0.95, 39), opts);
        for (size_t i = 1; i + 1 < conj.values.size(); ++i)
            CHECK(conj.values[i + 1] - 2.0 * conj.values[i] + conj.values[i - 1] >= -1e-3);
    }

    TEST_CASE("reduced and infsup limits agree across the test specs")
    {
        auto skew_basic = [] {
            nlohmann::json j = nlohmann::json::parse(builtin_spec_basic(0.25));
            j["prior"]["weights"] = {0.35, 0.65};
            return j.dump();
        };
        const std::string raws[] = {
            builtin_spec_basic(0.2),
            builtin_spec_basic(0.3),
            builtin_spec_ising_field(),  // t = 0.02, G = m^2
            builtin_spec_mixture3(),
            skew_basic(),
        };
        for (const std::string& raw : raws) {
            const ModelSpec spec = spec_from_json(nlohmann::json::parse(raw));
            PhiEvaluator phi(spec, fast_opts(0));
            DualOptions opts;
            opts.x_points = 129;
            const ConjugateTable conj =
                build_conjugate(phi, uniform_grid(1, -spec.h_bound, spec.h_bound, 33), opts);
            std::vector<double> scratch;
            const std::function<double(std::span<const double>)> g =
                [&](std::span<const double> m) { return GOverride::spec_g().eval(spec, m, scratch); };
            const LimitFreeEnergy ra = limit_free_energy(phi, conj, g, LimitMethod::reduced, opts);
            const LimitFreeEnergy rb = limit_free_energy(phi, conj, g, LimitMethod::infsup, opts);
            CHECK(std::abs(ra.value - rb.value) <= 2e-3);
        }
    }

    TEST_CASE("phi property report on the analytic t = 0 case")
    {
        const ModelSpec spec = field_t0_spec();
        PhiEvaluator phi(spec, fast_opts(0));
        const PhiPropertyReport rep = check_phi_properties(phi, 20, 2.0, 3, 3, 17);
        CHECK(rep.lipschitz_max_ratio <= 1.0 + 1e-6);
        CHECK(rep.min_midpoint_defect >= -1e-6);
        for (size_t i = 0; i < rep.quotient_ratios.size(); ++i)
            CHECK((rep.quotient_ratios[i] <= 0.75 || rep.quotient_gaps[i + 1] <= 1e-6));
    }
}
