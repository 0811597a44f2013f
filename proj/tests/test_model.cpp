#include "doctest.h"

#include <cmath>

#include "mattisglass/model.hpp"
#include "mattisglass/rng.hpp"
#include "mattisglass/spec_io.hpp"
#include "mattisglass/verify.hpp"

using namespace mattis;

namespace {

ModelSpec ising_spec() { return spec_from_json(nlohmann::json::parse(builtin_spec_basic(0.2))); }

}  // namespace

TEST_SUITE("model")
{
    TEST_CASE("ising spec validates with L_h = 1")
    {
        const ModelSpec spec = ising_spec();
        CHECK(spec.validated);
        CHECK(spec.h_bound == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(spec.prior_mass == doctest::Approx(1.0).epsilon(1e-14));
    }

    TEST_CASE("non-monotone path is rejected")
    {
        std::vector<SymMat> values = {SymMat::scalar(1.0), SymMat::scalar(0.5)};
        CHECK_THROWS_WITH_AS(StepPath(1, {0.5}, values).check_monotone("path"),
                             doctest::Contains("non-monotone"), SpecError);
    }

    TEST_CASE("span-deficient prior is rejected")
    {
        nlohmann::json j = nlohmann::json::parse(builtin_spec_vector_d2());
        j["prior"]["support"] = {{1.0, 0.0}, {-1.0, 0.0}};
        j["prior"]["weights"] = {0.5, 0.5};
        CHECK_THROWS_WITH_AS(spec_from_json(j), doctest::Contains("span"), SpecError);
    }

    TEST_CASE("other validation errors")
    {
        nlohmann::json base = nlohmann::json::parse(builtin_spec_basic(0.2));

        nlohmann::json bad_t = base;
        bad_t["t"] = -0.1;
        CHECK_THROWS_AS(spec_from_json(bad_t), SpecError);

        nlohmann::json big_tau = base;
        big_tau["prior"]["support"] = {{-1.5}, {1.0}};
        CHECK_THROWS_WITH_AS(spec_from_json(big_tau), doctest::Contains("unit ball"), SpecError);

        nlohmann::json bad_probs = base;
        bad_probs["chi"]["probs"] = {0.5, 0.6};
        CHECK_THROWS_WITH_AS(spec_from_json(bad_probs), doctest::Contains("sum to 1"), SpecError);

        nlohmann::json bad_weight = base;
        bad_weight["prior"]["weights"] = {0.0, 1.0};
        CHECK_THROWS_AS(spec_from_json(bad_weight), SpecError);

        nlohmann::json bad_path = base;
        bad_path["q"] = {{"zetas", {0.5}}, {"values", {{1.0}, {0.25}}}};
        CHECK_THROWS_WITH_AS(spec_from_json(bad_path), doctest::Contains("non-monotone"), SpecError);
    }

    TEST_CASE("mixture gradient closed forms")
    {
        const Mixture sq = Mixture::scalar({0.0, 1.0});  // xi(a) = a^2
        CHECK(sq.grad(SymMat::scalar(0.5))(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(sq.grad(SymMat::scalar(0.0))(0, 0) == 0.0);

        const Mixture quad = Mixture::quadratic(2, 1.0);
        const SymMat g = quad.grad(SymMat::identity(2));
        CHECK(g(0, 0) == doctest::Approx(2.0));
        CHECK(g(1, 1) == doctest::Approx(2.0));
        CHECK(g(0, 1) == doctest::Approx(0.0));
    }

    TEST_CASE("gradient matches central finite differences")
    {
        RngStream rng(7, RngPurpose::test, 1);
        const Mixture mix = Mixture::scalar({0.2, 0.7, 0.3});
        for (int trial = 0; trial < 50; ++trial) {
            const double a = rng.uniform(-0.9, 0.9);
            const double h = 1e-5;
            const double fd =
                (mix.value(SymMat::scalar(a + h)) - mix.value(SymMat::scalar(a - h))) / (2.0 * h);
            CHECK(mix.grad(SymMat::scalar(a))(0, 0) == doctest::Approx(fd).epsilon(1e-6));
        }

        const Mixture quad = Mixture::quadratic(2, 0.6);
        for (int trial = 0; trial < 50; ++trial) {
            SymMat a(2);
            for (int i = 0; i < 2; ++i)
                for (int j = i; j < 2; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
            const SymMat g = quad.grad(a);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    SymMat ap = a, am = a;
                    const double h = 1e-6;
                    ap(i, j) += h;
                    am(i, j) -= h;
                    const double fd = (quad.value(ap) - quad.value(am)) / (2.0 * h);
                    CHECK(std::abs(g(i, j) - fd) <= 1e-6);
                }
        }
    }

    TEST_CASE("theta examples and positivity")
    {
        const Mixture sq = Mixture::scalar({0.0, 1.0});
        CHECK(sq.theta(SymMat::scalar(0.5)) == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(sq.theta(SymMat::scalar(0.0)) == 0.0);

        const Mixture cube = Mixture::scalar({0.0, 0.0, 1.0});  // xi(a) = a^3
        CHECK(cube.theta(SymMat::scalar(1.0)) == doctest::Approx(2.0).epsilon(1e-15));

        RngStream rng(11, RngPurpose::test, 2);
        const Mixture mix = Mixture::scalar({0.5, 0.4, 0.3});
        for (int trial = 0; trial < 100; ++trial)
            CHECK(mix.theta(SymMat::scalar(rng.uniform(0.0, 1.0))) >= -1e-12);

        const Mixture quad = Mixture::quadratic(2, 0.7);
        for (int trial = 0; trial < 100; ++trial) {
            // random PSD a = v v^T + w w^T with entries of magnitude <= 1
            SymMat a(2);
            for (int r = 0; r < 2; ++r) {
                std::vector<double> v = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
                a.add_outer(v);
            }
            CHECK(quad.theta(a) >= -1e-12);
        }
    }

    TEST_CASE("path evaluation conventions")
    {
        const StepPath constant = StepPath::constant(SymMat::scalar(0.3));
        CHECK(constant.at(0.7)(0, 0) == 0.3);
        CHECK(constant.at(0.0)(0, 0) == 0.3);
        CHECK(constant.at(1.0)(0, 0) == 0.3);

        const StepPath jump(1, {0.5}, {SymMat::scalar(0.1), SymMat::scalar(0.4)});
        CHECK(jump.at(0.5)(0, 0) == 0.4);   // left-closed at the jump
        CHECK(jump.at(0.49)(0, 0) == 0.1);
        CHECK(jump.at(1.0)(0, 0) == 0.4);   // q(1) is the limit value

        CHECK_THROWS_AS(jump.at(-0.1), std::invalid_argument);
        CHECK_THROWS_AS(jump.at(1.1), std::invalid_argument);
    }

    TEST_CASE("path monotonicity in s")
    {
        RngStream rng(3, RngPurpose::test, 3);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> zetas = {rng.uniform(0.1, 0.45), rng.uniform(0.5, 0.9)};
            double v = rng.uniform(0.0, 0.4);
            std::vector<SymMat> values = {SymMat::scalar(v)};
            for (int l = 0; l < 2; ++l) {
                v += rng.uniform(0.0, 0.4);
                values.push_back(SymMat::scalar(v));
            }
            const StepPath p(1, zetas, values);
            p.check_monotone("test path");
            for (int probe = 0; probe < 10; ++probe) {
                double s1 = rng.uniform(0.0, 1.0), s2 = rng.uniform(0.0, 1.0);
                if (s1 > s2) std::swap(s1, s2);
                CHECK(min_eigenvalue(p.at(s2) - p.at(s1)) >= -1e-10);
            }
        }
    }

    TEST_CASE("spec JSON round trip preserves the hash")
    {
        for (const std::string& raw : {builtin_spec_basic(0.2), builtin_spec_mixture3(),
                                       builtin_spec_vector_d2()}) {
            const ModelSpec a = spec_from_json(nlohmann::json::parse(raw));
            const ModelSpec b = spec_from_json(spec_to_json(a));
            CHECK(spec_hash(a) == spec_hash(b));
            CHECK(a.h_bound == b.h_bound);
        }
    }

    TEST_CASE("matrices serialize row-major")
    {
        nlohmann::json j = nlohmann::json::parse(builtin_spec_vector_d2());
        j["q"] = {{"zetas", nlohmann::json::array()}, {"values", {{0.2, 0.1, 0.1, 0.3}}}};
        const ModelSpec spec = spec_from_json(j);
        CHECK(spec.q.value(0)(0, 0) == 0.2);
        CHECK(spec.q.value(0)(0, 1) == 0.1);
        CHECK(spec.q.value(0)(1, 1) == 0.3);
    }

    TEST_CASE("scalar mixture requires D = 1")
    {
        nlohmann::json j = nlohmann::json::parse(builtin_spec_vector_d2());
        j["xi"] = {{"kind", "scalar-mixture"}, {"betas", {0.0, 1.0}}};
        CHECK_THROWS_AS(spec_from_json(j), SpecError);
    }
}
