#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "mattisglass/quadrature.hpp"

using namespace mattis;

namespace {

double moment(const GaussHermite& q, int p)
{
    double acc = 0.0;
    for (int i = 0; i < q.size(); ++i) acc += q.weights()[static_cast<size_t>(i)] * std::pow(q.nodes()[static_cast<size_t>(i)], p);
    return acc;
}

}  // namespace

TEST_SUITE("quadrature")
{
    TEST_CASE("normalization and moments")
    {
        for (int n : {2, 3, 8, 16, 32, 64, 256}) {
            const GaussHermite q(n);
            CHECK(std::abs(moment(q, 0) - 1.0) <= 1e-12);
            CHECK(std::abs(moment(q, 1)) <= 1e-12);
            CHECK(std::abs(moment(q, 3)) <= 1e-12);
            CHECK(std::abs(moment(q, 2) - 1.0) <= 1e-10);
            if (n >= 3) CHECK(std::abs(moment(q, 4) - 3.0) <= 1e-9);
            if (n >= 8) CHECK(std::abs(moment(q, 6) - 15.0) <= 1e-8);
        }
    }

    TEST_CASE("smooth expectation")
    {
        const GaussHermite q(32);
        double acc = 0.0;
        for (int i = 0; i < q.size(); ++i) acc += q.weights()[static_cast<size_t>(i)] * std::cos(q.nodes()[static_cast<size_t>(i)]);
        CHECK(acc == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));  // E cos Z = e^{-1/2}
    }

    TEST_CASE("edge cases")
    {
        const GaussHermite one(1);
        CHECK(one.size() == 1);
        CHECK(one.nodes()[0] == 0.0);
        CHECK(one.weights()[0] == 1.0);
        CHECK_THROWS_AS(GaussHermite(0), std::invalid_argument);
    }
}
