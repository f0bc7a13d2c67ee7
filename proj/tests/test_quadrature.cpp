// ============================================================================
// Quadrature rules: declared polynomial exactness, positive weights, correct
// reference measures.
// ============================================================================
#include "qinsk/quadrature.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace qinsk;
using Catch::Approx;

namespace {

double monomial_integral_interval(int p) { return 1.0 / (p + 1); }

// \int_T x^a y^b over the unit triangle {x,y >= 0, x+y <= 1} = a! b! / (a+b+2)!
double monomial_integral_triangle(int a, int b)
{
    double value = 1.0;
    for (int i = 1; i <= b; ++i) value *= static_cast<double>(i) / (a + i);
    return value / ((a + b + 1.0) * (a + b + 2.0));
}

} // namespace

TEST_CASE("interval rules integrate monomials to their declared degree")
{
    for (int deg = 0; deg <= 12; ++deg) {
        QuadRule r = interval_rule(deg);
        for (int p = 0; p <= deg; ++p) {
            double s = 0.0;
            for (int q = 0; q < r.size(); ++q)
                s += r.weights[q] * std::pow(r.points[q][0], p);
            CAPTURE(deg, p);
            CHECK(s == Approx(monomial_integral_interval(p)).margin(1e-14));
        }
    }
}

TEST_CASE("triangle rules integrate monomials to their declared degree")
{
    for (int deg = 0; deg <= 10; ++deg) {
        QuadRule r = triangle_rule(deg);
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b) {
                double s = 0.0;
                for (int q = 0; q < r.size(); ++q)
                    s += r.weights[q] * std::pow(r.points[q][0], a) *
                         std::pow(r.points[q][1], b);
                CAPTURE(deg, a, b);
                CHECK(s == Approx(monomial_integral_triangle(a, b)).margin(1e-14));
            }
    }
}

TEST_CASE("quadrature weights are positive and sum to the reference measure")
{
    for (int deg = 0; deg <= 10; ++deg) {
        {
            QuadRule r = interval_rule(deg);
            double s = 0.0;
            for (int q = 0; q < r.size(); ++q) {
                REQUIRE(r.weights[q] > 0.0);
                s += r.weights[q];
            }
            CHECK(s == Approx(1.0));
        }
        {
            QuadRule r = triangle_rule(deg);
            double s = 0.0;
            for (int q = 0; q < r.size(); ++q) {
                REQUIRE(r.weights[q] > 0.0);
                s += r.weights[q];
            }
            CHECK(s == Approx(0.5));
        }
    }
}

TEST_CASE("facet rules match the facet dimension")
{
    // 1D facets are points with unit weight
    QuadRule r1 = facet_rule(1, 4);
    REQUIRE(r1.size() == 1);
    CHECK(r1.weights[0] == Approx(1.0));

    // 2D facets are reference intervals
    QuadRule r2 = facet_rule(2, 6);
    double s = 0.0;
    for (int q = 0; q < r2.size(); ++q) s += r2.weights[q];
    CHECK(s == Approx(1.0));
}
