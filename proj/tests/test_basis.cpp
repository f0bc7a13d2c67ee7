// ============================================================================
// Modal bases: dimensions, orthonormality on the reference elements, and
// gradient consistency against finite differences.
// ============================================================================
#include "qinsk/basis.hpp"
#include "qinsk/quadrature.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <vector>

using namespace qinsk;
using Catch::Approx;

TEST_CASE("modal space dimensions")
{
    CHECK(space_dimension(1, 0) == 1);
    CHECK(space_dimension(1, 3) == 4);
    CHECK(space_dimension(2, 0) == 1);
    CHECK(space_dimension(2, 1) == 3);
    CHECK(space_dimension(2, 2) == 6);
    CHECK(space_dimension(2, 4) == 15);
    CHECK_THROWS_AS(space_dimension(3, 1), std::invalid_argument);
    CHECK_THROWS_AS(space_dimension(1, -1), std::invalid_argument);
}

TEST_CASE("reference bases are orthonormal")
{
    for (int dim = 1; dim <= 2; ++dim) {
        for (int p = 0; p <= 4; ++p) {
            const int nm = space_dimension(dim, p);
            QuadRule rule = dim == 1 ? interval_rule(2 * p + 2) : triangle_rule(2 * p + 2);
            std::vector<double> bv;
            std::vector<Vec> bg;
            Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nm, nm);
            for (int q = 0; q < rule.size(); ++q) {
                basis_eval(dim, p, rule.points[q], bv, bg);
                for (int i = 0; i < nm; ++i)
                    for (int j = 0; j < nm; ++j)
                        gram(i, j) += rule.weights[q] * bv[i] * bv[j];
            }
            CAPTURE(dim, p);
            CHECK((gram - Eigen::MatrixXd::Identity(nm, nm)).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
}

TEST_CASE("basis gradients match central finite differences")
{
    const double eps = 1e-6;
    std::vector<double> bv, bp, bm;
    std::vector<Vec> bg, dummy;
    for (int dim = 1; dim <= 2; ++dim) {
        const int p = 3;
        const int nm = space_dimension(dim, p);
        // probe well inside the reference element
        Vec xi = dim == 1 ? Vec(0.37, 0.0) : Vec(0.31, 0.41);
        basis_eval(dim, p, xi, bv, bg);
        for (int c = 0; c < dim; ++c) {
            Vec xp = xi, xm = xi;
            xp[c] += eps;
            xm[c] -= eps;
            basis_eval(dim, p, xp, bp, dummy);
            basis_eval(dim, p, xm, bm, dummy);
            for (int i = 0; i < nm; ++i) {
                double fd = (bp[i] - bm[i]) / (2.0 * eps);
                CAPTURE(dim, c, i);
                CHECK(bg[i][c] == Approx(fd).margin(1e-7 * std::max(1.0, std::abs(fd))));
            }
        }
    }
}

TEST_CASE("first basis mode is the normalized constant")
{
    std::vector<double> bv;
    std::vector<Vec> bg;
    basis_eval(1, 2, Vec(0.3, 0.0), bv, bg);
    CHECK(bv[0] == Approx(1.0));  // reference interval has unit measure
    basis_eval(2, 2, Vec(0.2, 0.3), bv, bg);
    CHECK(bv[0] == Approx(std::sqrt(2.0)));  // reference triangle has measure 1/2
    CHECK(bg[0].norm() == Approx(0.0).margin(1e-15));
}
