// ============================================================================
// Interior penalty forms and the discrete gradient: symmetry, semidefiniteness,
// kernel of constants, polynomial exactness, and penalty scaling.
// ============================================================================
#include "qinsk/forms.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace qinsk;
using Catch::Approx;

namespace {

double max_asymmetry(const SparseMat& A)
{
    Eigen::MatrixXd D(A);
    return (D - D.transpose()).lpNorm<Eigen::Infinity>();
}

double max_rayleigh(const SparseMat& A, int n, std::uint64_t seed, int trials = 8)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double worst = -1e300;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = gauss(rng);
        worst = std::max(worst, x.dot(A * x) / x.squaredNorm());
    }
    return worst;
}

} // namespace

TEST_CASE("penalty floor grows quadratically with the degree")
{
    CHECK(min_penalty(1) == Approx(40.0));
    CHECK(min_penalty(2) == Approx(90.0));
    CHECK(min_penalty(3) == Approx(160.0));
}

TEST_CASE("scalar diffusion form: symmetric, nonpositive, kills constants")
{
    for (int degree : {1, 2}) {
        Mesh m = build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 3, 2);
        DgSpace sp(m, degree);
        SparseMat A1 = assemble_a1(sp, min_penalty(degree));
        CAPTURE(degree);
        CHECK(max_asymmetry(A1) < 1e-11);
        CHECK(max_rayleigh(A1, sp.scalar_size(), 7) < 1e-12);

        Eigen::VectorXd ones = l2_project_scalar(sp, [](const Vec&) { return 1.0; });
        CHECK((A1 * ones).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("vector viscosity form: symmetric, nonpositive, no-slip on the boundary")
{
    Mesh m = build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 2, 3);
    DgSpace sp(m, 1);
    SparseMat A2 = assemble_a2(sp, min_penalty(1));
    CHECK(max_asymmetry(A2) < 1e-11);
    CHECK(max_rayleigh(A2, sp.field_size(2), 11) < 1e-12);

    // the boundary penalty sees constant vectors (unlike the interior-only
    // scalar form), so constants are NOT in the kernel
    Eigen::VectorXd ones = l2_project(sp, 2, [](const Vec&, double* o) { o[0] = o[1] = 1.0; });
    CHECK(ones.dot(A2 * ones) < -1e-3);
}

TEST_CASE("full stress tensor form reduces sensibly and stays semidefinite")
{
    Mesh m = build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 2, 2);
    DgSpace sp(m, 1);
    const double sigma = min_penalty(1);
    SparseMat Ans = assemble_a2_ns(sp, 0.001, 0.005, sigma);
    CHECK(max_asymmetry(Ans) < 1e-12);
    CHECK(max_rayleigh(Ans, sp.field_size(2), 13) < 1e-13);

    // eta1 scales the deviatoric part: doubling both viscosities doubles the form
    SparseMat Ans2 = assemble_a2_ns(sp, 0.002, 0.010, 2.0 * sigma);
    Eigen::MatrixXd D1(Ans), D2(Ans2);
    CHECK((D2 - 2.0 * D1).lpNorm<Eigen::Infinity>() < 1e-11);
}

TEST_CASE("discrete gradient is exact on continuous polynomials")
{
    SECTION("interval, quadratic")
    {
        Mesh m = build_interval_mesh(-1.0, 1.0, 7);
        DgSpace sp(m, 2);
        SparseMat G = assemble_gradient(sp);
        Eigen::VectorXd w =
            l2_project_scalar(sp, [](const Vec& x) { return 3.0 * x[0] * x[0] - x[0]; });
        Eigen::VectorXd gexact =
            l2_project(sp, 1, [](const Vec& x, double* o) { o[0] = 6.0 * x[0] - 1.0; });
        CHECK((G * w - gexact).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    SECTION("rectangle, bilinear-in-the-space")
    {
        Mesh m = build_rectangle_mesh(0.0, 1.0, 0.0, 1.0, 3, 3);
        DgSpace sp(m, 2);
        SparseMat G = assemble_gradient(sp);
        Eigen::VectorXd w =
            l2_project_scalar(sp, [](const Vec& x) { return x[0] * x[1] + 2.0 * x[0]; });
        Eigen::VectorXd gexact = l2_project(sp, 2, [](const Vec& x, double* o) {
            o[0] = x[1] + 2.0;
            o[1] = x[0];
        });
        CHECK((G * w - gexact).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("discrete gradient of a discontinuous field sees the jumps")
{
    // one-element-wide step: the central flux spreads the jump over the
    // neighbors, so G w must differ from the broken gradient (which is zero)
    Mesh m = build_interval_mesh(0.0, 1.0, 4);
    DgSpace sp(m, 1);
    SparseMat G = assemble_gradient(sp);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(sp.scalar_size());
    // piecewise constant 0,0,1,1 -> one interior jump
    w[2 * sp.nmodes] = std::sqrt(0.25);  // mode-0 coefficient for value 1 on element 2
    w[3 * sp.nmodes] = std::sqrt(0.25);
    Eigen::VectorXd g = G * w;
    CHECK(g.lpNorm<Eigen::Infinity>() > 0.1);

    // total integral of G w equals the boundary flux of w: w(1) - w(0) = 1
    double total = 0.0;
    for (int e = 0; e < m.num_elements(); ++e)
        for (int q = 0; q < sp.nvq; ++q) {
            size_t qq = static_cast<size_t>(e) * sp.nvq + q;
            double gv = 0.0;
            for (int i = 0; i < sp.nmodes; ++i)
                gv += g[e * sp.nmodes + i] * sp.vol_val[qq * sp.nmodes + i];
            total += sp.vol_weight[qq] * gv;
        }
    CHECK(total == Approx(1.0).margin(1e-12));
}
