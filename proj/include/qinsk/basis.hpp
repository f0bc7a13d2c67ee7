// ============================================================================
// qinsk/basis.hpp - orthonormal modal bases on the reference cells
//
// 1D: shifted Legendre polynomials, orthonormal on [0,1]:
//       b_k(x) = sqrt(2k+1) P_k(2x-1).
//
// 2D: Dubiner basis, orthonormal on the reference triangle
//     {x,y >= 0, x+y <= 1}:
//       b_{mn}(x,y) = sqrt(2(2m+1)(m+n+1)) f_m(x,y) P_n^{(2m+1,0)}(2y-1)
//     where f_m(x,y) = P_m(u/w) w^m with u = 2x-(1-y), w = 1-y.  The
//     f_m are evaluated by a polynomial recurrence that never divides by
//     w, so the apex y=1 needs no special casing:
//       f_0 = 1,  f_1 = u,
//       (m+1) f_{m+1} = (2m+1) u f_m - m w^2 f_{m-1}.
//
// Because the physical map is affine, the physical basis on an element K is
// b_k(ref(x)) / sqrt(|det J_K|), which keeps every element mass matrix equal
// to the identity.
//
// Modes are ordered by total degree, then by decreasing x-degree, so mode 0
// is always the constant.
// ============================================================================
#pragma once

#include "qinsk/common.hpp"

#include <cmath>
#include <vector>

namespace qinsk {

inline int space_dimension(int dim, int degree)
{
    if (degree < 0) throw std::invalid_argument("space_dimension: degree must be >= 0");
    if (dim == 1) return degree + 1;
    if (dim == 2) return (degree + 1) * (degree + 2) / 2;
    throw std::invalid_argument("space_dimension: dim must be 1 or 2");
}

// Jacobi polynomials P_n^{(alpha,0)} and derivatives at z, for n = 0..nmax.
inline void jacobi_all(int nmax, double alpha, double z,
                       std::vector<double>& p, std::vector<double>& dp)
{
    p.assign(nmax + 1, 0.0);
    dp.assign(nmax + 1, 0.0);
    p[0] = 1.0;
    if (nmax == 0) return;
    p[1] = 0.5 * alpha + 0.5 * (alpha + 2.0) * z;
    dp[1] = 0.5 * (alpha + 2.0);
    for (int n = 2; n <= nmax; ++n) {
        double a = 2.0 * n * (n + alpha) * (2.0 * n + alpha - 2.0);
        double b1 = 2.0 * n + alpha - 1.0;
        double b2 = (2.0 * n + alpha) * (2.0 * n + alpha - 2.0);
        double b3 = alpha * alpha;
        double c = 2.0 * (n + alpha - 1.0) * (n - 1.0) * (2.0 * n + alpha);
        p[n] = (b1 * (b2 * z + b3) * p[n - 1] - c * p[n - 2]) / a;
        dp[n] = (b1 * (b2 * z + b3) * dp[n - 1] + b1 * b2 * p[n - 1] - c * dp[n - 2]) / a;
    }
}

// Values and reference gradients of all modes at a reference point.
// grad[k] uses only the first `dim` components.
inline void basis_eval(int dim, int degree, const Vec& xi,
                       std::vector<double>& val, std::vector<Vec>& grad)
{
    const int nm = space_dimension(dim, degree);
    val.assign(nm, 0.0);
    grad.assign(nm, Vec::Zero());

    if (dim == 1) {
        // Legendre values/derivatives on [0,1] via recurrence at t = 2x-1.
        double t = 2.0 * xi[0] - 1.0;
        std::vector<double> p(degree + 1), dp(degree + 1, 0.0);
        p[0] = 1.0;
        if (degree >= 1) {
            p[1] = t;
            dp[1] = 1.0;
        }
        for (int k = 2; k <= degree; ++k) {
            p[k] = ((2 * k - 1) * t * p[k - 1] - (k - 1) * p[k - 2]) / k;
            dp[k] = ((2 * k - 1) * (p[k - 1] + t * dp[k - 1]) - (k - 1) * dp[k - 2]) / k;
        }
        for (int k = 0; k <= degree; ++k) {
            double s = std::sqrt(2.0 * k + 1.0);
            val[k] = s * p[k];
            grad[k][0] = s * dp[k] * 2.0;  // d/dx = 2 d/dt
        }
        return;
    }

    // dim == 2: Dubiner basis.
    const double x = xi[0], y = xi[1];
    const double u = 2.0 * x - (1.0 - y);
    const double w = 1.0 - y;

    // f_m, df_m/dx, df_m/dy for m = 0..degree   (du/dx=2, du/dy=1, dw/dy=-1)
    std::vector<double> f(degree + 1), fx(degree + 1, 0.0), fy(degree + 1, 0.0);
    f[0] = 1.0;
    if (degree >= 1) {
        f[1] = u;
        fx[1] = 2.0;
        fy[1] = 1.0;
    }
    for (int m = 2; m <= degree; ++m) {
        double c1 = (2.0 * m - 1.0) / m, c2 = (m - 1.0) / m;
        f[m] = c1 * u * f[m - 1] - c2 * w * w * f[m - 2];
        fx[m] = c1 * (2.0 * f[m - 1] + u * fx[m - 1]) - c2 * w * w * fx[m - 2];
        fy[m] = c1 * (f[m - 1] + u * fy[m - 1]) - c2 * (-2.0 * w * f[m - 2] + w * w * fy[m - 2]);
    }

    // Jacobi factors g_n = P_n^{(2m+1,0)}(2y-1), per m.
    const double z = 2.0 * y - 1.0;
    int k = 0;
    std::vector<std::vector<double>> jp(degree + 1), jdp(degree + 1);
    for (int m = 0; m <= degree; ++m)
        jacobi_all(degree - m, 2.0 * m + 1.0, z, jp[m], jdp[m]);

    for (int t = 0; t <= degree; ++t)
        for (int m = t; m >= 0; --m) {
            int n = t - m;
            double norm = std::sqrt(2.0 * (2.0 * m + 1.0) * (m + n + 1.0));
            double g = jp[m][n], dg = jdp[m][n] * 2.0;  // d/dy = 2 d/dz
            val[k] = norm * f[m] * g;
            grad[k][0] = norm * fx[m] * g;
            grad[k][1] = norm * (fy[m] * g + f[m] * dg);
            ++k;
        }
}

} // namespace qinsk
