// ============================================================================
// qinsk/quadrature.hpp - Gauss quadrature on the reference interval/triangle
//
// Reference cells:
//   interval  [0,1]
//   triangle  {(x,y) : x,y >= 0, x+y <= 1}   (area 1/2)
//
// Interval rules are Gauss-Legendre.  Triangle rules are built from a tensor
// Gauss rule on [0,1]^2 pushed through the Duffy map
//     x = a(1-b),  y = b,   dx dy = (1-b) da db,
// which yields strictly positive weights and any requested polynomial
// exactness degree.  All rules are exact for total degree <= `degree`.
// ============================================================================
#pragma once

#include "qinsk/common.hpp"

#include <cmath>
#include <vector>

namespace qinsk {

struct QuadRule {
    std::vector<Vec> points;      // reference coordinates
    std::vector<double> weights;  // sum = reference measure
    int degree = 0;               // guaranteed polynomial exactness

    int size() const { return static_cast<int>(points.size()); }
};

// n-point Gauss-Legendre rule on [0,1], exact for degree 2n-1.
// Nodes are found by Newton iteration on P_n with the standard
// Chebyshev-based initial guess; converges to machine precision.
inline void gauss_legendre_unit(int n, std::vector<double>& x, std::vector<double>& w)
{
    if (n < 1) throw std::invalid_argument("gauss_legendre_unit: n must be >= 1");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        // Root of P_n on [-1,1], counted from the right.
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Evaluate P_n(z) and P_n'(z) by the three-term recurrence.
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n, p0 = P_{n-1}
            pp = n * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        // Map from [-1,1] to [0,1].
        x[i] = 0.5 * (1.0 - z);  // reverse order; harmless
        w[i] = 1.0 / ((1.0 - z * z) * pp * pp);
    }
}

// Quadrature on the reference interval, exact to `degree`.
inline QuadRule interval_rule(int degree)
{
    if (degree < 0) throw std::invalid_argument("interval_rule: degree must be >= 0");
    int n = degree / 2 + 1;  // 2n-1 >= degree
    std::vector<double> x, w;
    gauss_legendre_unit(n, x, w);
    QuadRule rule;
    rule.degree = degree;
    for (int i = 0; i < n; ++i) {
        rule.points.push_back(Vec(x[i], 0.0));
        rule.weights.push_back(w[i]);
    }
    return rule;
}

// Quadrature on the reference triangle, exact to `degree`.
// Under the Duffy map a monomial x^i y^j (i+j <= degree) becomes
// a^i (1-b)^{i+1} b^j, so we need 1D exactness `degree` in a and
// `degree + 1` in b.
inline QuadRule triangle_rule(int degree)
{
    if (degree < 0) throw std::invalid_argument("triangle_rule: degree must be >= 0");
    int na = degree / 2 + 1;
    int nb = (degree + 1) / 2 + 1;
    std::vector<double> xa, wa, xb, wb;
    gauss_legendre_unit(na, xa, wa);
    gauss_legendre_unit(nb, xb, wb);
    QuadRule rule;
    rule.degree = degree;
    for (int ib = 0; ib < nb; ++ib)
        for (int ia = 0; ia < na; ++ia) {
            double a = xa[ia], b = xb[ib];
            rule.points.push_back(Vec(a * (1.0 - b), b));
            rule.weights.push_back(wa[ia] * wb[ib] * (1.0 - b));
        }
    return rule;
}

// Quadrature for a facet of a d-dimensional element: a single point with
// weight 1 in 1D, a Gauss rule on the unit interval in 2D.  Points are
// parameters along the facet; the mesh layer maps them to physical space.
inline QuadRule facet_rule(int dim, int degree)
{
    if (dim == 1) {
        QuadRule rule;
        rule.degree = degree;
        rule.points.push_back(Vec(0.0, 0.0));
        rule.weights.push_back(1.0);
        return rule;
    }
    if (dim == 2) return interval_rule(degree);
    throw std::invalid_argument("facet_rule: dim must be 1 or 2");
}

} // namespace qinsk
