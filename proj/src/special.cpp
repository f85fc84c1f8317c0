#include "zerodisp/special.hpp"

#include <cmath>
#include <stdexcept>

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_legendre.h>

namespace zerodisp::special {

namespace {

cplx series_j(int ell, cplx z) {
    // z^{l+1}/(2l+1)!! * sum_k (-z^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
    cplx lead = z;
    for (int k = 1; k <= ell; ++k) lead *= z / static_cast<double>(2 * k + 1);
    const cplx x = -0.5 * z * z;
    cplx term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= x / static_cast<double>(k * (2 * ell + 2 * k + 1));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return lead * sum;
}

}  // namespace

cplx riccati_j(int ell, cplx z) {
    if (ell < 0) throw std::invalid_argument("riccati_j: negative ell");
    if (ell == 0) return std::sin(z);
    if (std::abs(z) <= ell + 1.0) return series_j(ell, z);
    cplx s0 = std::sin(z), s1 = std::sin(z) / z - std::cos(z);
    for (int l = 1; l < ell; ++l) {
        const cplx s2 = static_cast<double>(2 * l + 1) / z * s1 - s0;
        s0 = s1;
        s1 = s2;
    }
    return s1;
}

cplx riccati_y(int ell, cplx z) {
    if (ell < 0) throw std::invalid_argument("riccati_y: negative ell");
    cplx s0 = -std::cos(z);
    if (ell == 0) return s0;
    cplx s1 = -std::cos(z) / z - std::sin(z);
    for (int l = 1; l < ell; ++l) {
        const cplx s2 = static_cast<double>(2 * l + 1) / z * s1 - s0;
        s0 = s1;
        s1 = s2;
    }
    return s1;
}

Quadrature gauss_legendre(int n, double a, double b) {
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
    if (!t) throw std::runtime_error("gauss_legendre: allocation failed");
    Quadrature q;
    q.x.resize(n);
    q.w.resize(n);
    for (int i = 0; i < n; ++i)
        gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &q.x[i], &q.w[i], t);
    gsl_integration_glfixed_table_free(t);
    return q;
}

double legendre_p(int ell, double x) { return gsl_sf_legendre_Pl(ell, x); }

double y_l0(int ell, double mu) {
    return std::sqrt((2 * ell + 1) / (4.0 * M_PI)) * legendre_p(ell, mu);
}

double legendre_abs(int ell, double r, double rp) {
    const double lo = std::min(r, rp), hi = std::max(r, rp);
    const double ratio = lo / hi;
    return hi * std::pow(ratio, ell) *
           (ratio * ratio / (2 * ell + 3) - 1.0 / (2 * ell - 1));
}

double legendre_sq(int ell, double r, double rp) {
    if (ell == 0) return r * r + rp * rp;
    if (ell == 1) return -2.0 * r * rp;
    return 0.0;
}

double reduced_abs_kernel(int ell, double r, double rp) {
    return 4.0 * M_PI / (2 * ell + 1) * r * rp * legendre_abs(ell, r, rp);
}

double reduced_sq_kernel(int ell, double r, double rp) {
    return 4.0 * M_PI / (2 * ell + 1) * r * rp * legendre_sq(ell, r, rp);
}

}  // namespace zerodisp::special
