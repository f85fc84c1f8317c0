#pragma once

#include <complex>
#include <vector>

namespace zerodisp::special {

using cplx = std::complex<double>;

// Riccati-Bessel functions jhat_l(z) = z j_l(z), yhat_l(z) = z y_l(z)
// (jhat_0 = sin z, yhat_0 = -cos z), valid for complex z.
cplx riccati_j(int ell, cplx z);
cplx riccati_y(int ell, cplx z);

// Gauss-Legendre rule on [a, b].
struct Quadrature {
    std::vector<double> x;
    std::vector<double> w;
};
Quadrature gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Legendre polynomial P_l(x) and the axial harmonic Y_l0 as a function of cos(theta).
double legendre_p(int ell, double x);
double y_l0(int ell, double mu);

// Component k_l(r, r') of the expansion sum_l k_l P_l(cos gamma) for |x - y|
// and |x - y|^2 with |x| = r, |y| = r'.
double legendre_abs(int ell, double r, double rp);
double legendre_sq(int ell, double r, double rp);

// Reduced-line kernels of the operators with 3D kernels |x - y| and |x - y|^2
// acting on wave ell: 4 pi / (2 ell + 1) r r' k_l(r, r').
double reduced_abs_kernel(int ell, double r, double rp);
double reduced_sq_kernel(int ell, double r, double rp);

}  // namespace zerodisp::special
