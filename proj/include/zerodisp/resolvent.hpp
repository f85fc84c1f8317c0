#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zerodisp/grid.hpp"
#include "zerodisp/potential.hpp"

namespace zerodisp::resolvent {

using cplx = std::complex<double>;
using potential::FactorizedPotential;

// e^{i lambda d} / (4 pi d)
cplx free_kernel_3d(cplx lambda, double d);

enum class KernelKind { resolvent, d_resolvent, diffq1, d_diffq1, diffq2, d_diffq2 };

const std::vector<KernelKind>& all_kernel_kinds();
std::string to_string(KernelKind k);

// Total variation of the time-side profile of each kernel at separation d.
double kernel_mass(KernelKind kind, double d);
// Relative error between Gauss-Legendre quadrature of the time-side profile
// and kernel_mass.
double verify_kernel_mass(KernelKind kind, double d, int quad_points);

// Reduced kernel g_l(lambda; r, r') acting on u = r f in wave ell.
cplx wave_kernel(int ell, cplx lambda, double r, double rp);
// (g_l(lambda) - g_l(0)) / lambda, with the exact lambda -> 0 limit.
cplx wave_kernel_diffq1(int ell, cplx lambda, double r, double rp);

struct WaveOperatorMatrix {
    int ell = 0;
    cplx lambda{0.0, 0.0};
    Eigen::MatrixXcd entries;
};

// T_ij = v2_i g_l(lambda; r_i, r_j) v1_j w_j
WaveOperatorMatrix assemble_T(int ell, cplx lambda, const RadialGrid& grid,
                              const FactorizedPotential& fact);

// Same matrix restricted to the index set idx (rows and columns).
Eigen::MatrixXcd assemble_T_on(int ell, cplx lambda, const RadialGrid& grid,
                               const FactorizedPotential& fact, const std::vector<int>& idx);

// Real symmetric matrix of the zero-energy kernel weighted by |V|:
// S_ij = sqrt(w_i) v1_i g_l(0; r_i, r_j) v1_j sqrt(w_j) on idx.
Eigen::MatrixXd symmetric_bs_zero(int ell, const RadialGrid& grid,
                                  const FactorizedPotential& fact, const std::vector<int>& idx);

// Nodes where v1 exceeds rel_cut * max(v1). Rows and columns of T outside
// this set are (numerically) zero.
std::vector<int> active_nodes(const FactorizedPotential& fact, double rel_cut = 1e-9);

// Free reduced resolvent applied to f: sum_j g_l(lambda; r_i, r_j) f_j w_j.
Eigen::VectorXcd free_resolvent_apply(int ell, cplx lambda, const RadialGrid& grid,
                                      const Eigen::VectorXcd& f);

// R_V((lambda + i0)^2) f via R0 - R0 V1 (I + T)^{-1} V2 R0.
Eigen::VectorXcd perturbed_resolvent_apply(cplx lambda, const Eigen::VectorXcd& f, int ell,
                                           const RadialGrid& grid,
                                           const FactorizedPotential& fact,
                                           double tau_inv = 1e-8);

}  // namespace zerodisp::resolvent
