#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "zerodisp/grid.hpp"
#include "zerodisp/potential.hpp"

namespace zerodisp::threshold {

using cplx = std::complex<double>;
using potential::FactorizedPotential;
using potential::PotentialSpec;

enum class Kind { generic, kind1, kind2, kind3 };
std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);

// Singular direction of I + T(0) in wave ell, mapped to its configuration
// space profile u = -sum_j g_l(0; r, r_j) v1_j w_j x_j (3D state (u/r) Y_l0).
struct NullState {
    int ell = 0;
    Eigen::VectorXd profile;
    double singular_value = 0.0;  // relative to ||I + T(0)||_2
    bool degenerate_cluster = false;
};

std::vector<NullState> zero_null_space(const RadialGrid& grid, const FactorizedPotential& fact,
                                       int ell_max, double tau_null = 1e-6);

// A zero-energy state (u/r) Y_l0 given by its reduced profile u.
struct ZeroState {
    int ell = 0;
    Eigen::VectorXd u;
};

// <V, f> over R^3 (vanishes identically for ell >= 1).
double v_pairing(const ZeroState& s, const RadialGrid& grid, const Eigen::VectorXd& v);
// int |V f| over R^3
double v_l1(const ZeroState& s, const RadialGrid& grid, const Eigen::VectorXd& v);
// -<f_a, V f_b> over R^3
double gram_product(const ZeroState& a, const ZeroState& b, const RadialGrid& grid,
                    const Eigen::VectorXd& v);

struct Moments {
    std::array<double, 3> first{};                  // <V f, y_k>
    std::array<std::array<double, 3>, 3> second{};  // <V f, y_k y_l>
    bool e1_member = false;
};

Moments moments(const ZeroState& s, const RadialGrid& grid, const Eigen::VectorXd& v,
                double tau_mom = 1e-8);

struct Resonance {
    ZeroState phi;
    double v_phi = 0.0;     // <V, phi>
    double gram_norm = 0.0; // -<phi, V phi>
    cplx a_const{0.0, 0.0};
};

// Normalizes a resonance direction (-<phi,V phi> = 1, <V,phi> > 0) and, when
// eigenfunctions are present, subtracts P0 V (|x-y|/8pi) V phi.
Resonance canonical_resonance(const ZeroState& direction, const std::vector<ZeroState>& e_basis,
                              const RadialGrid& grid, const Eigen::VectorXd& v);

struct ThresholdReport {
    Kind classification = Kind::generic;
    std::vector<ZeroState> m_basis;  // Gram-orthonormal
    std::vector<double> null_singular_values;
    std::vector<ZeroState> e_basis;  // Gram-orthonormal
    std::vector<bool> e1_flags;
    std::vector<Moments> e_moments;
    std::optional<Resonance> resonance;
    Eigen::MatrixXd gram;
    Eigen::VectorXd gram_eigenvalues;
    bool degenerate_cluster = false;

    int dim_m() const { return static_cast<int>(m_basis.size()); }
    int dim_e() const { return static_cast<int>(e_basis.size()); }
    cplx a_const() const { return resonance ? resonance->a_const : cplx(0.0); }
    // Number of E-states per wave.
    std::map<int, int> e_count_by_wave() const;
};

ThresholdReport classify(const std::vector<NullState>& nulls, const RadialGrid& grid,
                         const Eigen::VectorXd& v, double tau_mom = 1e-8);

// Convenience: null space and classification in one call.
ThresholdReport analyze(const RadialGrid& grid, const Eigen::VectorXd& v, int ell_max,
                        double tau_null = 1e-6, double tau_mom = 1e-8);

// int_0^inf g_l(0; s, r) g_l(0; s, r') ds, the kernel of R0(0)^2 in wave ell.
// For ell = 0 only the part that survives against sources with <V, f> = 0.
double squared_kernel_integral(int ell, double r, double rp);

// L2 inner products int_0^inf u_a u_b dr of zero-energy states in one wave,
// taken on the profiles u = -R0(0) V u extended off the grid (closed form).
Eigen::MatrixXd l2_gram(const std::vector<ZeroState>& states, const RadialGrid& grid,
                        const Eigen::VectorXd& v);

// L2-orthonormal basis (columns, grid values) of the E-states in wave ell.
Eigen::MatrixXd projector_basis(const std::vector<ZeroState>& e_basis, int ell,
                                const RadialGrid& grid, const Eigen::VectorXd& v);

struct TailCheck {
    double coefficient = 0.0;     // fit of f ~ c/|x| on the outer third
    double reference = 0.0;       // -<phi,V>/(4 pi)
    double relative_error = 0.0;
    double fit_residual = 0.0;    // relative residual of the 1/r fit
    double inverse_square_coefficient = 0.0;  // fit of f ~ c2/|x|^2
    double inverse_square_residual = 0.0;
};

TailCheck resonance_tail_check(const ZeroState& phi, const RadialGrid& grid,
                               const Eigen::VectorXd& v);

struct TuneTarget {
    int ell = 0;
    int branch = 0;  // 0 = weakest coupling producing a threshold state
    std::optional<std::pair<double, double>> bracket;
};

// g* such that g* V_base sits exactly at a zero-energy state in wave ell on
// this grid (the coupling of spec is ignored).
double tune_coupling(const PotentialSpec& spec, const TuneTarget& target, const RadialGrid& grid);

struct MatchedTuning {
    PotentialSpec spec;  // parameter set and coupling tuned
    double parameter = 0.0;
    double coupling = 0.0;
    double mismatch = 0.0;  // |g_a - g_b| at the solution
};

// Adjusts params[param_index] inside bracket so both targets share one g*.
MatchedTuning tune_matched(const PotentialSpec& spec, int param_index,
                           std::pair<double, double> bracket, const TuneTarget& a,
                           const TuneTarget& b, const RadialGrid& grid);

struct BlockSystem {
    Eigen::MatrixXcd L00, L01, L10, L11;
};

Eigen::MatrixXcd feshbach_invert(const BlockSystem& bs, double rcond = 1e-13);

struct LaurentOptions {
    double lambda_min = 1e-3;
    double lambda_max = 1e-1;
    int count = 12;            // per sign
    double tolerance = 1e-3;   // relative fit residual
    int threads = 1;
};

struct LaurentCoefficients {
    int ell = 0;
    std::vector<int> nodes;  // grid indices of the rows/columns
    Eigen::MatrixXcd A_minus2, A_minus1, A_0;
    std::vector<double> fit_lambdas;
    double fit_residual = 0.0;
};

LaurentCoefficients laurent_extract(const RadialGrid& grid, const FactorizedPotential& fact,
                                    int ell, const LaurentOptions& opt = {});
std::vector<LaurentCoefficients> laurent_extract(const RadialGrid& grid,
                                                 const FactorizedPotential& fact,
                                                 const std::vector<int>& ells,
                                                 const LaurentOptions& opt = {});

// Reference singular parts on the node set of a Laurent fit.
// V2 P0 V1 with P0 the orthogonal projection onto E in wave ell.
Eigen::MatrixXcd v2_p0_v1(const std::vector<ZeroState>& e_basis, int ell, const RadialGrid& grid,
                          const FactorizedPotential& fact, const std::vector<int>& nodes);
// -a V2 phi (x) V1 phi
Eigen::MatrixXcd resonance_pole(const Resonance& res, const RadialGrid& grid,
                                const FactorizedPotential& fact, const std::vector<int>& nodes);

// c0(lambda) = -<(R0((lambda+i0)^2) - R0(0)) V phi, V phi> / lambda, c0(0) = 1/a.
cplx c0_scalar(cplx lambda, const ZeroState& phi, const RadialGrid& grid, const Eigen::VectorXd& v);

}  // namespace zerodisp::threshold
