#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zerodisp/grid.hpp"
#include "zerodisp/norms.hpp"
#include "zerodisp/threshold.hpp"

namespace zerodisp::evolution {

using norms::WaveSet;

double default_tau_zero(const RadialGrid& grid);

// Symmetric tridiagonal kinetic operator for wave ell: the exact inverse of
// the matrix K_ij = g_l(0; r_i, r_j) w_j, with a Dirichlet condition at R_max.
// For ell = 0 this is the usual three-point stencil.
struct Tridiagonal {
    Eigen::VectorXd diag;
    Eigen::VectorXd off;
};
Tridiagonal kinetic_operator(int ell, const RadialGrid& grid);

struct WaveEigensystem {
    int ell = 0;
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd vectors;   // orthonormal columns in the grid inner product
    double tau_zero = 0.0;
    int neg_count = 0;              // energies below -tau_zero
    std::vector<int> zero_modes;    // |E| < tau_zero
    std::vector<int> zero_space;    // modes removed as the zero eigenspace
};

WaveEigensystem discretize_H(int ell, const RadialGrid& grid, const Eigen::VectorXd& v,
                             double tau_zero = -1.0);

using Spectrum = std::map<int, WaveEigensystem>;

Spectrum build_spectrum(const std::vector<int>& ells, const RadialGrid& grid,
                        const Eigen::VectorXd& v, double tau_zero = -1.0);

// Marks, per wave, as many near-zero modes as the threshold analysis found
// eigenfunctions there (kind2/kind3 only). Returns waves where fewer
// candidates than eigenfunctions were available.
std::vector<int> assign_zero_space(Spectrum& spec, const threshold::ThresholdReport& report);

WaveSet pc_project(const WaveSet& u, const Spectrum& spec, const RadialGrid& grid);
WaveSet evolve(const WaveSet& u0, double t, const Spectrum& spec, const RadialGrid& grid);

Eigen::VectorXcd mu_t(double t, const RadialGrid& grid, int quad_points = 64);

WaveSet r_t_apply(double t, const WaveSet& u, const threshold::Resonance& res,
                  const RadialGrid& grid);

class SOperator {
public:
    SOperator(const RadialGrid& grid, const Eigen::VectorXd& v,
              const std::vector<threshold::ZeroState>& e_basis);
    WaveSet apply(double t, const WaveSet& u) const;
    // Only the -i P0 V |x-y|^2/(24 pi) V P0 term, without the t-prefactor.
    WaveSet quadratic_term(const WaveSet& u) const;

private:
    struct Wave {
        Eigen::MatrixXd p;      // L2-orthonormal basis of E in this wave
        Eigen::MatrixXd k_abs;  // |x-y|/(8 pi) reduced kernel, rows all nodes, cols active
        Eigen::MatrixXd k_sq;   // |x-y|^2/(24 pi) reduced kernel on active x active
    };
    Eigen::VectorXcd p0(const Wave& w, const Eigen::VectorXcd& f) const;
    const RadialGrid& grid_;
    Eigen::VectorXd v_;
    std::vector<int> active_;
    std::map<int, Wave> waves_;
};

WaveSet s_t_apply(double t, const WaveSet& u, const std::vector<threshold::ZeroState>& e_basis,
                  const RadialGrid& grid, const Eigen::VectorXd& v);

// u_l = A r^{l+1} exp(-r^2 / (2 sigma^2)), each wave normalized to weight_l in L2.
struct DataSpec {
    double sigma = 0.3;
    std::vector<int> waves{0};
    std::vector<double> weights;  // defaults to 1 per wave
};
WaveSet gaussian_data(const DataSpec& d, const RadialGrid& grid);

struct ExperimentOptions {
    DataSpec data;
    int time_count = 12;
    double decades = 1.0;
    double r_obs_fraction = 0.25;
    double spectral_fraction = 0.999;
    double budget_factor = 0.8;
    std::optional<double> t_max;  // overrides the anti-reflection budget
    std::vector<norms::NormKind> norm_kinds{norms::NormKind::sup(),
                                            norms::NormKind::lorentz(3.0, norms::kInf),
                                            norms::NormKind::lp(2.0)};
    bool keep_states = true;
};

struct EvolutionTrace {
    std::vector<double> times;
    std::vector<WaveSet> states;
    std::vector<std::string> norm_names;
    std::vector<std::vector<double>> norms;           // [kind][time]
    std::vector<std::vector<double>> residual_norms;  // Z = full - subtracted terms
    std::vector<std::vector<double>> residual_without_s;
    std::vector<std::map<int, double>> wave_breakdown;  // interior L2 per wave
    std::vector<norms::PowerFit> fits, residual_fits, residual_without_s_fits;
    std::string subtracted;  // "", "R", "S", "R+S"
    double r_obs = 0.0;
    double e_cut = 0.0;
    double t_budget = 0.0;
    double initial_l2 = 0.0;
    double unitarity_error = 0.0;
    double semigroup_error = 0.0;
    int fit_end = 0;  // fits use times[0, fit_end)
    std::vector<std::string> warnings;

    int kind_index(const std::string& name) const;
};

EvolutionTrace decay_experiment(const RadialGrid& grid, const Eigen::VectorXd& v,
                                const threshold::ThresholdReport& report,
                                const ExperimentOptions& opt);

}  // namespace zerodisp::evolution
