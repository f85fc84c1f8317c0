#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zerodisp/grid.hpp"

namespace zerodisp::norms {

// Reduced profiles keyed by ell; the 3D function is sum_l (u_l(r)/r) Y_l0.
using WaveSet = std::map<int, Eigen::VectorXcd>;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NormKind {
    enum class Tag { lp, lorentz, sup_interior } tag = Tag::sup_interior;
    double p = kInf;
    double q = kInf;

    static NormKind lp(double p) { return {Tag::lp, p, p}; }
    static NormKind lorentz(double p, double q) { return {Tag::lorentz, p, q}; }
    static NormKind sup() { return {Tag::sup_interior, kInf, kInf}; }
    std::string name() const;
    static NormKind parse(const std::string& name);
};

// Function values on the cells (r_i, cos theta_k) inside r <= window, with
// their 3D measures 2 pi w_k r_i^2 h_i.
struct CellValues {
    std::vector<double> values;
    std::vector<double> measures;
};

CellValues cell_values(const WaveSet& f, const RadialGrid& grid, double window = kInf,
                       int angular_points = 16);

struct RearrangementProfile {
    std::vector<double> levels;    // strictly decreasing, positive
    std::vector<double> measures;  // measure of {|f| >= level}, nondecreasing
};

RearrangementProfile rearrangement(const CellValues& cells);

double lp_norm(const WaveSet& f, double p, const RadialGrid& grid, double window = kInf);
double lorentz_norm(const WaveSet& f, double p, double q, const RadialGrid& grid,
                    double window = kInf);
double lorentz_from_profile(const RearrangementProfile& prof, double p, double q);
double sup_interior(const WaveSet& f, const RadialGrid& grid, double window);
double evaluate(const NormKind& kind, const WaveSet& f, const RadialGrid& grid, double window);

struct PowerFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
    double t_min = 0.0;
    double t_max = 0.0;
};

PowerFit fit_power(const std::vector<double>& times, const std::vector<double>& values,
                   double t_lo = 0.0, double t_hi = kInf);

}  // namespace zerodisp::norms
