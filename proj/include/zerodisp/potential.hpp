#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zerodisp/grid.hpp"

namespace zerodisp::potential {

enum class Family { square_well, exponential, poly_decay, sum_of_wells };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

// V(r) = coupling * V_base(r), with
//   square_well   params [R]                V_base = -1 on r < R
//   exponential   params [rho]              V_base = -exp(-r/rho)
//   poly_decay    params [beta]             V_base = -(1 + r^2)^(-beta/2)
//   sum_of_wells  params [R1, d1, R2, d2..] V_base = -sum d_k on r < R_k
struct PotentialSpec {
    Family family = Family::square_well;
    std::vector<double> params{1.0};
    double coupling = 1.0;
    bool critical = false;  // allows poly_decay with beta <= 2

    void validate() const;
    double base(double r) const;
    double operator()(double r) const { return coupling * base(r); }
    PotentialSpec with_coupling(double g) const;
};

Eigen::VectorXd sample(const PotentialSpec& spec, const RadialGrid& grid);

struct DecayWeightReport {
    // Grid values of ||<x>^k V||_{L^{3/2}} for k = 0, 2, 4.
    std::array<double, 3> proxies{};
    // Whether the same quantity stays finite as R_max -> infinity.
    std::array<bool, 3> finite{};
    bool critical = false;
    // ⟨x⟩^2 V in the weighted class required for the decay statements.
    bool decay_hypothesis = false;
};

DecayWeightReport decay_weight_report(const PotentialSpec& spec, const RadialGrid& grid);

struct FactorizedPotential {
    Eigen::VectorXd v1;  // |V|^{1/2}
    Eigen::VectorXd v2;  // sgn(V) |V|^{1/2}

    int size() const { return static_cast<int>(v1.size()); }
    Eigen::VectorXd values() const { return v2.cwiseProduct(v1); }
};

FactorizedPotential factorize(const Eigen::VectorXd& values);

}  // namespace zerodisp::potential
