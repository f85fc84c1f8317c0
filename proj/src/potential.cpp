#include "zerodisp/potential.hpp"

#include <cmath>

#include "zerodisp/errors.hpp"

namespace zerodisp {

RadialGrid RadialGrid::uniform(int n, double r_max) {
    if (n < 2 || !(r_max > 0.0)) throw ConfigError("grid needs N >= 2 and R_max > 0");
    RadialGrid g;
    g.r_max = r_max;
    const double h = r_max / n;
    g.r.resize(n);
    g.w = Eigen::VectorXd::Constant(n, h);
    for (int i = 0; i < n; ++i) g.r[i] = (i + 0.5) * h;
    return g;
}

int RadialGrid::count_within(double radius) const {
    int k = 0;
    while (k < size() && r[k] <= radius) ++k;
    return k;
}

}  // namespace zerodisp

namespace zerodisp::potential {

std::string to_string(Family f) {
    switch (f) {
        case Family::square_well: return "square_well";
        case Family::exponential: return "exponential";
        case Family::poly_decay: return "poly_decay";
        case Family::sum_of_wells: return "sum_of_wells";
    }
    return "?";
}

Family family_from_string(const std::string& name) {
    if (name == "square_well") return Family::square_well;
    if (name == "exponential") return Family::exponential;
    if (name == "poly_decay") return Family::poly_decay;
    if (name == "sum_of_wells") return Family::sum_of_wells;
    throw ConfigError("unknown potential family '" + name + "'");
}

void PotentialSpec::validate() const {
    if (!std::isfinite(coupling)) throw ConfigError("coupling must be finite");
    for (double p : params)
        if (!std::isfinite(p)) throw ConfigError("potential params must be finite");
    switch (family) {
        case Family::square_well:
            if (params.size() != 1 || params[0] <= 0.0)
                throw ConfigError("square_well expects params = [R] with R > 0");
            break;
        case Family::exponential:
            if (params.size() != 1 || params[0] <= 0.0)
                throw ConfigError("exponential expects params = [rho] with rho > 0");
            break;
        case Family::poly_decay:
            if (params.size() != 1 || params[0] <= 0.0)
                throw ConfigError("poly_decay expects params = [beta] with beta > 0");
            if (params[0] <= 2.0 && !critical)
                throw ConfigError("poly_decay with beta <= 2 must be flagged critical");
            break;
        case Family::sum_of_wells:
            if (params.empty() || params.size() % 2 != 0)
                throw ConfigError("sum_of_wells expects params = [R1, d1, R2, d2, ...]");
            for (size_t k = 0; k < params.size(); k += 2)
                if (params[k] <= 0.0) throw ConfigError("sum_of_wells radii must be positive");
            break;
    }
}

double PotentialSpec::base(double r) const {
    switch (family) {
        case Family::square_well: return r < params[0] ? -1.0 : 0.0;
        case Family::exponential: return -std::exp(-r / params[0]);
        case Family::poly_decay: return -std::pow(1.0 + r * r, -0.5 * params[0]);
        case Family::sum_of_wells: {
            double v = 0.0;
            for (size_t k = 0; k + 1 < params.size(); k += 2)
                if (r < params[k]) v -= params[k + 1];
            return v;
        }
    }
    return 0.0;
}

PotentialSpec PotentialSpec::with_coupling(double g) const {
    PotentialSpec s = *this;
    s.coupling = g;
    return s;
}

Eigen::VectorXd sample(const PotentialSpec& spec, const RadialGrid& grid) {
    spec.validate();
    if (grid.size() == 0) throw ConfigError("empty grid");
    Eigen::VectorXd v(grid.size());
    for (int i = 0; i < grid.size(); ++i) v[i] = spec.coupling * spec.base(grid.r[i]);
    return v;
}

DecayWeightReport decay_weight_report(const PotentialSpec& spec, const RadialGrid& grid) {
    const Eigen::VectorXd v = sample(spec, grid);
    DecayWeightReport rep;
    const int ks[3] = {0, 2, 4};
    for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            const double r = grid.r[i];
            const double weighted = std::pow(1.0 + r * r, 0.5 * ks[j]) * std::abs(v[i]);
            s += std::pow(weighted, 1.5) * 4.0 * M_PI * r * r * grid.w[i];
        }
        rep.proxies[j] = std::pow(s, 2.0 / 3.0);
        // (r^{k-beta})^{3/2} r^2 is integrable at infinity iff beta - k > 2.
        rep.finite[j] = spec.family != Family::poly_decay || spec.params[0] - ks[j] > 2.0;
    }
    rep.critical = spec.critical;
    rep.decay_hypothesis = rep.finite[1] && !spec.critical;
    return rep;
}

FactorizedPotential factorize(const Eigen::VectorXd& values) {
    FactorizedPotential f;
    f.v1.resize(values.size());
    f.v2.resize(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double a = std::sqrt(std::abs(values[i]));
        f.v1[i] = a;
        f.v2[i] = values[i] > 0.0 ? a : (values[i] < 0.0 ? -a : 0.0);
    }
    return f;
}

}  // namespace zerodisp::potential
