#include "zerodisp/resolvent.hpp"

#include <cmath>

#include "zerodisp/errors.hpp"
#include "zerodisp/special.hpp"

namespace zerodisp::resolvent {

namespace {

constexpr cplx I{0.0, 1.0};

double zero_energy_kernel(int ell, double r, double rp) {
    const double lo = std::min(r, rp), hi = std::max(r, rp);
    return lo * std::pow(lo / hi, ell) / (2 * ell + 1);
}

}  // namespace

cplx free_kernel_3d(cplx lambda, double d) {
    if (!(d > 0.0)) throw NumericalError("free_kernel_3d: singular at d = 0");
    return std::exp(I * lambda * d) / (4.0 * M_PI * d);
}

const std::vector<KernelKind>& all_kernel_kinds() {
    static const std::vector<KernelKind> kinds{KernelKind::resolvent, KernelKind::d_resolvent,
                                               KernelKind::diffq1,    KernelKind::d_diffq1,
                                               KernelKind::diffq2,    KernelKind::d_diffq2};
    return kinds;
}

std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::resolvent: return "resolvent";
        case KernelKind::d_resolvent: return "d_resolvent";
        case KernelKind::diffq1: return "diffq1";
        case KernelKind::d_diffq1: return "d_diffq1";
        case KernelKind::diffq2: return "diffq2";
        case KernelKind::d_diffq2: return "d_diffq2";
    }
    return "?";
}

double kernel_mass(KernelKind kind, double d) {
    switch (kind) {
        case KernelKind::resolvent: return 1.0 / (4.0 * M_PI * d);
        case KernelKind::d_resolvent: return 1.0 / (4.0 * M_PI);
        case KernelKind::diffq1: return 1.0 / (4.0 * M_PI);
        case KernelKind::d_diffq1: return d / (8.0 * M_PI);
        case KernelKind::diffq2: return d / (8.0 * M_PI);
        case KernelKind::d_diffq2: return d * d / (24.0 * M_PI);
    }
    return 0.0;
}

double verify_kernel_mass(KernelKind kind, double d, int quad_points) {
    if (quad_points < 16) throw ConfigError("verify_kernel_mass needs at least 16 points");
    // Time-side profiles in sigma on [0, d]. The first two kernels are point
    // masses at sigma = d (Fourier transform of e^{i lambda d} is delta_d).
    double atom = 0.0;
    auto density = [&](double s) -> double {
        switch (kind) {
            case KernelKind::resolvent:
            case KernelKind::d_resolvent: return 0.0;
            case KernelKind::diffq1: return 1.0 / (4.0 * M_PI * d);
            case KernelKind::d_diffq1: return s / (4.0 * M_PI * d);
            case KernelKind::diffq2: return (d - s) / (4.0 * M_PI * d);
            case KernelKind::d_diffq2: return s * (d - s) / (4.0 * M_PI * d);
        }
        return 0.0;
    };
    if (kind == KernelKind::resolvent) atom = 1.0 / (4.0 * M_PI * d);
    if (kind == KernelKind::d_resolvent) atom = d / (4.0 * M_PI * d);

    const auto q = special::gauss_legendre(quad_points, 0.0, d);
    double total = atom;
    for (int i = 0; i < quad_points; ++i) total += q.w[i] * std::abs(density(q.x[i]));
    const double exact = kernel_mass(kind, d);
    return std::abs(total - exact) / exact;
}

cplx wave_kernel(int ell, cplx lambda, double r, double rp) {
    if (lambda == 0.0) return zero_energy_kernel(ell, r, rp);
    const double lo = std::min(r, rp), hi = std::max(r, rp);
    const cplx jl = special::riccati_j(ell, lambda * lo);
    const cplx jh = special::riccati_j(ell, lambda * hi);
    const cplx yh = special::riccati_y(ell, lambda * hi);
    return (-jl * yh + I * jl * jh) / lambda;
}

cplx wave_kernel_diffq1(int ell, cplx lambda, double r, double rp) {
    const double lo = std::min(r, rp), hi = std::max(r, rp);
    if (lambda == 0.0) return ell == 0 ? I * lo * hi : cplx(0.0);
    const cplx jl = special::riccati_j(ell, lambda * lo);
    const cplx jh = special::riccati_j(ell, lambda * hi);
    const cplx odd = I * jl * jh / (lambda * lambda);
    const double g0 = zero_energy_kernel(ell, r, rp);
    cplx even;
    if (std::abs(lambda) * hi < 2e-4) {
        even = lambda * g0 * (hi * hi / (2.0 * (2 * ell - 1)) - lo * lo / (2.0 * (2 * ell + 3)));
    } else {
        const cplx yh = special::riccati_y(ell, lambda * hi);
        even = (-jl * yh / lambda - g0) / lambda;
    }
    return even + odd;
}

std::vector<int> active_nodes(const FactorizedPotential& fact, double rel_cut) {
    const double vmax = fact.v1.size() ? fact.v1.maxCoeff() : 0.0;
    std::vector<int> idx;
    if (vmax <= 0.0) return idx;
    for (int i = 0; i < fact.size(); ++i)
        if (fact.v1[i] > rel_cut * vmax) idx.push_back(i);
    return idx;
}

Eigen::MatrixXcd assemble_T_on(int ell, cplx lambda, const RadialGrid& grid,
                               const FactorizedPotential& fact, const std::vector<int>& idx) {
    if (fact.size() != grid.size())
        throw DimensionError("assemble_T: grid and potential sizes differ");
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXcd t(n, n);
    for (int b = 0; b < n; ++b) {
        const int j = idx[b];
        for (int a = b; a < n; ++a) {
            const int i = idx[a];
            const cplx g = wave_kernel(ell, lambda, grid.r[i], grid.r[j]);
            t(a, b) = fact.v2[i] * g * fact.v1[j] * grid.w[j];
            t(b, a) = fact.v2[j] * g * fact.v1[i] * grid.w[i];
        }
    }
    return t;
}

WaveOperatorMatrix assemble_T(int ell, cplx lambda, const RadialGrid& grid,
                              const FactorizedPotential& fact) {
    if (fact.size() != grid.size())
        throw DimensionError("assemble_T: grid and potential sizes differ");
    std::vector<int> all(grid.size());
    for (int i = 0; i < grid.size(); ++i) all[i] = i;
    WaveOperatorMatrix m;
    m.ell = ell;
    m.lambda = lambda;
    m.entries = assemble_T_on(ell, lambda, grid, fact, all);
    return m;
}

Eigen::MatrixXd symmetric_bs_zero(int ell, const RadialGrid& grid,
                                  const FactorizedPotential& fact, const std::vector<int>& idx) {
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXd s(n, n);
    for (int b = 0; b < n; ++b) {
        const int j = idx[b];
        const double sj = fact.v1[j] * std::sqrt(grid.w[j]);
        for (int a = b; a < n; ++a) {
            const int i = idx[a];
            const double si = fact.v1[i] * std::sqrt(grid.w[i]);
            s(a, b) = s(b, a) = si * zero_energy_kernel(ell, grid.r[i], grid.r[j]) * sj;
        }
    }
    return s;
}

namespace {

// g_l(lambda; r_i, r_j) for all node pairs from per-node Riccati-Bessel values.
class NodeKernel {
public:
    NodeKernel(int ell, cplx lambda, const RadialGrid& grid)
        : ell_(ell), lambda_(lambda), grid_(grid) {
        if (lambda == 0.0) return;
        j_.resize(grid.size());
        y_.resize(grid.size());
        for (int i = 0; i < grid.size(); ++i) {
            j_[i] = special::riccati_j(ell, lambda * grid.r[i]);
            y_[i] = special::riccati_y(ell, lambda * grid.r[i]);
        }
    }
    cplx operator()(int i, int k) const {
        if (lambda_ == 0.0) return zero_energy_kernel(ell_, grid_.r[i], grid_.r[k]);
        const int lo = grid_.r[i] <= grid_.r[k] ? i : k, hi = lo == i ? k : i;
        return (-j_[lo] * y_[hi] + I * j_[lo] * j_[hi]) / lambda_;
    }

private:
    int ell_;
    cplx lambda_;
    const RadialGrid& grid_;
    std::vector<cplx> j_, y_;
};

}  // namespace

Eigen::VectorXcd free_resolvent_apply(int ell, cplx lambda, const RadialGrid& grid,
                                      const Eigen::VectorXcd& f) {
    if (f.size() != grid.size()) throw DimensionError("free_resolvent_apply: size mismatch");
    const int n = grid.size();
    const NodeKernel g(ell, lambda, grid);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i] += g(i, j) * f[j] * grid.w[j];
    return out;
}

Eigen::VectorXcd perturbed_resolvent_apply(cplx lambda, const Eigen::VectorXcd& f, int ell,
                                           const RadialGrid& grid,
                                           const FactorizedPotential& fact, double tau_inv) {
    if (f.size() != grid.size() || fact.size() != grid.size())
        throw DimensionError("perturbed_resolvent_apply: size mismatch");
    const Eigen::VectorXcd r0f = free_resolvent_apply(ell, lambda, grid, f);
    const auto idx = active_nodes(fact);
    if (idx.empty()) return r0f;
    const int n = static_cast<int>(idx.size());

    Eigen::MatrixXcd a = assemble_T_on(ell, lambda, grid, fact, idx);
    a += Eigen::MatrixXcd::Identity(n, n);
    const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXcd>(a).singularValues();
    const double smin = sv[sv.size() - 1];
    if (smin < tau_inv * sv[0])
        throw SingularityError("I + T(lambda) is numerically singular", smin);

    Eigen::VectorXcd rhs(n);
    for (int a_ = 0; a_ < n; ++a_) rhs[a_] = fact.v2[idx[a_]] * r0f[idx[a_]];
    const Eigen::VectorXcd x = a.partialPivLu().solve(rhs);

    const NodeKernel g(ell, lambda, grid);
    Eigen::VectorXcd out = r0f;
    for (int i = 0; i < grid.size(); ++i) {
        cplx s = 0.0;
        for (int b = 0; b < n; ++b) {
            const int j = idx[b];
            s += g(i, j) * grid.w[j] * fact.v1[j] * x[b];
        }
        out[i] -= s;
    }
    return out;
}

}  // namespace zerodisp::resolvent
