#include "zerodisp/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "zerodisp/errors.hpp"
#include "zerodisp/resolvent.hpp"
#include "zerodisp/special.hpp"

namespace zerodisp::evolution {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

WaveSet subtract(const WaveSet& a, const WaveSet& b) {
    WaveSet out = a;
    for (const auto& [ell, u] : b) {
        auto it = out.find(ell);
        if (it == out.end())
            out.emplace(ell, -u);
        else
            it->second -= u;
    }
    return out;
}

double total_l2(const WaveSet& f, const RadialGrid& grid) {
    return norms::lp_norm(f, 2.0, grid);
}

cplx prefactor(double t) { return std::exp(-0.75 * M_PI * I) / std::sqrt(M_PI * t); }

const WaveEigensystem& system_for(const Spectrum& spec, int ell) {
    auto it = spec.find(ell);
    if (it == spec.end())
        throw NumericalError("no eigensystem for wave " + std::to_string(ell));
    return it->second;
}

std::vector<bool> retained(const WaveEigensystem& s) {
    std::vector<bool> keep(s.energies.size(), true);
    for (int k = 0; k < s.energies.size(); ++k)
        if (s.energies[k] < -s.tau_zero) keep[k] = false;
    for (int k : s.zero_space) keep[k] = false;
    return keep;
}

Eigen::VectorXcd coefficients(const WaveEigensystem& s, const Eigen::VectorXcd& u,
                              const RadialGrid& grid) {
    return s.vectors.transpose().cast<cplx>() * u.cwiseProduct(grid.w.cast<cplx>());
}

}  // namespace

double default_tau_zero(const RadialGrid& grid) {
    const double k = M_PI / grid.r_max;
    return 5.0 * k * k;
}

Tridiagonal kinetic_operator(int ell, const RadialGrid& grid) {
    const int n = grid.size();
    if (n < 3) throw DimensionError("kinetic_operator needs at least 3 nodes");
    const double h = grid.h();
    Eigen::VectorXd p(n + 1), q(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double r = i < n ? grid.r[i] : grid.r_max + 0.5 * h;  // ghost node
        p[i] = std::pow(r, ell + 1) * h / (2 * ell + 1);
        q[i] = std::pow(r, -ell);
    }
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = p[i + 1] * q[i] - p[i] * q[i + 1];

    Tridiagonal t;
    t.diag.resize(n);
    t.off.resize(n - 1);
    for (int i = 0; i + 1 < n; ++i) t.off[i] = -1.0 / d[i];
    t.diag[0] = p[1] / (p[0] * d[0]);
    for (int i = 1; i < n; ++i)
        t.diag[i] = (p[i + 1] * q[i - 1] - p[i - 1] * q[i + 1]) / (d[i - 1] * d[i]);
    // The interior formula at the last node couples to the ghost; an odd
    // reflection there puts the Dirichlet condition at R_max.
    t.diag[n - 1] += 1.0 / d[n - 1];
    return t;
}

WaveEigensystem discretize_H(int ell, const RadialGrid& grid, const Eigen::VectorXd& v,
                             double tau_zero) {
    if (v.size() != grid.size()) throw DimensionError("discretize_H: size mismatch");
    Tridiagonal t = kinetic_operator(ell, grid);
    t.diag += v;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(t.diag, t.off, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");

    WaveEigensystem s;
    s.ell = ell;
    s.energies = es.eigenvalues();
    s.vectors = es.eigenvectors();
    for (int i = 0; i < grid.size(); ++i) s.vectors.row(i) /= std::sqrt(grid.w[i]);
    s.tau_zero = tau_zero > 0.0 ? tau_zero : default_tau_zero(grid);
    for (int k = 0; k < s.energies.size(); ++k) {
        if (s.energies[k] < -s.tau_zero) ++s.neg_count;
        if (std::abs(s.energies[k]) < s.tau_zero) s.zero_modes.push_back(k);
    }
    return s;
}

Spectrum build_spectrum(const std::vector<int>& ells, const RadialGrid& grid,
                        const Eigen::VectorXd& v, double tau_zero) {
    Spectrum s;
    for (int ell : ells)
        if (!s.count(ell)) s.emplace(ell, discretize_H(ell, grid, v, tau_zero));
    return s;
}

std::vector<int> assign_zero_space(Spectrum& spec, const threshold::ThresholdReport& report) {
    std::vector<int> short_waves;
    for (auto& [ell, s] : spec) s.zero_space.clear();
    if (report.classification != threshold::Kind::kind2 &&
        report.classification != threshold::Kind::kind3)
        return short_waves;
    for (const auto& [ell, count] : report.e_count_by_wave()) {
        auto it = spec.find(ell);
        if (it == spec.end()) continue;
        auto& s = it->second;
        std::vector<int> cand = s.zero_modes;
        std::sort(cand.begin(), cand.end(), [&](int a, int b) {
            return std::abs(s.energies[a]) < std::abs(s.energies[b]);
        });
        if (static_cast<int>(cand.size()) < count) short_waves.push_back(ell);
        cand.resize(std::min<size_t>(cand.size(), count));
        s.zero_space = cand;
    }
    return short_waves;
}

WaveSet pc_project(const WaveSet& u, const Spectrum& spec, const RadialGrid& grid) {
    WaveSet out;
    for (const auto& [ell, f] : u) {
        const auto& s = system_for(spec, ell);
        const auto keep = retained(s);
        const Eigen::VectorXcd c = coefficients(s, f, grid);
        Eigen::VectorXcd g = f;
        for (int k = 0; k < c.size(); ++k)
            if (!keep[k]) g -= c[k] * s.vectors.col(k).cast<cplx>();
        out.emplace(ell, std::move(g));
    }
    return out;
}

WaveSet evolve(const WaveSet& u0, double t, const Spectrum& spec, const RadialGrid& grid) {
    WaveSet out;
    for (const auto& [ell, f] : u0) {
        const auto& s = system_for(spec, ell);
        const auto keep = retained(s);
        Eigen::VectorXcd c = coefficients(s, f, grid);
        for (int k = 0; k < c.size(); ++k)
            c[k] = keep[k] ? c[k] * std::exp(-I * s.energies[k] * t) : cplx(0.0);
        out.emplace(ell, s.vectors.cast<cplx>() * c);
    }
    return out;
}

Eigen::VectorXcd mu_t(double t, const RadialGrid& grid, int quad_points) {
    if (!(t > 0.0)) throw NumericalError("mu_t: t must be positive");
    const auto q = special::gauss_legendre(quad_points, 0.0, 1.0);
    Eigen::VectorXcd m(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        const double r = grid.r[i];
        const double x = r * r / (4.0 * t);
        cplx s = 0.0;
        for (int k = 0; k < quad_points; ++k)
            s += q.w[k] * (std::exp(I * x) - std::exp(I * q.x[k] * q.x[k] * x));
        m[i] = I / r * s;
    }
    return m;
}

WaveSet r_t_apply(double t, const WaveSet& u, const threshold::Resonance& res,
                  const RadialGrid& grid) {
    if (!(t > 0.0)) throw NumericalError("r_t_apply: t must be positive");
    const int ell = res.phi.ell;
    Eigen::VectorXcd zeta(grid.size());
    for (int i = 0; i < grid.size(); ++i)
        zeta[i] = std::exp(I * grid.r[i] * grid.r[i] / (4.0 * t)) * res.phi.u[i];
    WaveSet out;
    auto it = u.find(ell);
    const cplx pairing =
        it == u.end() ? cplx(0.0) : (zeta.cwiseProduct(it->second).cwiseProduct(grid.w.cast<cplx>())).sum();
    out.emplace(ell, res.a_const * prefactor(t) * pairing * zeta);
    return out;
}

SOperator::SOperator(const RadialGrid& grid, const Eigen::VectorXd& v,
                     const std::vector<threshold::ZeroState>& e_basis)
    : grid_(grid), v_(v) {
    active_ = resolvent::active_nodes(potential::factorize(v));
    const int n = grid.size(), na = static_cast<int>(active_.size());
    std::vector<int> ells;
    for (const auto& e : e_basis)
        if (std::find(ells.begin(), ells.end(), e.ell) == ells.end()) ells.push_back(e.ell);
    for (int ell : ells) {
        Wave w;
        w.p = threshold::projector_basis(e_basis, ell, grid, v_);
        w.k_abs.resize(n, na);
        for (int i = 0; i < n; ++i)
            for (int b = 0; b < na; ++b)
                w.k_abs(i, b) =
                    special::reduced_abs_kernel(ell, grid.r[i], grid.r[active_[b]]) / (8.0 * M_PI);
        w.k_sq.resize(na, na);
        for (int a = 0; a < na; ++a)
            for (int b = 0; b < na; ++b)
                w.k_sq(a, b) = special::reduced_sq_kernel(ell, grid.r[active_[a]],
                                                          grid.r[active_[b]]) /
                               (24.0 * M_PI);
        waves_.emplace(ell, std::move(w));
    }
}

Eigen::VectorXcd SOperator::p0(const Wave& w, const Eigen::VectorXcd& f) const {
    const Eigen::VectorXcd c = w.p.transpose().cast<cplx>() * f.cwiseProduct(grid_.w.cast<cplx>());
    return w.p.cast<cplx>() * c;
}

WaveSet SOperator::quadratic_term(const WaveSet& u) const {
    WaveSet out;
    const int na = static_cast<int>(active_.size());
    for (const auto& [ell, w] : waves_) {
        auto it = u.find(ell);
        if (it == u.end()) continue;
        const Eigen::VectorXcd pu = p0(w, it->second);
        Eigen::VectorXcd y(na);
        for (int a = 0; a < na; ++a) y[a] = v_[active_[a]] * pu[active_[a]] * grid_.w[active_[a]];
        const Eigen::VectorXcd ky = w.k_sq.cast<cplx>() * y;
        Eigen::VectorXcd z = Eigen::VectorXcd::Zero(grid_.size());
        for (int a = 0; a < na; ++a) z[active_[a]] = v_[active_[a]] * ky[a];
        out.emplace(ell, -I * p0(w, z));
    }
    return out;
}

WaveSet SOperator::apply(double t, const WaveSet& u) const {
    if (!(t > 0.0)) throw NumericalError("s_t_apply: t must be positive");
    const Eigen::VectorXcd mu = mu_t(t, grid_);
    const int na = static_cast<int>(active_.size());
    WaveSet out = quadratic_term(u);
    for (const auto& [ell, w] : waves_) {
        auto it = u.find(ell);
        if (it == u.end()) continue;
        const Eigen::VectorXcd& f = it->second;
        // mu_t(x) (|x-y|/8pi) V P0 u
        const Eigen::VectorXcd pu = p0(w, f);
        Eigen::VectorXcd y(na);
        for (int a = 0; a < na; ++a) y[a] = v_[active_[a]] * pu[active_[a]] * grid_.w[active_[a]];
        const Eigen::VectorXcd t2 = mu.cwiseProduct(w.k_abs.cast<cplx>() * y);
        // P0 V (|x-y|/8pi) mu_t(y) u
        const Eigen::VectorXcd g = mu.cwiseProduct(f).cwiseProduct(grid_.w.cast<cplx>());
        const Eigen::VectorXcd kg = w.k_abs.transpose().cast<cplx>() * g;
        Eigen::VectorXcd z = Eigen::VectorXcd::Zero(grid_.size());
        for (int a = 0; a < na; ++a) z[active_[a]] = v_[active_[a]] * kg[a];
        const Eigen::VectorXcd t3 = p0(w, z);
        out[ell] = prefactor(t) * (out[ell] + t2 + t3);
    }
    return out;
}

WaveSet s_t_apply(double t, const WaveSet& u, const std::vector<threshold::ZeroState>& e_basis,
                  const RadialGrid& grid, const Eigen::VectorXd& v) {
    return SOperator(grid, v, e_basis).apply(t, u);
}

WaveSet gaussian_data(const DataSpec& d, const RadialGrid& grid) {
    if (!(d.sigma > 0.0)) throw ConfigError("data sigma must be positive");
    if (d.waves.empty()) throw ConfigError("data needs at least one wave");
    if (!d.weights.empty() && d.weights.size() != d.waves.size())
        throw ConfigError("data weights must match data waves");
    WaveSet out;
    for (size_t k = 0; k < d.waves.size(); ++k) {
        const int ell = d.waves[k];
        if (ell < 0) throw ConfigError("data waves must be nonnegative");
        Eigen::VectorXcd u(grid.size());
        for (int i = 0; i < grid.size(); ++i) {
            const double r = grid.r[i];
            u[i] = std::pow(r, ell + 1) * std::exp(-r * r / (2.0 * d.sigma * d.sigma));
        }
        const double nrm = std::sqrt((u.cwiseAbs2().cwiseProduct(grid.w)).sum());
        const double wt = d.weights.empty() ? 1.0 : d.weights[k];
        out[ell] = u * (wt / nrm);
    }
    return out;
}

int EvolutionTrace::kind_index(const std::string& name) const {
    for (size_t k = 0; k < norm_names.size(); ++k)
        if (norm_names[k] == name) return static_cast<int>(k);
    return -1;
}

EvolutionTrace decay_experiment(const RadialGrid& grid, const Eigen::VectorXd& v,
                                const threshold::ThresholdReport& report,
                                const ExperimentOptions& opt) {
    using threshold::Kind;
    if (opt.time_count < 6) throw ConfigError("evolve needs at least 6 times");
    EvolutionTrace tr;
    const WaveSet data = gaussian_data(opt.data, grid);

    Spectrum spec = build_spectrum(opt.data.waves, grid, v);
    for (int ell : assign_zero_space(spec, report))
        tr.warnings.push_back("wave " + std::to_string(ell) +
                              ": fewer near-zero modes than eigenfunctions");
    const WaveSet pc = pc_project(data, spec, grid);
    tr.initial_l2 = total_l2(pc, grid);
    if (!(tr.initial_l2 > 0.0)) throw NumericalError("P_c removes all of the initial data");

    // Spectral content of P_c u0 per wave.
    for (const auto& [ell, f] : pc) {
        const auto& s = spec.at(ell);
        const Eigen::VectorXcd c = coefficients(s, f, grid);
        const double total = c.squaredNorm();
        if (total <= 0.0) continue;
        double cum = 0.0;
        for (int k = 0; k < c.size(); ++k) {
            cum += std::norm(c[k]);
            if (cum >= opt.spectral_fraction * total) {
                tr.e_cut = std::max(tr.e_cut, s.energies[k]);
                break;
            }
        }
    }
    tr.e_cut = std::max(tr.e_cut, default_tau_zero(grid));
    tr.r_obs = opt.r_obs_fraction * grid.r_max;
    tr.t_budget = opt.budget_factor * (grid.r_max - tr.r_obs) / (2.0 * std::sqrt(tr.e_cut));
    double t_hi = tr.t_budget;
    if (opt.t_max) {
        t_hi = *opt.t_max;
        if (t_hi > tr.t_budget)
            tr.warnings.push_back("stale-time: t_max exceeds the anti-reflection budget");
    }
    const double t_lo = t_hi * std::pow(10.0, -opt.decades);
    for (int k = 0; k < opt.time_count; ++k)
        tr.times.push_back(t_lo * std::pow(t_hi / t_lo, static_cast<double>(k) / (opt.time_count - 1)));

    const bool use_r = report.resonance.has_value();
    const bool use_s = report.classification == Kind::kind2 || report.classification == Kind::kind3;
    tr.subtracted = use_r && use_s ? "R+S" : use_r ? "R" : use_s ? "S" : "";
    std::optional<SOperator> sop;
    if (use_s) sop.emplace(grid, v, report.e_basis);

    const size_t nk = opt.norm_kinds.size();
    for (const auto& k : opt.norm_kinds) tr.norm_names.push_back(k.name());
    tr.norms.assign(nk, {});
    tr.residual_norms.assign(nk, {});
    tr.residual_without_s.assign(nk, {});

    for (double t : tr.times) {
        const WaveSet full = evolve(pc, t, spec, grid);
        WaveSet z_no_s = full;
        if (use_r) z_no_s = subtract(z_no_s, r_t_apply(t, data, *report.resonance, grid));
        WaveSet z = z_no_s;
        if (use_s) z = subtract(z, sop->apply(t, data));

        for (size_t k = 0; k < nk; ++k) {
            tr.norms[k].push_back(norms::evaluate(opt.norm_kinds[k], full, grid, tr.r_obs));
            tr.residual_norms[k].push_back(norms::evaluate(opt.norm_kinds[k], z, grid, tr.r_obs));
            tr.residual_without_s[k].push_back(
                norms::evaluate(opt.norm_kinds[k], z_no_s, grid, tr.r_obs));
        }
        std::map<int, double> wb;
        for (const auto& [ell, u] : full) {
            WaveSet one{{ell, u}};
            wb[ell] = norms::lp_norm(one, 2.0, grid, tr.r_obs);
        }
        tr.wave_breakdown.push_back(wb);
        tr.unitarity_error = std::max(
            tr.unitarity_error, std::abs(total_l2(full, grid) - tr.initial_l2) / tr.initial_l2);
        if (opt.keep_states) tr.states.push_back(full);
    }

    {
        const double t1 = tr.times.front(), t2 = tr.times.back();
        const WaveSet a = evolve(evolve(pc, t1, spec, grid), t2, spec, grid);
        const WaveSet b = evolve(pc, t1 + t2, spec, grid);
        tr.semigroup_error = total_l2(subtract(a, b), grid) / tr.initial_l2;
    }

    // Interior mass should not grow once the packet leaves; growth means
    // something came back from the boundary.
    tr.fit_end = static_cast<int>(tr.times.size());
    double low = 1e300;
    for (size_t k = 0; k < tr.times.size(); ++k) {
        double m = 0.0;
        for (const auto& [ell, x] : tr.wave_breakdown[k]) m += x * x;
        m = std::sqrt(m);
        if (k > 0 && m > 1.05 * low) {
            tr.fit_end = std::max(6, static_cast<int>(k));
            tr.warnings.push_back("interior norm re-growth at t = " + std::to_string(tr.times[k]) +
                                  "; fit window truncated");
            break;
        }
        low = std::min(low, m);
    }
    const double t_fit_hi = tr.times[tr.fit_end - 1];
    for (size_t k = 0; k < nk; ++k) {
        tr.fits.push_back(norms::fit_power(tr.times, tr.norms[k], 0.0, t_fit_hi));
        tr.residual_fits.push_back(norms::fit_power(tr.times, tr.residual_norms[k], 0.0, t_fit_hi));
        tr.residual_without_s_fits.push_back(
            norms::fit_power(tr.times, tr.residual_without_s[k], 0.0, t_fit_hi));
    }
    return tr;
}

}  // namespace zerodisp::evolution
