#include "zerodisp/threshold.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/toms748_solve.hpp>

#include "parallel.hpp"
#include "zerodisp/errors.hpp"
#include "zerodisp/resolvent.hpp"
#include "zerodisp/special.hpp"

namespace zerodisp::threshold {

namespace {

constexpr cplx I{0.0, 1.0};

struct AngularRule {
    std::vector<double> mu, wmu;
    int nphi = 32;
};

const AngularRule& angular_rule() {
    static const AngularRule rule = [] {
        AngularRule r;
        const auto q = special::gauss_legendre(16);
        r.mu = q.x;
        r.wmu = q.w;
        return r;
    }();
    return rule;
}

Eigen::VectorXd zero_profile(int ell, const RadialGrid& grid, const FactorizedPotential& fact,
                             const std::vector<int>& idx, const Eigen::VectorXd& x) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        double s = 0.0;
        for (size_t b = 0; b < idx.size(); ++b) {
            const int j = idx[b];
            s += resolvent::wave_kernel(ell, 0.0, grid.r[i], grid.r[j]).real() * fact.v1[j] *
                 grid.w[j] * x[b];
        }
        u[i] = -s;
    }
    return u;
}

// Rotates a set of same-wave states into a Gram-orthonormal basis.
std::vector<ZeroState> gram_orthonormalize(const std::vector<ZeroState>& states,
                                           const RadialGrid& grid, const Eigen::VectorXd& v) {
    const int k = static_cast<int>(states.size());
    Eigen::MatrixXd g(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) g(a, b) = gram_product(states[a], states[b], grid, v);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Gram matrix -<u, V v> on the null space is not positive definite");
    const Eigen::MatrixXd c = llt.matrixU().solve(Eigen::MatrixXd::Identity(k, k));
    std::vector<ZeroState> out(k);
    for (int b = 0; b < k; ++b) {
        out[b].ell = states[0].ell;
        out[b].u = Eigen::VectorXd::Zero(grid.size());
        for (int a = 0; a < k; ++a) out[b].u += c(a, b) * states[a].u;
    }
    return out;
}

std::vector<double> tuned_couplings(const PotentialSpec& spec, int ell, const RadialGrid& grid) {
    const Eigen::VectorXd base = potential::sample(spec.with_coupling(1.0), grid);
    const auto fact = potential::factorize(base);
    const auto idx = resolvent::active_nodes(fact);
    if (idx.empty()) throw TuningError("tune_coupling: potential vanishes on the grid");
    bool nonpositive = true;
    for (int i : idx) nonpositive = nonpositive && base[i] <= 0.0;

    std::vector<double> gs;
    if (nonpositive) {
        // T = -D S D^{-1} with S symmetric positive semidefinite.
        const Eigen::MatrixXd s = resolvent::symmetric_bs_zero(ell, grid, fact, idx);
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues();
        for (int i = 0; i < ev.size(); ++i)
            if (ev[i] > 0.0) gs.push_back(1.0 / ev[i]);
    } else {
        const Eigen::MatrixXd t = resolvent::assemble_T_on(ell, 0.0, grid, fact, idx).real();
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(t).eigenvalues();
        for (int i = 0; i < ev.size(); ++i)
            if (std::abs(ev[i].imag()) <= 1e-10 * std::abs(ev[i]) && ev[i].real() < 0.0)
                gs.push_back(-1.0 / ev[i].real());
    }
    std::sort(gs.begin(), gs.end());
    return gs;
}

}  // namespace

std::string to_string(Kind k) {
    switch (k) {
        case Kind::generic: return "generic";
        case Kind::kind1: return "kind1";
        case Kind::kind2: return "kind2";
        case Kind::kind3: return "kind3";
    }
    return "?";
}

Kind kind_from_string(const std::string& s) {
    if (s == "generic") return Kind::generic;
    if (s == "kind1") return Kind::kind1;
    if (s == "kind2") return Kind::kind2;
    if (s == "kind3") return Kind::kind3;
    throw ConfigError("unknown classification '" + s + "'");
}

std::vector<NullState> zero_null_space(const RadialGrid& grid, const FactorizedPotential& fact,
                                       int ell_max, double tau_null) {
    if (fact.size() != grid.size()) throw DimensionError("zero_null_space: size mismatch");
    std::vector<NullState> out;
    const auto idx = resolvent::active_nodes(fact);
    if (idx.empty()) return out;
    const int n = static_cast<int>(idx.size());
    for (int ell = 0; ell <= ell_max; ++ell) {
        Eigen::MatrixXd a = resolvent::assemble_T_on(ell, 0.0, grid, fact, idx).real();
        a += Eigen::MatrixXd::Identity(n, n);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
        const Eigen::VectorXd sv = svd.singularValues();
        std::vector<NullState> wave;
        for (int k = n - 1; k >= 0; --k) {
            const double rel = sv[k] / sv[0];
            if (rel >= tau_null) break;
            NullState s;
            s.ell = ell;
            s.singular_value = rel;
            s.profile = zero_profile(ell, grid, fact, idx, svd.matrixV().col(k));
            wave.push_back(std::move(s));
        }
        if (wave.size() > 1)
            for (auto& s : wave) s.degenerate_cluster = true;
        out.insert(out.end(), wave.begin(), wave.end());
    }
    return out;
}

double v_pairing(const ZeroState& s, const RadialGrid& grid, const Eigen::VectorXd& v) {
    if (s.ell != 0) return 0.0;
    double acc = 0.0;
    for (int i = 0; i < grid.size(); ++i) acc += v[i] * s.u[i] * grid.r[i] * grid.w[i];
    return std::sqrt(4.0 * M_PI) * acc;
}

double v_l1(const ZeroState& s, const RadialGrid& grid, const Eigen::VectorXd& v) {
    const auto& ang = angular_rule();
    double angular = 0.0;
    for (size_t k = 0; k < ang.mu.size(); ++k)
        angular += 2.0 * M_PI * ang.wmu[k] * std::abs(special::y_l0(s.ell, ang.mu[k]));
    double acc = 0.0;
    for (int i = 0; i < grid.size(); ++i) acc += std::abs(v[i] * s.u[i]) * grid.r[i] * grid.w[i];
    return angular * acc;
}

double gram_product(const ZeroState& a, const ZeroState& b, const RadialGrid& grid,
                    const Eigen::VectorXd& v) {
    if (a.ell != b.ell) return 0.0;
    double acc = 0.0;
    for (int i = 0; i < grid.size(); ++i) acc += v[i] * a.u[i] * b.u[i] * grid.w[i];
    return -acc;
}

Moments moments(const ZeroState& s, const RadialGrid& grid, const Eigen::VectorXd& v,
                double tau_mom) {
    const auto& ang = angular_rule();
    std::array<double, 3> b{};
    std::array<std::array<double, 3>, 3> a{};
    double abs_y = 0.0;
    for (size_t k = 0; k < ang.mu.size(); ++k) {
        const double mu = ang.mu[k];
        const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        const double y = special::y_l0(s.ell, mu);
        for (int p = 0; p < ang.nphi; ++p) {
            const double ph = 2.0 * M_PI * p / ang.nphi;
            const double wt = ang.wmu[k] * 2.0 * M_PI / ang.nphi;
            const std::array<double, 3> n{st * std::cos(ph), st * std::sin(ph), mu};
            abs_y += wt * std::abs(y);
            for (int c = 0; c < 3; ++c) {
                b[c] += wt * y * n[c];
                for (int d = 0; d < 3; ++d) a[c][d] += wt * y * n[c] * n[d];
            }
        }
    }
    double i1 = 0.0, i2 = 0.0, j1 = 0.0, j2 = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        const double r = grid.r[i], vu = v[i] * s.u[i] * grid.w[i];
        i1 += vu * r * r;
        i2 += vu * r * r * r;
        j1 += std::abs(vu) * r * r;
        j2 += std::abs(vu) * r * r * r;
    }
    Moments m;
    bool vanish = true;
    for (int c = 0; c < 3; ++c) {
        m.first[c] = i1 * b[c];
        vanish = vanish && std::abs(m.first[c]) <= tau_mom * j1 * abs_y;
        for (int d = 0; d < 3; ++d) {
            m.second[c][d] = i2 * a[c][d];
            vanish = vanish && std::abs(m.second[c][d]) <= tau_mom * j2 * abs_y;
        }
    }
    m.e1_member = vanish;
    return m;
}

double squared_kernel_integral(int ell, double r, double rp) {
    const double lo = std::min(r, rp), hi = std::max(r, rp);
    const double ratio = std::pow(lo / hi, ell);
    const double inner = lo * lo * lo * ratio / (2 * ell + 3);
    const double middle = lo * ratio * (hi * hi - lo * lo) / 2.0;
    // For ell = 0 the divergent piece is proportional to <V, f> and drops out
    // for eigenfunctions; what remains is the finite part -lo hi^2.
    const double outer = ell == 0 ? -lo * hi * hi : lo * hi * hi * ratio / (2 * ell - 1);
    return (inner + middle + outer) / ((2 * ell + 1) * (2 * ell + 1));
}

Eigen::MatrixXd l2_gram(const std::vector<ZeroState>& states, const RadialGrid& grid,
                        const Eigen::VectorXd& v) {
    const int k = static_cast<int>(states.size());
    std::vector<int> idx;
    for (int i = 0; i < grid.size(); ++i)
        if (v[i] != 0.0) idx.push_back(i);
    const int m = static_cast<int>(idx.size());
    Eigen::MatrixXd src(m, k);
    for (int c = 0; c < k; ++c)
        for (int a = 0; a < m; ++a) src(a, c) = -v[idx[a]] * states[c].u[idx[a]] * grid.w[idx[a]];
    for (const auto& st : states)
        if (st.ell != states[0].ell) throw NumericalError("l2_gram: states from different waves");
    const int ell = k > 0 ? states[0].ell : 0;
    Eigen::MatrixXd kk(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b <= a; ++b)
            kk(a, b) = kk(b, a) = squared_kernel_integral(ell, grid.r[idx[a]], grid.r[idx[b]]);
    return src.transpose() * kk * src;
}

Eigen::MatrixXd projector_basis(const std::vector<ZeroState>& e_basis, int ell,
                                const RadialGrid& grid, const Eigen::VectorXd& v) {
    std::vector<ZeroState> sel;
    for (const auto& e : e_basis)
        if (e.ell == ell) sel.push_back(e);
    const int n = grid.size(), k = static_cast<int>(sel.size());
    if (k == 0) return Eigen::MatrixXd(n, 0);
    Eigen::LLT<Eigen::MatrixXd> llt(l2_gram(sel, grid, v));
    if (llt.info() != Eigen::Success) throw NumericalError("eigenfunction L2 Gram matrix is singular");
    Eigen::MatrixXd u(n, k);
    for (int c = 0; c < k; ++c) u.col(c) = sel[c].u;
    // Q = U L^{-T}
    return llt.matrixU().solve<Eigen::OnTheRight>(u);
}

Resonance canonical_resonance(const ZeroState& direction, const std::vector<ZeroState>& e_basis,
                              const RadialGrid& grid, const Eigen::VectorXd& v) {
    Resonance res;
    res.phi = direction;
    const double gn = gram_product(direction, direction, grid, v);
    if (!(gn > 0.0)) throw NumericalError("resonance direction has non-positive Gram norm");
    res.phi.u /= std::sqrt(gn);
    double p = v_pairing(res.phi, grid, v);
    if (std::abs(p) <= 1e-8 * v_l1(res.phi, grid, v))
        throw NumericalError("claimed resonance has <V, phi> = 0");
    if (p < 0.0) res.phi.u = -res.phi.u;

    const Eigen::MatrixXd q = projector_basis(e_basis, res.phi.ell, grid, v);
    if (q.cols() > 0) {
        const int n = grid.size();
        const int ell = res.phi.ell;
        Eigen::VectorXd y = v.cwiseProduct(res.phi.u);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            if (v[i] == 0.0) continue;
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                if (y[j] != 0.0)
                    s += special::reduced_abs_kernel(ell, grid.r[i], grid.r[j]) * y[j] * grid.w[j];
            z[i] = v[i] * s / (8.0 * M_PI);
        }
        const Eigen::VectorXd coef = q.transpose() * z.cwiseProduct(grid.w);
        res.phi.u -= q * coef;
    }
    res.v_phi = v_pairing(res.phi, grid, v);
    res.gram_norm = gram_product(res.phi, res.phi, grid, v);
    res.a_const = 4.0 * M_PI * I / (res.v_phi * res.v_phi);
    return res;
}

std::map<int, int> ThresholdReport::e_count_by_wave() const {
    std::map<int, int> m;
    for (const auto& e : e_basis) ++m[e.ell];
    return m;
}

ThresholdReport classify(const std::vector<NullState>& nulls, const RadialGrid& grid,
                         const Eigen::VectorXd& v, double tau_mom) {
    ThresholdReport rep;
    std::map<int, std::vector<ZeroState>> by_wave;
    for (const auto& s : nulls) {
        by_wave[s.ell].push_back(ZeroState{s.ell, s.profile});
        rep.null_singular_values.push_back(s.singular_value);
        rep.degenerate_cluster = rep.degenerate_cluster || s.degenerate_cluster;
    }

    std::optional<ZeroState> resonance_dir;
    for (auto& [ell, states] : by_wave) {
        auto basis = gram_orthonormalize(states, grid, v);
        if (ell != 0) {
            for (const auto& b : basis) {
                rep.m_basis.push_back(b);
                rep.e_basis.push_back(b);
            }
            continue;
        }
        const int k = static_cast<int>(basis.size());
        Eigen::VectorXd p(k);
        double scale = 0.0;
        for (int a = 0; a < k; ++a) {
            p[a] = v_pairing(basis[a], grid, v);
            scale = std::max(scale, v_l1(basis[a], grid, v));
        }
        if (p.norm() <= tau_mom * scale) {
            for (const auto& b : basis) {
                rep.m_basis.push_back(b);
                rep.e_basis.push_back(b);
            }
            continue;
        }
        // Rotate so the first direction carries all of <V, .>.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(p / p.norm());
        const Eigen::MatrixXd rot = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
        for (int c = 0; c < k; ++c) {
            ZeroState s{0, Eigen::VectorXd::Zero(grid.size())};
            for (int a = 0; a < k; ++a) s.u += rot(a, c) * basis[a].u;
            rep.m_basis.push_back(s);
            if (c == 0)
                resonance_dir = s;
            else
                rep.e_basis.push_back(s);
        }
    }

    const int m = rep.dim_m();
    rep.gram = Eigen::MatrixXd::Zero(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            rep.gram(a, b) = gram_product(rep.m_basis[a], rep.m_basis[b], grid, v);
    if (m > 0) {
        rep.gram_eigenvalues = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(rep.gram).eigenvalues();
        if (rep.gram_eigenvalues[0] <= 0.0)
            throw NumericalError("Gram matrix on M is not positive definite");
    }

    for (const auto& e : rep.e_basis) {
        rep.e_moments.push_back(moments(e, grid, v, tau_mom));
        rep.e1_flags.push_back(rep.e_moments.back().e1_member);
    }

    if (m == 0)
        rep.classification = Kind::generic;
    else if (rep.e_basis.empty())
        rep.classification = Kind::kind1;
    else if (!resonance_dir)
        rep.classification = Kind::kind2;
    else
        rep.classification = Kind::kind3;

    if (resonance_dir) rep.resonance = canonical_resonance(*resonance_dir, rep.e_basis, grid, v);
    return rep;
}

ThresholdReport analyze(const RadialGrid& grid, const Eigen::VectorXd& v, int ell_max,
                        double tau_null, double tau_mom) {
    const auto fact = potential::factorize(v);
    return classify(zero_null_space(grid, fact, ell_max, tau_null), grid, v, tau_mom);
}

TailCheck resonance_tail_check(const ZeroState& phi, const RadialGrid& grid,
                               const Eigen::VectorXd& v) {
    const double r0 = 2.0 * grid.r_max / 3.0;
    const double vmax = v.cwiseAbs().maxCoeff();
    double sx = 0.0, sxx = 0.0, sx2 = 0.0, sxx2 = 0.0, syy = 0.0;
    const double y0 = special::y_l0(phi.ell, 1.0);
    for (int i = 0; i < grid.size(); ++i) {
        const double r = grid.r[i];
        if (r < r0) continue;
        if (std::abs(v[i]) > 1e-12 * vmax)
            throw NumericalError("resonance tail window overlaps the potential support");
        const double f = phi.u[i] / r * y0;
        sx += f / r;
        sxx += 1.0 / (r * r);
        sx2 += f / (r * r);
        sxx2 += 1.0 / (r * r * r * r);
        syy += f * f;
    }
    TailCheck tc;
    tc.coefficient = sx / sxx;
    tc.inverse_square_coefficient = sx2 / sxx2;
    auto resid = [&](double c, int pw) {
        double e = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            const double r = grid.r[i];
            if (r < r0) continue;
            const double d = phi.u[i] / r * y0 - c / std::pow(r, pw);
            e += d * d;
        }
        return syy > 0.0 ? std::sqrt(e / syy) : 0.0;
    };
    tc.fit_residual = resid(tc.coefficient, 1);
    tc.inverse_square_residual = resid(tc.inverse_square_coefficient, 2);
    tc.reference = -v_pairing(phi, grid, v) / (4.0 * M_PI);
    tc.relative_error = tc.coefficient != 0.0
                            ? std::abs(tc.coefficient - tc.reference) / std::abs(tc.coefficient)
                            : std::abs(tc.reference);
    return tc;
}

double tune_coupling(const PotentialSpec& spec, const TuneTarget& target, const RadialGrid& grid) {
    auto gs = tuned_couplings(spec, target.ell, grid);
    if (target.bracket) {
        const auto [lo, hi] = *target.bracket;
        std::erase_if(gs, [&](double g) { return g < lo || g > hi; });
    }
    if (target.branch < 0 || target.branch >= static_cast<int>(gs.size()))
        throw TuningError("tune_coupling: no threshold branch " + std::to_string(target.branch) +
                          " in wave " + std::to_string(target.ell));
    return gs[target.branch];
}

MatchedTuning tune_matched(const PotentialSpec& spec, int param_index,
                           std::pair<double, double> bracket, const TuneTarget& a,
                           const TuneTarget& b, const RadialGrid& grid) {
    if (param_index < 0 || param_index >= static_cast<int>(spec.params.size()))
        throw ConfigError("tune_matched: parameter index out of range");
    auto with = [&](double c) {
        PotentialSpec s = spec;
        s.params[param_index] = c;
        return s;
    };
    auto f = [&](double c) {
        const auto s = with(c);
        return tune_coupling(s, a, grid) - tune_coupling(s, b, grid);
    };
    const double fa = f(bracket.first), fb = f(bracket.second);
    if (fa * fb > 0.0) throw TuningError("tune_matched: no sign change of g_a - g_b in bracket");
    boost::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(
        f, bracket.first, bracket.second, fa, fb, boost::math::tools::eps_tolerance<double>(52),
        iters);
    // Keep whichever end has the smaller mismatch.
    const double c1 = root.first, c2 = root.second;
    const double m1 = std::abs(f(c1)), m2 = std::abs(f(c2));
    MatchedTuning out;
    out.parameter = m1 <= m2 ? c1 : c2;
    out.mismatch = std::min(m1, m2);
    out.spec = with(out.parameter);
    out.coupling = tune_coupling(out.spec, b, grid);
    out.spec.coupling = out.coupling;
    return out;
}

Eigen::MatrixXcd feshbach_invert(const BlockSystem& bs, double rcond) {
    const auto n0 = bs.L00.rows(), n1 = bs.L11.rows();
    if (bs.L00.cols() != n0 || bs.L11.cols() != n1 || bs.L01.rows() != n0 ||
        bs.L01.cols() != n1 || bs.L10.rows() != n1 || bs.L10.cols() != n0)
        throw DimensionError("feshbach_invert: inconsistent block sizes");
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu00(bs.L00);
    if (n0 > 0 && !(lu00.rcond() > rcond)) throw SingularBlockError("L00 is singular", "L00");
    const Eigen::MatrixXcd k = n0 > 0 ? lu00.inverse() : Eigen::MatrixXcd(0, 0);
    const Eigen::MatrixXcd c = bs.L11 - bs.L10 * k * bs.L01;
    Eigen::PartialPivLU<Eigen::MatrixXcd> luc(c);
    if (n1 > 0 && !(luc.rcond() > rcond))
        throw SingularBlockError("Schur complement C is singular", "C");
    const Eigen::MatrixXcd ci = n1 > 0 ? luc.inverse() : Eigen::MatrixXcd(0, 0);

    Eigen::MatrixXcd out(n0 + n1, n0 + n1);
    const Eigen::MatrixXcd k01 = k * bs.L01;
    const Eigen::MatrixXcd l10k = bs.L10 * k;
    out.topLeftCorner(n0, n0) = k + k01 * ci * l10k;
    out.topRightCorner(n0, n1) = -k01 * ci;
    out.bottomLeftCorner(n1, n0) = -ci * l10k;
    out.bottomRightCorner(n1, n1) = ci;
    return out;
}

LaurentCoefficients laurent_extract(const RadialGrid& grid, const FactorizedPotential& fact,
                                    int ell, const LaurentOptions& opt) {
    if (!(opt.lambda_min > 0.0 && opt.lambda_max > opt.lambda_min && opt.count >= 3))
        throw ConfigError("laurent: need 0 < lambda_min < lambda_max and count >= 3");
    LaurentCoefficients lc;
    lc.ell = ell;
    lc.nodes = resolvent::active_nodes(fact);
    const int n = static_cast<int>(lc.nodes.size());
    if (n == 0) throw NumericalError("laurent: potential vanishes on the grid");

    std::vector<double> lam(opt.count);
    for (int s = 0; s < opt.count; ++s)
        lam[s] = opt.lambda_min *
                 std::pow(opt.lambda_max / opt.lambda_min, static_cast<double>(s) / (opt.count - 1));
    std::vector<Eigen::MatrixXcd> inv(opt.count);
    detail::parallel_for(opt.count, opt.threads, [&](int s) {
        Eigen::MatrixXcd a = resolvent::assemble_T_on(ell, lam[s], grid, fact, lc.nodes);
        a += Eigen::MatrixXcd::Identity(n, n);
        inv[s] = a.partialPivLu().inverse();
    });

    // Samples at -lambda are complex conjugates for real V and real lambda.
    const int ns = 2 * opt.count, nk = 5;  // powers lambda^-2 .. lambda^2
    Eigen::MatrixXcd design(ns, nk);
    Eigen::MatrixXcd data(ns, static_cast<Eigen::Index>(n) * n);
    for (int s = 0; s < ns; ++s) {
        const double l = s < opt.count ? lam[s] : -lam[s - opt.count];
        lc.fit_lambdas.push_back(l);
        for (int k = 0; k < nk; ++k) design(s, k) = std::pow(l, k - 2);
        const Eigen::MatrixXcd m = s < opt.count ? inv[s] : inv[s - opt.count].conjugate().eval();
        data.row(s) = Eigen::Map<const Eigen::RowVectorXcd>(m.data(), m.size());
    }
    Eigen::VectorXd scale(nk);
    for (int k = 0; k < nk; ++k) {
        scale[k] = design.col(k).cwiseAbs().maxCoeff();
        design.col(k) /= scale[k];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(design);
    Eigen::MatrixXcd coef = qr.solve(data);
    const double denom = data.norm();
    lc.fit_residual = denom > 0.0 ? (design * coef - data).norm() / denom : 0.0;
    for (int k = 0; k < nk; ++k) coef.row(k) /= scale[k];

    auto unpack = [&](int k) {
        Eigen::MatrixXcd m(n, n);
        Eigen::Map<Eigen::RowVectorXcd>(m.data(), m.size()) = coef.row(k);
        return m;
    };
    lc.A_minus2 = unpack(0);
    lc.A_minus1 = unpack(1);
    lc.A_0 = unpack(2);
    if (lc.fit_residual > opt.tolerance)
        throw FitError("laurent fit residual " + std::to_string(lc.fit_residual) +
                       " above tolerance; refine the lambda window or the grid");
    return lc;
}

std::vector<LaurentCoefficients> laurent_extract(const RadialGrid& grid,
                                                 const FactorizedPotential& fact,
                                                 const std::vector<int>& ells,
                                                 const LaurentOptions& opt) {
    std::vector<LaurentCoefficients> out;
    for (int ell : ells) out.push_back(laurent_extract(grid, fact, ell, opt));
    return out;
}

Eigen::MatrixXcd v2_p0_v1(const std::vector<ZeroState>& e_basis, int ell, const RadialGrid& grid,
                          const FactorizedPotential& fact, const std::vector<int>& nodes) {
    const Eigen::MatrixXd q = projector_basis(e_basis, ell, grid, fact.values());
    const int n = static_cast<int>(nodes.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    if (q.cols() == 0) return m;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int i = nodes[a], j = nodes[b];
            m(a, b) = fact.v2[i] * q.row(i).dot(q.row(j)) * fact.v1[j] * grid.w[j];
        }
    return m;
}

Eigen::MatrixXcd resonance_pole(const Resonance& res, const RadialGrid& grid,
                                const FactorizedPotential& fact, const std::vector<int>& nodes) {
    const int n = static_cast<int>(nodes.size());
    Eigen::MatrixXcd m(n, n);
    const auto& u = res.phi.u;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int i = nodes[a], j = nodes[b];
            m(a, b) = -res.a_const * fact.v2[i] * u[i] * fact.v1[j] * u[j] * grid.w[j];
        }
    return m;
}

cplx c0_scalar(cplx lambda, const ZeroState& phi, const RadialGrid& grid,
               const Eigen::VectorXd& v) {
    if (phi.ell != 0) throw NumericalError("c0_scalar: resonance must live in wave 0");
    std::vector<int> idx;
    for (int i = 0; i < grid.size(); ++i)
        if (v[i] != 0.0) idx.push_back(i);
    cplx acc = 0.0;
    for (int a : idx) {
        const double ya = v[a] * phi.u[a] * grid.w[a];
        for (int b : idx) {
            const double yb = v[b] * phi.u[b] * grid.w[b];
            acc += ya * resolvent::wave_kernel_diffq1(0, lambda, grid.r[a], grid.r[b]) * yb;
        }
    }
    return -acc;
}

}  // namespace zerodisp::threshold
