#include <doctest.h>

#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "zerodisp/errors.hpp"
#include "zerodisp/evolution.hpp"
#include "zerodisp/norms.hpp"
#include "zerodisp/potential.hpp"
#include "zerodisp/resolvent.hpp"
#include "zerodisp/threshold.hpp"

using namespace zerodisp;
using namespace zerodisp::evolution;
using potential::Family;
using potential::PotentialSpec;
using cplx = std::complex<double>;

namespace {

PotentialSpec well(double radius, double g) {
    PotentialSpec s;
    s.family = Family::square_well;
    s.params = {radius};
    s.coupling = g;
    return s;
}

double l2(const WaveSet& f, const RadialGrid& grid) { return norms::lp_norm(f, 2.0, grid); }

double distance(const WaveSet& a, const WaveSet& b, const RadialGrid& grid) {
    WaveSet d = a;
    for (const auto& [ell, u] : b) d[ell] -= u;
    return l2(d, grid);
}

Eigen::MatrixXd dense(const Tridiagonal& t) {
    const int n = static_cast<int>(t.diag.size());
    Eigen::MatrixXd m = t.diag.asDiagonal();
    for (int i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = t.off[i];
    return m;
}

// Lowest s-wave bound state -kappa^2 of the square well of depth g and
// radius R: k cot(kR) = -kappa with k^2 + kappa^2 = g.
double square_well_ground(double radius, double g) {
    auto f = [&](double kappa) {
        const double k = std::sqrt(g - kappa * kappa);
        return k * std::cos(k * radius) + kappa * std::sin(k * radius);
    };
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        f, 1e-12, std::sqrt(g) * (1 - 1e-12), boost::math::tools::eps_tolerance<double>(50), iters);
    const double kappa = 0.5 * (r.first + r.second);
    return -kappa * kappa;
}

}  // namespace

TEST_CASE("s-wave kinetic operator is the three-point Dirichlet stencil") {
    const auto g = RadialGrid::uniform(100, 5.0);
    const double h = g.h();
    const auto t = kinetic_operator(0, g);
    CHECK(t.diag[0] == doctest::Approx(3.0 / (h * h)).epsilon(1e-12));
    CHECK(t.diag[50] == doctest::Approx(2.0 / (h * h)).epsilon(1e-12));
    CHECK(t.diag[99] == doctest::Approx(3.0 / (h * h)).epsilon(1e-12));
    CHECK(t.off[40] == doctest::Approx(-1.0 / (h * h)).epsilon(1e-12));

    // exact discrete spectrum: eigenvectors sin(k pi r / R)
    const auto s = discretize_H(0, g, Eigen::VectorXd::Zero(g.size()));
    for (int k = 1; k <= g.size(); ++k) {
        const double want = 4.0 / (h * h) * std::pow(std::sin(k * M_PI * h / (2 * g.r_max)), 2);
        REQUIRE(s.energies[k - 1] == doctest::Approx(want).epsilon(1e-10));
    }
    CHECK_THROWS_AS(kinetic_operator(0, RadialGrid::uniform(2, 1.0)), DimensionError);
}

TEST_CASE("kinetic operator inverts the zero-energy kernel away from R_max") {
    const auto g = RadialGrid::uniform(200, 10.0);
    for (int ell : {0, 1, 3}) {
        Eigen::MatrixXd k(g.size(), g.size());
        for (int i = 0; i < g.size(); ++i)
            for (int j = 0; j < g.size(); ++j)
                k(i, j) = resolvent::wave_kernel(ell, 0.0, g.r[i], g.r[j]).real() * g.w[j];
        const Eigen::MatrixXd jk = dense(kinetic_operator(ell, g)) * k;
        const int n = g.size() - 1;
        CAPTURE(ell);
        CHECK((jk.topRows(n) - Eigen::MatrixXd::Identity(n, g.size())).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(dense(kinetic_operator(ell, g)).isApprox(dense(kinetic_operator(ell, g)).transpose()));
    }
}

TEST_CASE("p-wave Dirichlet eigenvalues converge at second order") {
    // zeros of j_1: tan x = x
    const double x[3] = {4.493409457909064, 7.725251836937707, 10.904121659428899};
    const double R = 10.0;
    double err[2][3];
    for (int pass = 0; pass < 2; ++pass) {
        const auto g = RadialGrid::uniform(pass == 0 ? 400 : 800, R);
        const auto s = discretize_H(1, g, Eigen::VectorXd::Zero(g.size()));
        for (int k = 0; k < 3; ++k) err[pass][k] = std::abs(s.energies[k] - std::pow(x[k] / R, 2));
    }
    for (int k = 0; k < 3; ++k) {
        CAPTURE(k);
        CHECK(err[0][k] < 1e-3 * std::pow(x[k] / R, 2));
        CHECK(err[0][k] / err[1][k] == doctest::Approx(4.0).epsilon(0.1));
    }
}

TEST_CASE("bound states") {
    const auto g = RadialGrid::uniform(800, 40.0);
    const auto shallow = discretize_H(0, g, potential::sample(well(1.0, 1.0), g));
    CHECK(shallow.neg_count == 0);
    const double deep_g = 3.0 * M_PI * M_PI / 4.0;
    const auto deep = discretize_H(0, g, potential::sample(well(1.0, deep_g), g));
    CHECK(deep.neg_count == 1);
    CHECK(deep.energies[0] == doctest::Approx(square_well_ground(1.0, deep_g)).epsilon(5e-3));
    CHECK(discretize_H(1, g, potential::sample(well(1.0, deep_g), g)).neg_count == 0);
    CHECK(shallow.tau_zero == doctest::Approx(default_tau_zero(g)));
    CHECK_THROWS_AS(discretize_H(0, g, Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("continuous-spectrum projection") {
    const auto g = RadialGrid::uniform(800, 40.0);
    const auto v = potential::sample(well(1.0, 3.0 * M_PI * M_PI / 4.0), g);
    const auto spec = build_spectrum({0, 1}, g, v);
    const WaveSet u = gaussian_data({0.8, {0, 1}, {}}, g);
    const WaveSet p = pc_project(u, spec, g);
    CHECK(distance(pc_project(p, spec, g), p, g) < 1e-12);
    const auto& s0 = spec.at(0);
    const cplx overlap =
        (s0.vectors.col(0).cast<cplx>().cwiseProduct(p.at(0)).cwiseProduct(g.w.cast<cplx>())).sum();
    CHECK(std::abs(overlap) < 1e-12);
    // the bound state carried real weight before projection
    CHECK(l2(p, g) < l2(u, g) * 0.99);
    CHECK(distance(WaveSet{{1, p.at(1)}}, WaveSet{{1, u.at(1)}}, g) < 1e-12);
    CHECK_THROWS_AS(pc_project(WaveSet{{2, u.at(0)}}, spec, g), NumericalError);
}

TEST_CASE("evolution group") {
    const auto g = RadialGrid::uniform(800, 40.0);
    const auto v = potential::sample(well(0.5, 5.0), g);
    const auto spec = build_spectrum({0, 2}, g, v);
    const WaveSet u = pc_project(gaussian_data({0.4, {0, 2}, {1.0, 0.5}}, g), spec, g);
    CHECK(distance(evolve(u, 0.0, spec, g), u, g) < 1e-12);
    for (double t : {0.1, 1.0, 7.0}) CHECK(l2(evolve(u, t, spec, g), g) == doctest::Approx(l2(u, g)).epsilon(1e-12));
    const WaveSet a = evolve(evolve(u, 0.3, spec, g), 1.7, spec, g);
    CHECK(distance(a, evolve(u, 2.0, spec, g), g) < 1e-11);
    const WaveSet back = evolve(evolve(u, 1.3, spec, g), -1.3, spec, g);
    CHECK(distance(back, u, g) < 1e-11);
}

TEST_CASE("free Gaussian") {
    // f0 = exp(-r^2 / (2 s^2)) evolves to (s^2/s_t^2)^{3/2} exp(-r^2 / (2 s_t^2)),
    // s_t^2 = s^2 + 2 i t, under i f_t = -Laplacian f.
    const double sigma = 0.5, t = 0.4;
    double err[2];
    for (int pass = 0; pass < 2; ++pass) {
        const auto g = RadialGrid::uniform(pass == 0 ? 800 : 1600, 40.0);
        const auto spec = build_spectrum({0}, g, Eigen::VectorXd::Zero(g.size()));
        Eigen::VectorXcd u0(g.size()), want(g.size());
        const cplx st2 = sigma * sigma + cplx(0.0, 2.0 * t);
        for (int i = 0; i < g.size(); ++i) {
            const double r = g.r[i];
            u0[i] = r * std::exp(-r * r / (2 * sigma * sigma));
            want[i] = r * std::pow(sigma * sigma / st2, 1.5) * std::exp(-r * r / (2.0 * st2));
        }
        const auto got = evolve(WaveSet{{0, u0}}, t, spec, g).at(0);
        err[pass] = (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff();
    }
    CHECK(err[0] < 1e-2);
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("free dispersive decay has exponent -3/2") {
    const auto g = RadialGrid::uniform(1600, 80.0);
    const auto spec = build_spectrum({0}, g, Eigen::VectorXd::Zero(g.size()));
    const WaveSet u = gaussian_data({0.3, {0}, {}}, g);
    const double s1 = norms::sup_interior(evolve(u, 1.0, spec, g), g, 20.0);
    const double s2 = norms::sup_interior(evolve(u, 2.0, spec, g), g, 20.0);
    // exact ratio of the peak amplitudes (1 + 4 t^2 / s^4)^{-3/4}
    const double s4 = std::pow(0.3, 4);
    const double exact = std::pow((1 + 16.0 / s4) / (1 + 4.0 / s4), 0.75);
    CHECK(s1 / s2 == doctest::Approx(exact).epsilon(1e-3));
    CHECK(s1 / s2 == doctest::Approx(std::pow(2.0, 1.5)).epsilon(0.01));
}

TEST_CASE("mu_t") {
    const auto g = RadialGrid::uniform(400, 20.0);
    for (double t : {0.5, 5.0, 500.0}) {
        const auto m = mu_t(t, g);
        for (int i = 0; i < g.size(); ++i) REQUIRE(std::abs(m[i]) <= 2.0 / g.r[i] * (1 + 1e-12));
    }
    // small r^2 / 4t: mu_t(r) = -r / (6 t) + O(r^3 / t^2)
    const double t = 1e4;
    const auto m = mu_t(t, g);
    for (int i : {0, 10, 40}) {
        const double r = g.r[i];
        CHECK(std::abs(m[i] + r / (6 * t)) <= 1e-3 * r / (6 * t));
    }
    // closed form via Fresnel-type quadrature at moderate x
    const double x = 3.0, r = std::sqrt(4.0 * x * 5.0);
    RadialGrid one;
    one.r = Eigen::VectorXd::Constant(1, r);
    one.w = Eigen::VectorXd::Constant(1, 1.0);
    one.r_max = r + 1;
    cplx s = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double y = (k + 0.5) / n;
        s += (std::exp(cplx(0, x)) - std::exp(cplx(0, y * y * x))) / double(n);
    }
    CHECK(std::abs(mu_t(5.0, one)[0] - cplx(0, 1) / r * s) < 1e-8);
    CHECK_THROWS_AS(mu_t(0.0, g), NumericalError);
}

TEST_CASE("resonant and eigenfunction correction operators") {
    const auto g = RadialGrid::uniform(800, 40.0);
    const auto base = well(0.5, 1.0);
    SUBCASE("R_t is linear and rank one") {
        const auto w = base.with_coupling(threshold::tune_coupling(base, {0, 0, std::nullopt}, g));
        const auto v = potential::sample(w, g);
        const auto rep = threshold::analyze(g, v, 0);
        REQUIRE(rep.resonance);
        const WaveSet a = gaussian_data({0.3, {0}, {}}, g), b = gaussian_data({0.7, {0}, {}}, g);
        WaveSet c{{0, 2.0 * a.at(0) - cplx(0, 3) * b.at(0)}};
        const double t = 3.0;
        const auto ra = r_t_apply(t, a, *rep.resonance, g), rb = r_t_apply(t, b, *rep.resonance, g);
        const WaveSet lin{{0, 2.0 * ra.at(0) - cplx(0, 3) * rb.at(0)}};
        CHECK(distance(r_t_apply(t, c, *rep.resonance, g), lin, g) <= 1e-12 * l2(lin, g));
        // output parallel to e^{i r^2/4t} phi
        Eigen::VectorXcd z(g.size());
        for (int i = 0; i < g.size(); ++i)
            z[i] = std::exp(cplx(0, g.r[i] * g.r[i] / (4 * t))) * rep.resonance->phi.u[i];
        const cplx ratio = ra.at(0)[3] / z[3];
        CHECK((ra.at(0) - ratio * z).cwiseAbs().maxCoeff() <= 1e-12 * ra.at(0).cwiseAbs().maxCoeff());
        // t^{-1/2} scaling of the amplitude as t grows
        const double n1 = l2(r_t_apply(100.0, a, *rep.resonance, g), g);
        const double n2 = l2(r_t_apply(400.0, a, *rep.resonance, g), g);
        CHECK(n1 / n2 == doctest::Approx(2.0).epsilon(1e-2));
        CHECK(r_t_apply(t, WaveSet{{1, a.at(0)}}, *rep.resonance, g).at(0).norm() == 0.0);
    }
    SUBCASE("S_t: linear, t^{-1/2} leading quadratic term") {
        const auto w = base.with_coupling(threshold::tune_coupling(base, {1, 0, std::nullopt}, g));
        const auto v = potential::sample(w, g);
        const auto rep = threshold::analyze(g, v, 1);
        REQUIRE(rep.dim_e() == 1);
        const SOperator s(g, v, rep.e_basis);
        const WaveSet a = gaussian_data({0.3, {1}, {}}, g), b = gaussian_data({0.6, {0, 1}, {}}, g);
        const double t = 2.0;
        const auto sa = s.apply(t, a), sb = s.apply(t, b);
        WaveSet c{{0, b.at(0)}, {1, a.at(1) + cplx(0, 2) * b.at(1)}};
        const WaveSet lin{{1, sa.at(1) + cplx(0, 2) * sb.at(1)}};
        CHECK(distance(s.apply(t, c), lin, g) <= 1e-12 * l2(lin, g));
        CHECK(distance(s_t_apply(t, a, rep.e_basis, g, v), sa, g) <= 1e-14 * l2(sa, g));
        // s-wave input has no component along E
        CHECK(sb.count(0) == 0);
        CHECK(l2(s.quadratic_term(a), g) > 0.0);
        // at large t mu_t -> 0 and S_t u -> prefactor(t) * quadratic term
        const double big = 1e7;
        const auto q = s.quadratic_term(a).at(1);
        const auto far = s.apply(big, a).at(1);
        const cplx pre = std::exp(cplx(0, -0.75 * M_PI)) / std::sqrt(M_PI * big);
        CHECK((far - pre * q).norm() <= 1e-3 * std::abs(pre) * q.norm());
        CHECK_THROWS_AS(s.apply(0.0, a), NumericalError);
    }
    SUBCASE("quadratic term vanishes on l = 3 eigenfunctions") {
        const PotentialSpec ex{Family::exponential, {0.2}, 1.0, false};
        const auto w = ex.with_coupling(threshold::tune_coupling(ex, {3, 0, std::nullopt}, g));
        const auto v = potential::sample(w, g);
        const auto rep = threshold::analyze(g, v, 3);
        REQUIRE(rep.dim_e() == 1);
        const SOperator s(g, v, rep.e_basis);
        const WaveSet a = gaussian_data({0.3, {3}, {}}, g);
        const auto q = s.quadratic_term(a);
        // the projection itself is nontrivial
        CHECK(std::abs((rep.e_basis[0].u.cast<cplx>().cwiseProduct(a.at(3)).cwiseProduct(g.w.cast<cplx>())).sum()) > 1e-3);
        CHECK(q.at(3).norm() == 0.0);
    }
}

TEST_CASE("Gaussian data") {
    const auto g = RadialGrid::uniform(400, 20.0);
    const auto d = gaussian_data({0.5, {0, 2}, {1.0, 3.0}}, g);
    CHECK(l2(WaveSet{{0, d.at(0)}}, g) == doctest::Approx(1.0));
    CHECK(l2(WaveSet{{2, d.at(2)}}, g) == doctest::Approx(3.0));
    CHECK_THROWS_AS(gaussian_data({0.0, {0}, {}}, g), ConfigError);
    CHECK_THROWS_AS(gaussian_data({0.5, {}, {}}, g), ConfigError);
    CHECK_THROWS_AS(gaussian_data({0.5, {0, 1}, {1.0}}, g), ConfigError);
    CHECK_THROWS_AS(gaussian_data({0.5, {-1}, {}}, g), ConfigError);
}

TEST_CASE("decay experiment bookkeeping") {
    const auto g = RadialGrid::uniform(800, 40.0);
    const auto v = potential::sample(well(0.5, 1.0), g);
    const auto rep = threshold::analyze(g, v, 0);
    ExperimentOptions o;
    o.keep_states = true;
    const auto tr = decay_experiment(g, v, rep, o);
    REQUIRE(tr.times.size() == 12);
    CHECK(tr.times.back() == doctest::Approx(tr.t_budget));
    CHECK(tr.times.front() == doctest::Approx(tr.t_budget / 10));
    CHECK(tr.subtracted.empty());
    CHECK(tr.unitarity_error < 1e-12);
    CHECK(tr.semigroup_error < 1e-11);
    CHECK(tr.r_obs == doctest::Approx(10.0));
    CHECK(tr.states.size() == 12);
    // residual equals the full solution when nothing is subtracted
    for (size_t k = 0; k < tr.norms.size(); ++k) CHECK(tr.norms[k] == tr.residual_norms[k]);
    // the fastest retained content cannot cross from r_obs to R_max and back
    CHECK(2.0 * std::sqrt(tr.e_cut) * tr.t_budget <= (g.r_max - tr.r_obs) * (1 + 1e-12));
    const int sup = tr.kind_index("sup");
    REQUIRE(sup >= 0);
    CHECK(tr.fits[sup].exponent == doctest::Approx(-1.5).epsilon(0.1));

    o.t_max = 10 * tr.t_budget;
    o.keep_states = false;
    const auto stale = decay_experiment(g, v, rep, o);
    CHECK(stale.states.empty());
    CHECK_FALSE(stale.warnings.empty());
    o.time_count = 5;
    CHECK_THROWS_AS(decay_experiment(g, v, rep, o), ConfigError);
}

TEST_CASE("kind1 data decays like t^{-1/2} and R_t carries the leading term") {
    const auto g = RadialGrid::uniform(800, 40.0);
    const auto base = well(0.5, 1.0);
    const auto w = base.with_coupling(threshold::tune_coupling(base, {0, 0, std::nullopt}, g));
    const auto v = potential::sample(w, g);
    const auto rep = threshold::analyze(g, v, 0);
    ExperimentOptions o;
    o.keep_states = false;
    const auto tr = decay_experiment(g, v, rep, o);
    CHECK(tr.subtracted == "R");
    const int lor = tr.kind_index("L3,inf");
    const int sup = tr.kind_index("sup");
    REQUIRE(lor >= 0);
    CHECK(tr.fits[lor].exponent == doctest::Approx(-0.5).epsilon(0.2));
    // the residual is small relative to the full solution and decays faster
    CHECK(tr.residual_norms[sup].back() < 0.2 * tr.norms[sup].back());
    CHECK(tr.residual_fits[sup].exponent < tr.fits[sup].exponent - 0.5);
}
