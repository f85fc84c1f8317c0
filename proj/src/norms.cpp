#include "zerodisp/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "zerodisp/errors.hpp"
#include "zerodisp/special.hpp"

namespace zerodisp::norms {

namespace {

std::complex<double> field(const WaveSet& f, int i, double r, double mu) {
    std::complex<double> s = 0.0;
    for (const auto& [ell, u] : f) s += u[i] / r * special::y_l0(ell, mu);
    return s;
}

int window_count(const RadialGrid& grid, double window) {
    return std::isinf(window) ? grid.size() : grid.count_within(window);
}

}  // namespace

std::string NormKind::name() const {
    auto num = [](double x) { return std::isinf(x) ? std::string("inf") : fmt::format("{:g}", x); };
    switch (tag) {
        case Tag::lp: return "L" + num(p);
        case Tag::lorentz: return "L" + num(p) + "," + num(q);
        case Tag::sup_interior: return "sup";
    }
    return "?";
}

NormKind NormKind::parse(const std::string& name) {
    if (name == "sup") return sup();
    auto num = [&](const std::string& s) {
        if (s == "inf") return kInf;
        try {
            size_t pos = 0;
            const double x = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return x;
        } catch (const std::exception&) {
            throw ConfigError("unknown norm kind '" + name + "'");
        }
    };
    if (name.size() < 2 || name[0] != 'L') throw ConfigError("unknown norm kind '" + name + "'");
    const std::string rest = name.substr(1);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) return lp(num(rest));
    return lorentz(num(rest.substr(0, comma)), num(rest.substr(comma + 1)));
}

CellValues cell_values(const WaveSet& f, const RadialGrid& grid, double window,
                       int angular_points) {
    const auto q = special::gauss_legendre(angular_points);
    const int n = window_count(grid, window);
    CellValues c;
    c.values.reserve(static_cast<size_t>(n) * angular_points);
    c.measures.reserve(c.values.capacity());
    for (int i = 0; i < n; ++i) {
        const double r = grid.r[i];
        for (int k = 0; k < angular_points; ++k) {
            c.values.push_back(std::abs(field(f, i, r, q.x[k])));
            c.measures.push_back(2.0 * M_PI * q.w[k] * r * r * grid.w[i]);
        }
    }
    return c;
}

RearrangementProfile rearrangement(const CellValues& cells) {
    std::vector<size_t> order(cells.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return cells.values[a] > cells.values[b]; });
    RearrangementProfile prof;
    double cum = 0.0;
    for (size_t k = 0; k < order.size(); ++k) {
        const double v = cells.values[order[k]];
        if (!(v > 0.0)) break;
        cum += cells.measures[order[k]];
        if (!prof.levels.empty() && prof.levels.back() == v)
            prof.measures.back() = cum;
        else {
            prof.levels.push_back(v);
            prof.measures.push_back(cum);
        }
    }
    return prof;
}

double lorentz_from_profile(const RearrangementProfile& prof, double p, double q) {
    if (!(p >= 1.0)) throw ConfigError("lorentz norm needs p >= 1");
    const size_t m = prof.levels.size();
    if (std::isinf(q)) {
        double best = 0.0;
        for (size_t k = 0; k < m; ++k)
            best = std::max(best, prof.levels[k] * std::pow(prof.measures[k], 1.0 / p));
        return best;
    }
    if (q != 1.0) throw ConfigError("lorentz norm implemented for q = 1 and q = inf only");
    double s = 0.0;
    for (size_t k = 0; k < m; ++k) {
        const double next = k + 1 < m ? prof.levels[k + 1] : 0.0;
        s += std::pow(prof.measures[k], 1.0 / p) * (prof.levels[k] - next);
    }
    return s;
}

double lorentz_norm(const WaveSet& f, double p, double q, const RadialGrid& grid, double window) {
    return lorentz_from_profile(rearrangement(cell_values(f, grid, window)), p, q);
}

double sup_interior(const WaveSet& f, const RadialGrid& grid, double window) {
    const int n = window_count(grid, window);
    auto dirs = special::gauss_legendre(16).x;
    dirs.push_back(-1.0);
    dirs.push_back(1.0);
    double best = 0.0;
    for (int i = 0; i < n; ++i)
        for (double mu : dirs) best = std::max(best, std::abs(field(f, i, grid.r[i], mu)));
    return best;
}

double lp_norm(const WaveSet& f, double p, const RadialGrid& grid, double window) {
    if (!(p >= 1.0)) throw ConfigError("lp norm needs p >= 1");
    if (std::isinf(p)) return sup_interior(f, grid, window);
    if (p == 2.0) {
        const int n = window_count(grid, window);
        double s = 0.0;
        for (const auto& [ell, u] : f)
            for (int i = 0; i < n; ++i) s += std::norm(u[i]) * grid.w[i];
        return std::sqrt(s);
    }
    const auto cells = cell_values(f, grid, window);
    double s = 0.0;
    for (size_t k = 0; k < cells.values.size(); ++k)
        s += std::pow(cells.values[k], p) * cells.measures[k];
    return std::pow(s, 1.0 / p);
}

double evaluate(const NormKind& kind, const WaveSet& f, const RadialGrid& grid, double window) {
    switch (kind.tag) {
        case NormKind::Tag::lp: return lp_norm(f, kind.p, grid, window);
        case NormKind::Tag::lorentz: return lorentz_norm(f, kind.p, kind.q, grid, window);
        case NormKind::Tag::sup_interior: return sup_interior(f, grid, window);
    }
    return 0.0;
}

PowerFit fit_power(const std::vector<double>& times, const std::vector<double>& values,
                   double t_lo, double t_hi) {
    if (times.size() != values.size()) throw FitError("fit_power: size mismatch");
    std::vector<double> x, y;
    for (size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_lo || times[k] > t_hi) continue;
        if (!(values[k] > 0.0) || !(times[k] > 0.0))
            throw FitError("fit_power: nonpositive value in fit window");
        x.push_back(std::log(times[k]));
        y.push_back(std::log(values[k]));
    }
    const int n = static_cast<int>(x.size());
    if (n < 6) throw FitError("fit_power: fewer than 6 points in window");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (!(sxx > 0.0)) throw FitError("fit_power: all times identical");
    PowerFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    double ssr = 0.0;
    for (int k = 0; k < n; ++k) {
        const double e = y[k] - fit.intercept - fit.exponent * x[k];
        ssr += e * e;
    }
    fit.r_squared = syy > 1e-300 ? 1.0 - ssr / syy : 1.0;
    fit.points = n;
    fit.t_min = std::exp(*std::min_element(x.begin(), x.end()));
    fit.t_max = std::exp(*std::max_element(x.begin(), x.end()));
    return fit;
}

}  // namespace zerodisp::norms
