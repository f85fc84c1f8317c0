#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

#include <fmt/format.h>

#include "report.hpp"
#include "zerodisp/errors.hpp"
#include "zerodisp/resolvent.hpp"

namespace zerodisp::cli {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json config_echo(const ExperimentConfig& cfg, Action action) {
    json pot{{"family", potential::to_string(cfg.potential.family)},
             {"params", cfg.potential.params},
             {"coupling", cfg.potential.coupling},
             {"critical", cfg.potential.critical}};
    json norms_list = json::array();
    for (const auto& k : cfg.evolve.norm_kinds) norms_list.push_back(k.name());
    json ev{{"sigma", cfg.evolve.data.sigma},
            {"data_waves", cfg.evolve.data.waves},
            {"weights", cfg.evolve.data.weights},
            {"times", cfg.evolve.time_count},
            {"decades", cfg.evolve.decades},
            {"norms", norms_list}};
    if (cfg.evolve.t_max) ev["t_max"] = *cfg.evolve.t_max;
    return json{{"name", cfg.name},
                {"action", to_string(action)},
                {"potential", pot},
                {"grid", {{"N", cfg.n}, {"R_max", cfg.r_max}}},
                {"waves", {{"ell_max", cfg.ell_max}}},
                {"evolve", ev},
                {"output", {{"directory", cfg.out_dir}, {"formats", cfg.formats}}}};
}

double spectral_norm(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()[0];
}

class CheckList {
public:
    void upper(const std::string& name, double value, double bound) {
        add(name, value <= bound, value, fmt::format("<= {}", bound));
    }
    void within(const std::string& name, double value, std::pair<double, double> range) {
        add(name, value >= range.first && value <= range.second, value,
            fmt::format("in [{}, {}]", range.first, range.second));
    }
    void equal(const std::string& name, const std::string& got, const std::string& want) {
        add(name + ": " + got, got == want, got == want ? 1.0 : 0.0, "== " + want);
    }
    void add(const std::string& name, bool ok, double value, const std::string& bound) {
        items.push_back({name, ok && std::isfinite(value), value, bound});
    }
    std::vector<CheckResult> items;
};

bool wants(const ExperimentConfig& cfg, const std::string& fmt_name) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), fmt_name) != cfg.formats.end();
}

json fit_json(const norms::PowerFit& f) {
    return json{{"exponent", f.exponent},
                {"intercept", f.intercept},
                {"r_squared", f.r_squared},
                {"points", f.points},
                {"t_min", f.t_min},
                {"t_max", f.t_max}};
}

}  // namespace

double feshbach_selfcheck(unsigned seed, int systems) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> total(2, 12);
    double worst = 0.0;
    for (int s = 0; s < systems; ++s) {
        const int n = total(rng);
        const int n0 = std::uniform_int_distribution<int>(1, n - 1)(rng);
        const int n1 = n - n0;
        Eigen::MatrixXcd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = {gauss(rng), gauss(rng)};
        threshold::BlockSystem bs{m.topLeftCorner(n0, n0), m.topRightCorner(n0, n1),
                                  m.bottomLeftCorner(n1, n0), m.bottomRightCorner(n1, n1)};
        const Eigen::MatrixXcd direct = m.partialPivLu().inverse();
        worst = std::max(worst, spectral_norm(threshold::feshbach_invert(bs) - direct));
    }
    return worst;
}

json kernel_mass_table(int quad_points, double* max_error) {
    json table = json::array();
    double worst = 0.0;
    for (auto kind : resolvent::all_kernel_kinds()) {
        json row{{"kind", resolvent::to_string(kind)}};
        json errs = json::array();
        double kind_worst = 0.0;
        for (double d : {0.5, 1.0, 2.0, 5.0}) {
            const double e = resolvent::verify_kernel_mass(kind, d, quad_points);
            errs.push_back({{"d", d}, {"mass", resolvent::kernel_mass(kind, d)}, {"relative_error", e}});
            kind_worst = std::max(kind_worst, e);
        }
        row["samples"] = errs;
        row["max_relative_error"] = kind_worst;
        worst = std::max(worst, kind_worst);
        table.push_back(row);
    }
    if (max_error) *max_error = worst;
    return table;
}

RunReport run(const ExperimentConfig& cfg, const RunOptions& opt) {
    using threshold::Kind;
    const Action action = opt.action.value_or(cfg.action);
    const std::filesystem::path out = opt.out_dir.value_or(cfg.out_dir);
    RunReport rr;
    CheckList checks;
    json& rep = rr.report;
    rep["config"] = config_echo(cfg, action);
    rep["config_hash"] = content_hash(cfg.source_text);
    rep["metadata"] = json{{"generated_at", utc_now()}, {"seed", opt.seed}, {"threads", opt.threads}};

    const bool do_kernels = action == Action::verify_kernels || action == Action::full;
    const bool do_tune = action != Action::verify_kernels;
    const bool do_classify =
        action == Action::classify || action == Action::laurent || action == Action::evolve ||
        action == Action::full;
    const bool do_laurent = action == Action::laurent || action == Action::full;
    const bool do_evolve = action == Action::evolve || action == Action::full;

    if (do_kernels) {
        double worst = 0.0;
        rep["kernels"] = kernel_mass_table(64, &worst);
        checks.upper("kernel_mass_relative_error", worst, 1e-6);
    }
    if (action == Action::full) {
        const double err = feshbach_selfcheck(opt.seed, 200);
        rep["feshbach"] = json{{"systems", 200}, {"seed", opt.seed}, {"max_error", err}};
        checks.upper("feshbach_inverse_error", err, 1e-10);
    }

    const RadialGrid grid = RadialGrid::uniform(cfg.n, cfg.r_max);
    potential::PotentialSpec spec = cfg.potential;
    if (do_tune) {
        json tsum;
        spec = apply_tuning(cfg, grid, &tsum);
        rep["tuning"] = tsum;
        const auto dw = potential::decay_weight_report(spec, grid);
        rep["potential"] = json{{"family", potential::to_string(spec.family)},
                                {"params", spec.params},
                                {"coupling", spec.coupling},
                                {"decay_proxies", dw.proxies},
                                {"decay_proxies_finite", dw.finite},
                                {"decay_hypothesis", dw.decay_hypothesis}};
    }
    const Eigen::VectorXd v = potential::sample(spec, grid);

    threshold::ThresholdReport th;
    if (do_classify) {
        th = threshold::analyze(grid, v, cfg.ell_max);
        rep["threshold"] = threshold_to_json(th, false);
        const auto stage = out / "threshold.json";
        json stage_json{{"potential", {{"family", potential::to_string(spec.family)},
                                       {"params", spec.params},
                                       {"coupling", spec.coupling}}},
                        {"grid", {{"N", cfg.n}, {"R_max", cfg.r_max}}},
                        {"threshold", threshold_to_json(th, true)}};
        write_text(stage, stage_json.dump(1) + "\n");
        rr.files.push_back(stage);

        const std::string kind = threshold::to_string(th.classification);
        if (cfg.checks.classification) checks.equal("classification", kind, *cfg.checks.classification);
        if (th.dim_m() > 0 && th.gram_eigenvalues.size() > 0)
            checks.add("gram_min_eigenvalue", th.gram_eigenvalues.minCoeff() > 0.0,
                       th.gram_eigenvalues.minCoeff(), "> 0");

        if (cfg.checks.refinement_stable) {
            const RadialGrid fine = RadialGrid::uniform(2 * cfg.n, cfg.r_max);
            const auto fine_spec = apply_tuning(cfg, fine, nullptr);
            const auto th2 = threshold::analyze(fine, potential::sample(fine_spec, fine), cfg.ell_max);
            const std::string kind2 = threshold::to_string(th2.classification);
            rep["refinement"] = json{{"N", 2 * cfg.n},
                                     {"coupling", fine_spec.coupling},
                                     {"classification", kind2},
                                     {"dim_M", th2.dim_m()},
                                     {"dim_E", th2.dim_e()}};
            checks.add("refinement_stable", kind2 == kind && th2.dim_e() == th.dim_e(),
                       kind2 == kind ? 1.0 : 0.0, kind + " at N and 2N");
        }

        if (th.resonance) {
            const auto& res = *th.resonance;
            checks.upper("resonance_normalization", std::abs(res.gram_norm - 1.0), 1e-10);
            const auto tail = threshold::resonance_tail_check(res.phi, grid, v);
            // c0(0) as the limit of c0(lambda), lambda > 0 (first-order Richardson)
            const auto c0 = 2.0 * threshold::c0_scalar(5e-3, res.phi, grid, v) -
                            threshold::c0_scalar(1e-2, res.phi, grid, v);
            const auto a_inv = 1.0 / res.a_const;
            const double c0_err = std::abs(c0 - a_inv) / std::abs(a_inv);
            rep["resonance"] = json{{"tail_coefficient", tail.coefficient},
                                    {"tail_reference", tail.reference},
                                    {"tail_relative_error", tail.relative_error},
                                    {"tail_fit_residual", tail.fit_residual},
                                    {"inverse_square_coefficient", tail.inverse_square_coefficient},
                                    {"inverse_square_residual", tail.inverse_square_residual},
                                    {"c0", {{"re", c0.real()}, {"im", c0.imag()}}},
                                    {"a_inverse", {{"re", a_inv.real()}, {"im", a_inv.imag()}}},
                                    {"c0_relative_error", c0_err}};
            if (cfg.checks.tail_tolerance)
                checks.upper("tail_coefficient", tail.relative_error, *cfg.checks.tail_tolerance);
            if (cfg.checks.c0_tolerance) checks.upper("c0_anchor", c0_err, *cfg.checks.c0_tolerance);
        }
    }

    if (do_laurent) {
        const auto fact = potential::factorize(v);
        auto lopt = cfg.laurent;
        lopt.threads = opt.threads;
        const auto e_waves = th.e_count_by_wave();
        json lj = json::array();
        for (int ell = 0; ell <= cfg.ell_max; ++ell) {
            const auto lc = threshold::laurent_extract(grid, fact, ell, lopt);
            const double n2 = spectral_norm(lc.A_minus2), n1 = spectral_norm(lc.A_minus1),
                         n0 = spectral_norm(lc.A_0);
            json row{{"ell", ell},
                     {"nodes", lc.nodes.size()},
                     {"fit_residual", lc.fit_residual},
                     {"norm_A_minus2", n2},
                     {"norm_A_minus1", n1},
                     {"norm_A0", n0}};
            const bool has_e = e_waves.count(ell) && e_waves.at(ell) > 0;
            const bool has_res = th.resonance && th.resonance->phi.ell == ell;
            const std::string tag = fmt::format("laurent_l{}", ell);
            const auto tol = cfg.checks.laurent_tolerance;
            if (has_e) {
                const auto ref = threshold::v2_p0_v1(th.e_basis, ell, grid, fact, lc.nodes);
                const double err = spectral_norm(lc.A_minus2 - ref) / n2;
                row["A_minus2_vs_V2P0V1"] = err;
                if (tol) checks.upper(tag + "_A_minus2_vs_V2P0V1", err, *tol);
            }
            if (has_res) {
                const auto pole = threshold::resonance_pole(*th.resonance, grid, fact, lc.nodes);
                const double err = spectral_norm(lc.A_minus1 - pole) / n1;
                const auto sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(lc.A_minus1).singularValues();
                const double rank_ratio = sv.size() > 1 ? sv[1] / sv[0] : 0.0;
                row["A_minus1_vs_resonance_pole"] = err;
                row["A_minus1_second_singular_ratio"] = rank_ratio;
                if (!has_e) row["A_minus2_relative"] = n2 / n1;
                if (tol && th.classification == Kind::kind1) {
                    checks.upper(tag + "_A_minus2_relative", n2 / n1, *tol);
                    checks.upper(tag + "_A_minus1_vs_resonance_pole", err, *tol);
                    checks.upper(tag + "_A_minus1_rank_one", rank_ratio, *tol);
                }
            }
            if (!has_e && !has_res) {
                const double rel = std::max(n2, n1) / n0;
                row["singular_relative"] = rel;
                if (tol && th.classification == Kind::generic)
                    checks.upper(tag + "_singular_relative", rel, *tol);
            }
            lj.push_back(row);
        }
        rep["laurent"] = lj;
    }

    if (do_evolve) {
        auto eopt = cfg.evolve;
        eopt.keep_states = false;
        const auto tr = evolution::decay_experiment(grid, v, th, eopt);
        json fits = json::object();
        for (size_t k = 0; k < tr.norm_names.size(); ++k)
            fits[tr.norm_names[k]] = json{{"full", fit_json(tr.fits[k])},
                                          {"residual", fit_json(tr.residual_fits[k])},
                                          {"residual_without_s", fit_json(tr.residual_without_s_fits[k])}};
        json ej{{"times", tr.times},
                {"subtracted", tr.subtracted},
                {"r_obs", tr.r_obs},
                {"e_cut", tr.e_cut},
                {"t_budget", tr.t_budget},
                {"initial_l2", tr.initial_l2},
                {"unitarity_error", tr.unitarity_error},
                {"semigroup_error", tr.semigroup_error},
                {"fit_points", tr.fit_end},
                {"fits", fits},
                {"warnings", tr.warnings}};

        const double tol = cfg.checks.invariant_tolerance;
        checks.upper("unitarity", tr.unitarity_error, tol);
        checks.upper("semigroup", tr.semigroup_error, tol);
        const int sup = tr.kind_index("sup"), weak = tr.kind_index("L3,inf");
        auto need = [&](int idx, const char* what) {
            if (idx < 0) throw ConfigError(std::string("checks need the '") + what + "' norm in evolve.norms");
        };
        if (cfg.checks.sup_exponent) {
            need(sup, "sup");
            checks.within("sup_exponent", tr.fits[sup].exponent, *cfg.checks.sup_exponent);
        }
        if (cfg.checks.lorentz_exponent) {
            need(weak, "L3,inf");
            checks.within("lorentz_exponent", tr.fits[weak].exponent, *cfg.checks.lorentz_exponent);
        }
        if (cfg.checks.residual_sup_max) {
            need(sup, "sup");
            checks.upper("residual_sup_exponent", tr.residual_fits[sup].exponent,
                         *cfg.checks.residual_sup_max);
        }
        if (cfg.checks.residual_without_s_sup_max) {
            need(sup, "sup");
            checks.upper("residual_without_s_sup_exponent", tr.residual_without_s_fits[sup].exponent,
                         *cfg.checks.residual_without_s_sup_max);
        }

        json paths = json::array();
        if (wants(cfg, "csv")) {
            const auto p = out / "traces" / "evolution.csv";
            write_text(p, trace_csv(tr));
            rr.files.push_back(p);
            paths.push_back(p.lexically_relative(out).generic_string());
        }
        if (opt.plots || wants(cfg, "svg")) {
            for (size_t k = 0; k < tr.norm_names.size(); ++k) {
                std::vector<std::pair<std::string, std::vector<double>>> series{
                    {"full", tr.norms[k]}};
                if (!tr.subtracted.empty()) {
                    series.emplace_back("minus " + tr.subtracted, tr.residual_norms[k]);
                    if (tr.subtracted != "R" && tr.subtracted != "S")
                        series.emplace_back("minus R", tr.residual_without_s[k]);
                }
                std::string stem = tr.norm_names[k];
                for (char& c : stem)
                    if (c == ',') c = '_';
                const auto p = out / "plots" / ("decay_" + stem + ".svg");
                write_text(p, decay_svg(cfg.name + ": " + tr.norm_names[k], tr.times, series));
                rr.files.push_back(p);
                paths.push_back(p.lexically_relative(out).generic_string());
            }
        }
        ej["files"] = paths;
        rep["evolution"] = ej;
    }

    json cj = json::array();
    bool all = true;
    for (const auto& c : checks.items) {
        cj.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"bound", c.bound}});
        all = all && c.passed;
    }
    rep["checks"] = cj;
    rep["passed"] = all;
    rr.checks = checks.items;
    rr.exit_code = all ? 0 : 4;

    const auto rp = out / "report.json";
    rr.files.push_back(rp);
    json files = json::array();
    for (const auto& f : rr.files) files.push_back(f.lexically_relative(out).generic_string());
    rep["files"] = files;
    write_text(rp, rep.dump(2) + "\n");
    return rr;
}

}  // namespace zerodisp::cli
