#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "report.hpp"
#include "zerodisp/errors.hpp"

namespace zerodisp::cli {

namespace {

json vec_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json state_json(const threshold::ZeroState& s, bool with_profile) {
    json j{{"ell", s.ell}};
    if (with_profile) j["u"] = vec_json(s.u);
    return j;
}

threshold::ZeroState state_from(const json& j) {
    threshold::ZeroState s;
    s.ell = j.at("ell").get<int>();
    if (j.contains("u")) s.u = vec_from(j.at("u"));
    return s;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
    const auto n = static_cast<Eigen::Index>(j.size());
    if (n == 0) return Eigen::MatrixXd(0, 0);
    const auto m = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd out(n, m);
    for (Eigen::Index i = 0; i < n; ++i) out.row(i) = vec_from(j[i]).transpose();
    return out;
}

json complex_json(std::complex<double> z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

std::complex<double> complex_from(const json& j) {
    return {j.at("re").get<double>(), j.at("im").get<double>()};
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

json threshold_to_json(const threshold::ThresholdReport& rep, bool with_profiles) {
    json j;
    j["classification"] = threshold::to_string(rep.classification);
    j["dim_M"] = rep.dim_m();
    j["dim_E"] = rep.dim_e();
    j["degenerate_cluster"] = rep.degenerate_cluster;
    j["null_singular_values"] = rep.null_singular_values;
    json m = json::array();
    for (const auto& s : rep.m_basis) m.push_back(state_json(s, with_profiles));
    j["m_basis"] = m;
    json e = json::array();
    for (std::size_t k = 0; k < rep.e_basis.size(); ++k) {
        json s = state_json(rep.e_basis[k], with_profiles);
        s["e1_member"] = k < rep.e1_flags.size() && rep.e1_flags[k];
        if (k < rep.e_moments.size()) {
            const auto& mo = rep.e_moments[k];
            s["first_moments"] = mo.first;
            s["second_moments"] = mo.second;
        }
        e.push_back(s);
    }
    j["e_basis"] = e;
    j["gram"] = matrix_json(rep.gram);
    j["gram_eigenvalues"] = vec_json(rep.gram_eigenvalues);
    if (rep.resonance) {
        const auto& r = *rep.resonance;
        j["resonance"] = json{{"phi", state_json(r.phi, with_profiles)},
                              {"v_phi", r.v_phi},
                              {"gram_norm", r.gram_norm},
                              {"a", complex_json(r.a_const)}};
    } else {
        j["resonance"] = nullptr;
    }
    return j;
}

threshold::ThresholdReport threshold_from_json(const json& j) {
    threshold::ThresholdReport rep;
    rep.classification = threshold::kind_from_string(j.at("classification").get<std::string>());
    rep.degenerate_cluster = j.at("degenerate_cluster").get<bool>();
    rep.null_singular_values = j.at("null_singular_values").get<std::vector<double>>();
    for (const auto& s : j.at("m_basis")) rep.m_basis.push_back(state_from(s));
    for (const auto& s : j.at("e_basis")) {
        rep.e_basis.push_back(state_from(s));
        rep.e1_flags.push_back(s.at("e1_member").get<bool>());
        threshold::Moments mo;
        mo.e1_member = rep.e1_flags.back();
        if (s.contains("first_moments")) {
            mo.first = s.at("first_moments").get<std::array<double, 3>>();
            mo.second = s.at("second_moments").get<std::array<std::array<double, 3>, 3>>();
        }
        rep.e_moments.push_back(mo);
    }
    rep.gram = matrix_from(j.at("gram"));
    rep.gram_eigenvalues = vec_from(j.at("gram_eigenvalues"));
    if (!j.at("resonance").is_null()) {
        const auto& r = j.at("resonance");
        threshold::Resonance res;
        res.phi = state_from(r.at("phi"));
        res.v_phi = r.at("v_phi").get<double>();
        res.gram_norm = r.at("gram_norm").get<double>();
        res.a_const = complex_from(r.at("a"));
        rep.resonance = res;
    }
    return rep;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string trace_csv(const evolution::EvolutionTrace& tr) {
    std::string out = "time,norm_kind,value,residual_value,wave_breakdown,residual_without_s\r\n";
    for (std::size_t k = 0; k < tr.norm_names.size(); ++k) {
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            std::string waves;
            if (i < tr.wave_breakdown.size()) {
                for (const auto& [ell, val] : tr.wave_breakdown[i]) {
                    if (!waves.empty()) waves += ";";
                    waves += fmt::format("{}:{}", ell, num(val));
                }
            }
            out += fmt::format("{},{},{},{},{},{}\r\n", num(tr.times[i]), csv_field(tr.norm_names[k]),
                               num(tr.norms[k][i]), num(tr.residual_norms[k][i]),
                               csv_field(waves), num(tr.residual_without_s[k][i]));
        }
    }
    return out;
}

std::string decay_svg(const std::string& title, const std::vector<double>& times,
                      const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    const double W = 640, H = 420, ml = 70, mr = 150, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (double t : times) {
        xmin = std::min(xmin, std::log10(t));
        xmax = std::max(xmax, std::log10(t));
    }
    for (const auto& [name, ys] : series)
        for (double y : ys)
            if (y > 0) {
                ymin = std::min(ymin, std::log10(y));
                ymax = std::max(ymax, std::log10(y));
            }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) {
        ymin = ymin > 1e299 ? 0 : ymin - 0.5;
        ymax = ymin + 1;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double ly) { return mt + (ymax - ly) / (ymax - ymin) * (H - mt - mb); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        W, H);
    s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
    s += fmt::format("<text x=\"{}\" y=\"22\" font-size=\"14\">{}</text>\n", ml, title);
    s += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", ml,
        mt, W - ml - mr, H - mt - mb);
    for (int e = static_cast<int>(std::ceil(ymin)); e <= static_cast<int>(std::floor(ymax)); ++e)
        s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">1e{}</text>\n", ml - 6,
                         py(e) + 4, e);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">t = {:.3g}</text>\n", px(xmin),
                     H - mb + 18, std::pow(10.0, xmin));
    s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">t = {:.3g}</text>\n", px(xmax),
                     H - mb + 18, std::pow(10.0, xmax));
    s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">log-log</text>\n",
                     (px(xmin) + px(xmax)) / 2, H - 12);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& [name, ys] = series[k];
        const char* c = colors[k % 6];
        std::string pts;
        for (std::size_t i = 0; i < ys.size() && i < times.size(); ++i)
            if (ys[i] > 0)
                pts += fmt::format("{:.1f},{:.1f} ", px(std::log10(times[i])), py(std::log10(ys[i])));
        s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                         c, pts);
        const double ly = mt + 16 + 18.0 * static_cast<double>(k);
        s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\"/>\n",
                         W - mr + 10, ly, W - mr + 30, ly, c);
        s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - mr + 35, ly + 4, name);
    }
    s += "</svg>\n";
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace zerodisp::cli
