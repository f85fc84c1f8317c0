#include <algorithm>
#include <map>

#include "zerodisp/cli.hpp"
#include "zerodisp/errors.hpp"

namespace zerodisp::cli {

namespace {

const std::map<std::string, std::string>& suite_table() {
    static const std::map<std::string, std::string> table{
        {"generic-well", R"(name = "generic-well"
action = "full"

[potential]
family = "square_well"
params = [0.5]
coupling = 1.0

[grid]
N = 800
R_max = 40.0

[waves]
ell_max = 2

[evolve]
sigma = 0.3
data_waves = [0]
norms = ["sup", "L3,inf", "L2"]

[output]
directory = "out/generic-well"
formats = ["json", "csv", "svg"]

[checks]
classification = "generic"
refinement_stable = true
sup_exponent = [-1.65, -1.35]
laurent_tolerance = 1e-6
)"},
        {"kind1-well", R"(name = "kind1-well"
action = "full"

[potential]
family = "square_well"
params = [0.5]

[tune]
ell = 0
branch = 0

[grid]
N = 800
R_max = 40.0

[waves]
ell_max = 2

[evolve]
sigma = 0.3
data_waves = [0]
norms = ["sup", "L3,inf", "L2"]

[output]
directory = "out/kind1-well"
formats = ["json", "csv", "svg"]

[checks]
classification = "kind1"
refinement_stable = true
lorentz_exponent = [-0.6, -0.4]
residual_sup_max = -1.3
laurent_tolerance = 0.02
tail_tolerance = 0.02
c0_tolerance = 0.01
)"},
        {"kind2-E1", R"(name = "kind2-E1"
action = "full"

[potential]
family = "exponential"
params = [0.2]

[tune]
ell = 3
branch = 0

[grid]
N = 800
R_max = 40.0

[waves]
ell_max = 3

[evolve]
sigma = 0.5
data_waves = [0, 3]
norms = ["sup", "L3,inf", "L2"]

[output]
directory = "out/kind2-E1"
formats = ["json", "csv", "svg"]

[checks]
classification = "kind2"
refinement_stable = true
residual_without_s_sup_max = -1.3
laurent_tolerance = 0.02
)"},
        {"kind2-pwave", R"(name = "kind2-pwave"
action = "full"

[potential]
family = "square_well"
params = [0.5]

[tune]
ell = 1
branch = 0

[grid]
N = 800
R_max = 40.0

[waves]
ell_max = 2

[evolve]
sigma = 0.5
data_waves = [0, 1]
norms = ["sup", "L3,inf", "L2"]

[output]
directory = "out/kind2-pwave"
formats = ["json", "csv", "svg"]

[checks]
classification = "kind2"
refinement_stable = true
laurent_tolerance = 0.02
)"},
        {"kind3-combined", R"(name = "kind3-combined"
action = "full"

# outer well of radius 0.5 and depth 1 plus a core of radius 0.15; the core
# depth is chosen so the second s-wave branch meets the first p-wave branch
[potential]
family = "sum_of_wells"
params = [0.5, 1.0, 0.15, 16.0]

[tune.matched]
param = 3
bracket = [12.0, 20.0]
first = { ell = 0, branch = 1 }
second = { ell = 1, branch = 0 }

[grid]
N = 800
R_max = 40.0

[waves]
ell_max = 2

[evolve]
sigma = 0.3
data_waves = [0, 1]
norms = ["sup", "L3,inf", "L2"]

[output]
directory = "out/kind3-combined"
formats = ["json", "csv", "svg"]

[checks]
classification = "kind3"
refinement_stable = true
residual_sup_max = -1.3
laurent_tolerance = 0.02
tail_tolerance = 0.02
c0_tolerance = 0.01
)"},
    };
    return table;
}

}  // namespace

std::vector<std::string> bundled_suites() {
    std::vector<std::string> names;
    for (const auto& [name, text] : suite_table()) names.push_back(name);
    std::sort(names.begin(), names.end());
    return names;
}

const std::string& suite_text(const std::string& name) {
    const auto& t = suite_table();
    auto it = t.find(name);
    if (it == t.end()) throw ConfigError("unknown suite '" + name + "'");
    return it->second;
}

ExperimentConfig load_suite(const std::string& name) {
    return parse_config(suite_text(name), "suite:" + name);
}

potential::PotentialSpec apply_tuning(const ExperimentConfig& cfg, const RadialGrid& grid,
                                      json* summary) {
    const auto& tune = cfg.tune;
    if (tune.matched) {
        const auto& m = *tune.matched;
        auto res = threshold::tune_matched(cfg.potential, m.param_index, m.bracket, m.a, m.b, grid);
        if (summary) {
            *summary = json{{"mode", "matched"},
                            {"parameter_index", m.param_index},
                            {"parameter", res.parameter},
                            {"coupling", res.coupling},
                            {"mismatch", res.mismatch},
                            {"first", {{"ell", m.a.ell}, {"branch", m.a.branch}}},
                            {"second", {{"ell", m.b.ell}, {"branch", m.b.branch}}},
                            {"N", grid.size()}};
        }
        return res.spec;
    }
    if (tune.target) {
        const double g = threshold::tune_coupling(cfg.potential, *tune.target, grid);
        if (summary) {
            *summary = json{{"mode", "single"},
                            {"ell", tune.target->ell},
                            {"branch", tune.target->branch},
                            {"coupling", g},
                            {"N", grid.size()}};
        }
        return cfg.potential.with_coupling(g);
    }
    if (summary) *summary = json{{"mode", "none"}, {"coupling", cfg.potential.coupling}};
    return cfg.potential;
}

}  // namespace zerodisp::cli
