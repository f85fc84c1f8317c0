#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <toml.hpp>

#include "zerodisp/cli.hpp"
#include "zerodisp/errors.hpp"

namespace zerodisp::cli {

namespace {

std::string where(const toml::node& n, const std::string& source) {
    const auto& s = n.source();
    return fmt::format("{}:{}:{}", source, s.begin.line, s.begin.column);
}

class Reader {
public:
    Reader(const toml::table& t, std::string source, std::string path)
        : t_(t), source_(std::move(source)), path_(std::move(path)) {}

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, node] : t_)
            if (!ok.count(std::string(k.str())))
                fail(node, "unknown key '" + prefix() + std::string(k.str()) + "'");
    }

    [[noreturn]] void fail(const toml::node& n, const std::string& msg) const {
        throw ConfigError(where(n, source_) + ": " + msg);
    }
    [[noreturn]] void fail_here(const std::string& msg) const {
        throw ConfigError(where(t_, source_) + ": " + msg);
    }

    const toml::node* node(const char* key) const { return t_.get(key); }

    std::optional<Reader> sub(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (!n->is_table()) fail(*n, "'" + prefix() + key + "' must be a table");
        return Reader(*n->as_table(), source_, prefix() + key);
    }

    std::optional<double> real(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (auto v = n->value<double>()) return *v;
        fail(*n, "'" + prefix() + key + "' must be a number");
    }
    std::optional<int> integer(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (n->is_integer()) return static_cast<int>(n->as_integer()->get());
        fail(*n, "'" + prefix() + key + "' must be an integer");
    }
    std::optional<bool> boolean(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (n->is_boolean()) return n->as_boolean()->get();
        fail(*n, "'" + prefix() + key + "' must be true or false");
    }
    std::optional<std::string> string(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (n->is_string()) return n->as_string()->get();
        fail(*n, "'" + prefix() + key + "' must be a string");
    }
    std::optional<std::vector<double>> reals(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (!n->is_array()) fail(*n, "'" + prefix() + key + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : *n->as_array()) {
            auto v = e.value<double>();
            if (!v) fail(e, "'" + prefix() + key + "' must contain numbers only");
            out.push_back(*v);
        }
        return out;
    }
    std::optional<std::vector<int>> integers(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (!n->is_array()) fail(*n, "'" + prefix() + key + "' must be an array of integers");
        std::vector<int> out;
        for (const auto& e : *n->as_array()) {
            if (!e.is_integer()) fail(e, "'" + prefix() + key + "' must contain integers only");
            out.push_back(static_cast<int>(e.as_integer()->get()));
        }
        return out;
    }
    std::optional<std::vector<std::string>> strings(const char* key) const {
        const toml::node* n = t_.get(key);
        if (!n) return std::nullopt;
        if (!n->is_array()) fail(*n, "'" + prefix() + key + "' must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : *n->as_array()) {
            if (!e.is_string()) fail(e, "'" + prefix() + key + "' must contain strings only");
            out.push_back(e.as_string()->get());
        }
        return out;
    }
    std::optional<std::pair<double, double>> range(const char* key) const {
        auto v = reals(key);
        if (!v) return std::nullopt;
        if (v->size() != 2 || !((*v)[0] <= (*v)[1]))
            fail(*t_.get(key), "'" + prefix() + key + "' must be [low, high] with low <= high");
        return std::make_pair((*v)[0], (*v)[1]);
    }

    template <class T>
    T positive(const char* key, T dflt) const {
        T v = dflt;
        if constexpr (std::is_same_v<T, int>) {
            if (auto x = integer(key)) v = *x;
        } else {
            if (auto x = real(key)) v = *x;
        }
        if (!(v > 0)) {
            if (const auto* n = t_.get(key)) fail(*n, "'" + prefix() + key + "' must be positive");
            fail_here("'" + prefix() + key + "' must be positive");
        }
        return v;
    }

private:
    std::string prefix() const { return path_.empty() ? "" : path_ + "."; }
    const toml::table& t_;
    std::string source_;
    std::string path_;
};

threshold::TuneTarget read_target(const Reader& r) {
    r.allow({"ell", "branch", "bracket"});
    threshold::TuneTarget t;
    t.ell = r.integer("ell").value_or(0);
    t.branch = r.integer("branch").value_or(0);
    t.bracket = r.range("bracket");
    if (t.ell < 0 || t.branch < 0) r.fail_here("tuning ell and branch must be nonnegative");
    return t;
}

}  // namespace

std::string to_string(Action a) {
    switch (a) {
        case Action::classify: return "classify";
        case Action::tune: return "tune";
        case Action::laurent: return "laurent";
        case Action::evolve: return "evolve";
        case Action::verify_kernels: return "verify-kernels";
        case Action::full: return "full";
    }
    return "?";
}

Action action_from_string(const std::string& s) {
    for (Action a : {Action::classify, Action::tune, Action::laurent, Action::evolve,
                     Action::verify_kernels, Action::full})
        if (to_string(a) == s) return a;
    throw ConfigError("unknown action '" + s + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source_name) {
    toml::table tbl;
    try {
        tbl = toml::parse(text, source_name);
    } catch (const toml::parse_error& e) {
        const auto& s = e.source();
        throw ConfigError(fmt::format("{}:{}:{}: {}", source_name, s.begin.line, s.begin.column,
                                      e.description()));
    }
    ExperimentConfig cfg;
    cfg.source_text = text;
    const Reader root(tbl, source_name, "");
    root.allow({"name", "action", "potential", "tune", "grid", "waves", "laurent", "evolve",
                "output", "checks"});
    cfg.name = root.string("name").value_or(cfg.name);
    if (auto a = root.string("action")) {
        try {
            cfg.action = action_from_string(*a);
        } catch (const ConfigError& e) {
            root.fail(*tbl.get("action"), e.what());
        }
    }

    auto pot = root.sub("potential");
    if (!pot) root.fail_here("missing [potential] table");
    pot->allow({"family", "params", "coupling", "critical"});
    {
        auto fam = pot->string("family");
        if (!fam) pot->fail_here("potential.family is required");
        try {
            cfg.potential.family = potential::family_from_string(*fam);
        } catch (const ConfigError& e) {
            pot->fail(*pot->node("family"), e.what());
        }
        if (auto p = pot->reals("params")) cfg.potential.params = *p;
        else pot->fail_here("potential.params is required");
        cfg.potential.coupling = pot->real("coupling").value_or(1.0);
        cfg.potential.critical = pot->boolean("critical").value_or(false);
        try {
            cfg.potential.validate();
        } catch (const ConfigError& e) {
            pot->fail_here(e.what());
        }
    }

    if (auto t = root.sub("tune")) {
        t->allow({"ell", "branch", "bracket", "matched"});
        if (auto m = t->sub("matched")) {
            m->allow({"param", "bracket", "first", "second"});
            MatchedTuneSpec ms;
            ms.param_index = m->integer("param").value_or(-1);
            if (ms.param_index < 0 || ms.param_index >= static_cast<int>(cfg.potential.params.size()))
                m->fail_here("tune.matched.param must index potential.params");
            auto br = m->range("bracket");
            if (!br) m->fail_here("tune.matched.bracket is required");
            ms.bracket = *br;
            auto first = m->sub("first"), second = m->sub("second");
            if (!first || !second) m->fail_here("tune.matched needs first and second targets");
            ms.a = read_target(*first);
            ms.b = read_target(*second);
            cfg.tune.matched = ms;
        } else {
            cfg.tune.target = read_target(Reader(*tbl.get("tune")->as_table(), source_name, "tune"));
        }
    }

    if (auto g = root.sub("grid")) {
        g->allow({"N", "R_max"});
        cfg.n = g->positive("N", cfg.n);
        cfg.r_max = g->positive("R_max", cfg.r_max);
        if (cfg.n < 8) g->fail_here("grid.N must be at least 8");
    }
    if (auto w = root.sub("waves")) {
        w->allow({"ell_max"});
        cfg.ell_max = w->integer("ell_max").value_or(cfg.ell_max);
        if (cfg.ell_max < 0) w->fail_here("waves.ell_max must be nonnegative");
    }
    if (auto l = root.sub("laurent")) {
        l->allow({"lambda_min", "lambda_max", "count", "tolerance"});
        cfg.laurent.lambda_min = l->positive("lambda_min", cfg.laurent.lambda_min);
        cfg.laurent.lambda_max = l->positive("lambda_max", cfg.laurent.lambda_max);
        cfg.laurent.count = l->positive("count", cfg.laurent.count);
        cfg.laurent.tolerance = l->positive("tolerance", cfg.laurent.tolerance);
        if (cfg.laurent.lambda_min >= cfg.laurent.lambda_max)
            l->fail_here("laurent.lambda_min must be below laurent.lambda_max");
        if (cfg.laurent.count < 3) l->fail_here("laurent.count must be at least 3");
    }
    if (auto e = root.sub("evolve")) {
        e->allow({"sigma", "data_waves", "weights", "times", "decades", "t_max", "norms",
                  "r_obs_fraction", "spectral_fraction", "budget_factor"});
        auto& ev = cfg.evolve;
        ev.data.sigma = e->positive("sigma", ev.data.sigma);
        if (auto w = e->integers("data_waves")) ev.data.waves = *w;
        if (auto w = e->reals("weights")) ev.data.weights = *w;
        if (!ev.data.weights.empty() && ev.data.weights.size() != ev.data.waves.size())
            e->fail(*e->node("weights"), "evolve.weights must match evolve.data_waves");
        for (int ell : ev.data.waves)
            if (ell < 0) e->fail(*e->node("data_waves"), "evolve.data_waves must be nonnegative");
        ev.time_count = e->positive("times", ev.time_count);
        if (ev.time_count < 6) e->fail(*e->node("times"), "evolve.times must be at least 6");
        ev.decades = e->positive("decades", ev.decades);
        if (e->node("t_max")) ev.t_max = e->positive("t_max", 1.0);
        ev.r_obs_fraction = e->positive("r_obs_fraction", ev.r_obs_fraction);
        ev.spectral_fraction = e->positive("spectral_fraction", ev.spectral_fraction);
        ev.budget_factor = e->positive("budget_factor", ev.budget_factor);
        if (ev.r_obs_fraction >= 1.0 || ev.spectral_fraction > 1.0)
            e->fail_here("evolve fractions must lie in (0, 1)");
        if (auto ns = e->strings("norms")) {
            ev.norm_kinds.clear();
            for (const auto& s : *ns) {
                try {
                    ev.norm_kinds.push_back(norms::NormKind::parse(s));
                } catch (const ConfigError& err) {
                    e->fail(*e->node("norms"), err.what());
                }
            }
        }
    }
    for (int ell : cfg.evolve.data.waves)
        if (ell > cfg.ell_max) {
            const toml::node* n = tbl.at_path("evolve.data_waves").node();
            if (n) root.fail(*n, "evolve.data_waves exceeds waves.ell_max");
            root.fail_here("evolve.data_waves exceeds waves.ell_max");
        }
    if (auto o = root.sub("output")) {
        o->allow({"directory", "formats"});
        cfg.out_dir = o->string("directory").value_or(cfg.out_dir);
        if (auto f = o->strings("formats")) {
            for (const auto& s : *f)
                if (s != "json" && s != "csv" && s != "svg")
                    o->fail(*o->node("formats"), "output.formats accepts json, csv, svg");
            cfg.formats = *f;
        }
    }
    if (auto c = root.sub("checks")) {
        c->allow({"classification", "refinement_stable", "sup_exponent", "lorentz_exponent",
                  "residual_sup_max", "residual_without_s_sup_max", "laurent_tolerance",
                  "tail_tolerance", "c0_tolerance", "invariant_tolerance"});
        auto& ch = cfg.checks;
        ch.classification = c->string("classification");
        if (ch.classification) {
            try {
                threshold::kind_from_string(*ch.classification);
            } catch (const ConfigError& e) {
                c->fail(*c->node("classification"), e.what());
            }
        }
        ch.refinement_stable = c->boolean("refinement_stable").value_or(false);
        ch.sup_exponent = c->range("sup_exponent");
        ch.lorentz_exponent = c->range("lorentz_exponent");
        ch.residual_sup_max = c->real("residual_sup_max");
        ch.residual_without_s_sup_max = c->real("residual_without_s_sup_max");
        ch.laurent_tolerance = c->real("laurent_tolerance");
        ch.tail_tolerance = c->real("tail_tolerance");
        ch.c0_tolerance = c->real("c0_tolerance");
        ch.invariant_tolerance = c->positive("invariant_tolerance", ch.invariant_tolerance);
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string content_hash(const std::string& text) {
    const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

}  // namespace zerodisp::cli
