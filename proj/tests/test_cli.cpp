#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "zerodisp/cli.hpp"
#include "zerodisp/errors.hpp"

using namespace zerodisp;
using namespace zerodisp::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("zerodisp-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void put(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string cli_binary() {
    const char* p = std::getenv("ZD_CLI");
    return p ? p : "";
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = cli_binary() + " " + args + " >" + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kSmall = R"(name = "small"
action = "evolve"

[potential]
family = "square_well"
params = [1.0]
coupling = 1.0

[grid]
N = 200
R_max = 20.0

[waves]
ell_max = 1

[evolve]
sigma = 0.4
data_waves = [0, 1]
norms = ["sup", "L3,inf", "L2"]
)";

std::string with_output(const std::string& text, const fs::path& dir) {
    return text + "\n[output]\ndirectory = \"" + dir.generic_string() + "\"\nformats = [\"json\", \"csv\"]\n";
}

}  // namespace

TEST_CASE("command-line runs") {
    if (cli_binary().empty()) {
        MESSAGE("ZD_CLI not set; skipping binary checks");
        return;
    }
    const auto dir = scratch("cli");

    SUBCASE("verify-kernels") {
        put(dir / "k.toml", "[potential]\nfamily = \"square_well\"\nparams = [1.0]\n");
        CHECK(run_cli("--config " + (dir / "k.toml").string() + " --action verify-kernels --out " +
                          (dir / "k").string(),
                      dir / "k.log") == 0);
        const auto rep = json::parse(slurp(dir / "k" / "report.json"));
        REQUIRE(rep["kernels"].size() == 6);
        for (const auto& row : rep["kernels"]) CHECK(row["max_relative_error"].get<double>() <= 1e-6);
        CHECK(rep["passed"].get<bool>());
    }
    SUBCASE("classify a shallow square well") {
        put(dir / "c.toml", "action = \"classify\"\n[potential]\nfamily = \"square_well\"\nparams = [1.0]\n"
                            "coupling = 1.0\n[checks]\nclassification = \"generic\"\n");
        CHECK(run_cli("--config " + (dir / "c.toml").string() + " --out " + (dir / "c").string(),
                      dir / "c.log") == 0);
        const auto rep = json::parse(slurp(dir / "c" / "report.json"));
        CHECK(rep["threshold"]["classification"] == "generic");
        // the wrong expectation is an acceptance failure
        put(dir / "c4.toml", "action = \"classify\"\n[potential]\nfamily = \"square_well\"\nparams = [1.0]\n"
                             "[checks]\nclassification = \"kind1\"\n");
        CHECK(run_cli("--config " + (dir / "c4.toml").string() + " --out " + (dir / "c4").string(),
                      dir / "c4.log") == 4);
        CHECK(slurp(dir / "c4.log").find("FAIL classification") != std::string::npos);
    }
    SUBCASE("malformed TOML writes nothing") {
        put(dir / "bad.toml", "[potential\nfamily = \"square_well\"\n");
        CHECK(run_cli("--config " + (dir / "bad.toml").string() + " --out " + (dir / "bad").string(),
                      dir / "bad.log") == 2);
        CHECK_FALSE(fs::exists(dir / "bad"));
        CHECK(slurp(dir / "bad.log").find("bad.toml:1:") != std::string::npos);
    }
    SUBCASE("numerical failures exit 3") {
        put(dir / "t.toml", "action = \"tune\"\n[potential]\nfamily = \"square_well\"\nparams = [1.0]\n"
                            "[tune]\nell = 0\nbranch = 0\nbracket = [0.1, 0.2]\n");
        CHECK(run_cli("--config " + (dir / "t.toml").string() + " --out " + (dir / "t").string(),
                      dir / "t.log") == 3);
    }
    SUBCASE("flag errors") {
        CHECK(run_cli("--threads 0 --suite generic-well", dir / "f.log") == 2);
        CHECK(run_cli("--suite no-such-suite", dir / "f.log") == 2);
        CHECK(run_cli("", dir / "f.log") == 2);
        CHECK(run_cli("--list-suites", dir / "list.log") == 0);
        std::string expect;
        for (const auto& s : bundled_suites()) expect += s + "\n";
        CHECK(slurp(dir / "list.log") == expect);
    }
    fs::remove_all(dir);
}

TEST_CASE("bundled suites") {
    const auto names = bundled_suites();
    CHECK(names == std::vector<std::string>{"generic-well", "kind1-well", "kind2-E1", "kind2-pwave",
                                            "kind3-combined"});
    CHECK(std::is_sorted(names.begin(), names.end()));
    for (const auto& n : names) {
        CAPTURE(n);
        const auto cfg = load_suite(n);
        CHECK(cfg.name == n);
        const fs::path shipped = fs::path(ZD_SOURCE_DIR) / "configs" / (n + ".toml");
        REQUIRE(fs::exists(shipped));
        CHECK(slurp(shipped) == suite_text(n));
        CHECK(parse_config(slurp(shipped)).checks.classification == cfg.checks.classification);
    }
    // couplings come from runtime tuning
    const auto k1 = load_suite("kind1-well");
    REQUIRE(k1.tune.target);
    CHECK(k1.tune.target->ell == 0);
    const auto k3 = load_suite("kind3-combined");
    REQUIRE(k3.tune.matched);
    CHECK(k3.tune.matched->a.ell == 0);
    CHECK(k3.tune.matched->b.ell == 1);
    const auto grid = RadialGrid::uniform(k3.n, k3.r_max);
    json summary;
    const auto spec = apply_tuning(k3, grid, &summary);
    CHECK(summary["mode"] == "matched");
    CHECK(threshold::tune_coupling(spec, k3.tune.matched->a, grid) ==
          doctest::Approx(threshold::tune_coupling(spec, k3.tune.matched->b, grid)).epsilon(1e-8));
    CHECK_THROWS_AS(suite_text("missing"), ConfigError);
}

TEST_CASE("config parsing errors are line-precise") {
    auto message = [](const std::string& text) {
        try {
            parse_config(text, "x.toml");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("[potential]\nfamily = \"square_well\"\nradius = 2\n").rfind("x.toml:3:", 0) == 0);
    CHECK(message("[potential]\nfamily = \"square_well\"\nparams = [1.0]\n[grid]\nN = -5\n").rfind("x.toml:5:", 0) == 0);
    CHECK(message("[grid]\nN = 10\n").rfind("x.toml:1:1: missing [potential]", 0) == 0);
    CHECK(message("[potential]\nfamily = \"gaussian\"\n").rfind("x.toml:2:", 0) == 0);
    CHECK(message("action = \"dance\"\n").rfind("x.toml:1:", 0) == 0);
    CHECK(message("[waves]\nell_max = 1\n[evolve]\ndata_waves = [0, 2]\n").find("x.toml:") == 0);
    CHECK(message("a = [1,\n").rfind("x.toml:", 0) == 0);
    CHECK(message(kSmall).empty());
    const auto cfg = parse_config(kSmall);
    CHECK(cfg.action == Action::evolve);
    CHECK(cfg.n == 200);
    CHECK(cfg.evolve.data.waves == std::vector<int>{0, 1});
    CHECK(action_from_string(to_string(Action::verify_kernels)) == Action::verify_kernels);
}

TEST_CASE("content hash is the git blob id") {
    CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    CHECK(csv_field("") == "");
}

TEST_CASE("reports are reproducible and complete") {
    const auto dir = scratch("repro");
    const auto a = parse_config(with_output(kSmall, dir / "a"));
    const auto& b = a;
    RunOptions opt;
    const auto ra = run(a, opt);
    opt.out_dir = (dir / "b").string();
    const auto rb = run(b, opt);
    for (const auto& f : ra.files) CHECK(fs::exists(f));
    for (const auto& f : ra.report["files"]) CHECK(fs::exists(dir / "a" / f.get<std::string>()));
    const auto csv = slurp(dir / "a" / "traces" / "evolution.csv");
    CHECK(csv == slurp(dir / "b" / "traces" / "evolution.csv"));
    CHECK(csv.rfind("time,norm_kind,value,", 0) == 0);
    CHECK(ra.report["config_hash"] == content_hash(a.source_text));
    CHECK(ra.report["config_hash"] == rb.report["config_hash"]);
    // only the metadata block may differ between the two reports
    auto ja = json::parse(slurp(dir / "a" / "report.json"));
    auto jb = json::parse(slurp(dir / "b" / "report.json"));
    for (auto* j : {&ja, &jb}) {
        j->erase("metadata");
        (*j)["files"] = nullptr;
        (*j)["evolution"]["files"] = nullptr;
    }
    CHECK(ja.dump() == jb.dump());
    fs::remove_all(dir);
}

TEST_CASE("later stages reproduce from serialized threshold reports") {
    const auto dir = scratch("stage");
    auto cfg = parse_config(with_output(kSmall, dir));
    cfg.potential.params = {0.5};
    cfg.tune.target = threshold::TuneTarget{0, 0, std::nullopt};
    RunOptions opt;
    opt.action = Action::classify;
    run(cfg, opt);
    const auto stage = json::parse(slurp(dir / "threshold.json"));
    const auto loaded = threshold_from_json(stage["threshold"]);

    const auto grid = RadialGrid::uniform(stage["grid"]["N"].get<int>(), stage["grid"]["R_max"].get<double>());
    auto spec = cfg.potential;
    spec.coupling = stage["potential"]["coupling"].get<double>();
    const Eigen::VectorXd v = potential::sample(spec, grid);
    const auto mem = threshold::analyze(grid, v, cfg.ell_max);
    REQUIRE(mem.classification == threshold::Kind::kind1);
    CHECK(loaded.classification == mem.classification);
    REQUIRE(loaded.resonance);
    CHECK(std::abs(loaded.a_const() - mem.a_const()) == 0.0);

    auto eopt = cfg.evolve;
    eopt.keep_states = false;
    const auto t1 = evolution::decay_experiment(grid, v, mem, eopt);
    const auto t2 = evolution::decay_experiment(grid, v, loaded, eopt);
    REQUIRE(t1.times == t2.times);
    for (size_t k = 0; k < t1.norms.size(); ++k)
        for (size_t i = 0; i < t1.times.size(); ++i) {
            CHECK(std::abs(t1.norms[k][i] - t2.norms[k][i]) <= 1e-12 * t1.norms[k][i]);
            CHECK(std::abs(t1.residual_norms[k][i] - t2.residual_norms[k][i]) <= 1e-12 * t1.norms[k][i]);
        }
    fs::remove_all(dir);
}
