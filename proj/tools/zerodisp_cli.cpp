#include <iostream>

#include <CLI11.hpp>

#include "zerodisp/cli.hpp"
#include "zerodisp/errors.hpp"

using namespace zerodisp;

int main(int argc, char** argv) {
    CLI::App app{"zero-energy dispersive decay experiments"};
    std::string config_path, suite, action, out, print_suite;
    unsigned seed = 12345;
    int threads = 1;
    bool plots = false, list = false;
    app.add_option("--config", config_path, "TOML experiment file");
    app.add_option("--suite", suite, "bundled reference configuration");
    app.add_flag("--list-suites", list, "list bundled configurations");
    app.add_option("--print-suite", print_suite, "print a bundled configuration");
    app.add_option("--action", action,
                   "classify, tune, laurent, evolve, verify-kernels or full");
    app.add_option("--out", out, "output directory");
    app.add_option("--seed", seed, "seed for randomized checks");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--plots", plots, "write SVG decay plots");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (list) {
            for (const auto& s : cli::bundled_suites()) std::cout << s << "\n";
            return 0;
        }
        if (!print_suite.empty()) {
            std::cout << cli::suite_text(print_suite);
            return 0;
        }
        if (config_path.empty() == suite.empty())
            throw ConfigError("give exactly one of --config or --suite");
        const auto cfg = suite.empty() ? cli::load_config(config_path) : cli::load_suite(suite);
        cli::RunOptions opt;
        if (!out.empty()) opt.out_dir = out;
        if (!action.empty()) opt.action = cli::action_from_string(action);
        opt.seed = seed;
        opt.threads = threads;
        opt.plots = plots;
        const auto rr = cli::run(cfg, opt);
        for (const auto& c : rr.checks)
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << c.value << " ("
                      << c.bound << ")\n";
        for (const auto& f : rr.files) std::cout << "wrote " << f.string() << "\n";
        return rr.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
