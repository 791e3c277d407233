#include "eptime/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "eptime/config.hpp"
#include "eptime/errors.hpp"
#include "eptime/scenario.hpp"

#ifndef EPTIME_SCENARIO_DIR
#define EPTIME_SCENARIO_DIR "scenarios"
#endif
#ifndef EPTIME_VERSION
#define EPTIME_VERSION "unknown"
#endif

namespace eptime::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string format = "json";
    std::optional<std::uint64_t> seed;
};

std::vector<fs::path> bundled_configs(const fs::path &dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    for (const auto &entry : fs::directory_iterator(dir, ec)) {
        if (entry.path().extension() == ".conf") out.push_back(entry.path());
    }
    if (ec) throw InvalidInput("cannot list scenarios in '" + dir.string() + "': " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
}

int run_one(const config::ScenarioConfig &cfg_in, const std::vector<std::string> &suites,
            const Options &opt, std::ostream &out, std::ostream &err) {
    auto cfg = cfg_in;
    if (opt.seed) cfg.seed = *opt.seed;
    try {
        const auto result = scenario::run_scenario(cfg, suites);
        const fs::path root = opt.out.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out);
        scenario::write_outputs(result, root / cfg.name,
                                opt.format == "csv" ? scenario::Format::csv
                                                    : scenario::Format::json);
        const auto &checks = result.report.checks();
        const auto ok = std::count_if(checks.begin(), checks.end(),
                                      [](const auto &c) { return c.passed(); });
        out << (result.report.passed() ? "PASS " : "FAIL ") << cfg.name << " (" << ok << "/"
            << checks.size() << " checks) -> " << (root / cfg.name).string() << '\n';
        for (const auto &c : checks) {
            if (c.expected_fail && !c.satisfied) {
                out << "  expected-fail " << c.id << ": " << c.measured << ' '
                    << scenario::to_string(c.relation) << ' ' << c.threshold
                    << (c.note.empty() ? "" : " (" + c.note + ")") << '\n';
            } else if (!c.passed()) {
                out << "  failed " << c.id << ": " << c.measured << ' '
                    << scenario::to_string(c.relation) << ' ' << c.threshold << '\n';
            }
        }
        return result.report.passed() ? exit_pass : exit_check_failure;
    } catch (const InvalidInput &e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error &e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }
}

int load_and_run(const std::string &path, const std::vector<std::string> &suites,
                 const Options &opt, std::ostream &out, std::ostream &err) {
    config::ScenarioConfig cfg;
    try {
        cfg = config::load_config(path);
    } catch (const config::ConfigError &e) {
        err << e.what() << '\n';
        return exit_usage;
    }
    return run_one(cfg, suites, opt, out, err);
}

} // namespace

std::string bundled_scenario_dir() { return EPTIME_SCENARIO_DIR; }

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Extended-phase-space time observable laboratory", "eptime"};
    app.set_version_flag("--version", EPTIME_VERSION);
    app.require_subcommand(1);

    Options opt;
    std::string subcommand;
    auto add_common = [&](CLI::App *sub, bool config_required) {
        auto *c = sub->add_option("--config", opt.config, "scenario config file");
        if (config_required) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (default: output.dir)");
        sub->add_option("--format", opt.format, "report format")
            ->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--seed", opt.seed, "override seeds.main");
        sub->callback([&, sub] { subcommand = sub->get_name(); });
    };
    for (const auto &name : config::suite_names()) {
        add_common(app.add_subcommand(name, "run the " + name + " suite"), true);
    }
    add_common(app.add_subcommand("all", "run every suite of one config, or every bundled "
                                         "scenario when --config is omitted"),
               false);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_pass : exit_usage;
    }

    if (subcommand != "all") return load_and_run(opt.config, {subcommand}, opt, out, err);
    if (!opt.config.empty()) return load_and_run(opt.config, {}, opt, out, err);

    std::vector<fs::path> configs;
    try {
        configs = bundled_configs(bundled_scenario_dir());
    } catch (const InvalidInput &e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    if (configs.empty()) {
        err << "error: no scenarios found in '" << bundled_scenario_dir() << "'\n";
        return exit_usage;
    }
    int worst = exit_pass;
    for (const auto &path : configs) {
        worst = std::max(worst, load_and_run(path.string(), {}, opt, out, err));
    }
    return worst;
}

} // namespace eptime::cli
