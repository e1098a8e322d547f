#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spraymet/scenario.hpp"
#include "spraymet/version.hpp"

namespace {

int run_command(const std::string& scenario_path, const std::string& out_dir, bool seed_set,
                std::uint64_t seed, int jobs) {
    spraymet::RunOverrides overrides;
    overrides.jobs = jobs;
    overrides.out_dir = out_dir;
    if (seed_set)
        overrides.seed = seed;
    spraymet::RunResult result = spraymet::run_scenario_file(scenario_path, overrides);

    std::filesystem::create_directories(out_dir);
    std::filesystem::path report_path = std::filesystem::path(out_dir) / "report.json";
    std::ofstream out(report_path);
    out << result.report.dump(2) << '\n';
    if (!out)
        throw spraymet::Error("cannot write report to " + report_path.string());

    for (const auto& task : result.report["tasks"]) {
        bool pass = task["pass"].get<bool>();
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << task["task"].get<std::string>() << '\n';
    }
    const auto& summary = result.report["summary"];
    std::cout << summary["passed"].get<int>() << "/" << summary["tasks"].get<int>()
              << " tasks passed; report: " << report_path.string() << '\n';
    return result.exit_code;
}

int selftest_command(bool verbose, int jobs) {
    spraymet::RunResult result = spraymet::selftest(jobs);
    std::cout << std::scientific << std::setprecision(3);
    for (const auto& fixture : result.report["fixtures"]) {
        bool pass = fixture["pass"].get<bool>();
        if (!verbose && pass)
            continue;
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << fixture["name"].get<std::string>()
                  << "  observed " << fixture["observed"].get<double>() << "  threshold "
                  << fixture["threshold"].get<double>() << '\n';
    }
    for (const auto& [group, pass] : result.report["groups"].items())
        std::cout << "group " << group << ": " << (pass.get<bool>() ? "pass" : "FAIL") << '\n';
    const auto& summary = result.report["summary"];
    std::cout << summary["passed"].get<int>() << "/" << summary["total"].get<int>()
              << " fixtures passed" << '\n';
    return result.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(spraymet::kToolName) + " " + spraymet::kVersion +
                 ": numerical metrizability checks for sprays"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int jobs = 1;
    CLI::App* run = app.add_subcommand("run", "run every task in a scenario file");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "directory for report.json and trajectory exports");
    CLI::Option* seed_opt = run->add_option("--seed", seed, "override the scenario sample seed");
    run->add_option("--jobs", jobs, "worker threads for per-point loops");

    bool verbose = false;
    int self_jobs = 1;
    CLI::App* self = app.add_subcommand("selftest", "run the built-in fixture matrix");
    self->add_flag("--verbose", verbose, "print passing fixtures too");
    self->add_option("--jobs", self_jobs, "worker threads for per-point loops");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_command(scenario_path, out_dir, seed_opt->count() > 0, seed, jobs);
        return selftest_command(verbose, self_jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
