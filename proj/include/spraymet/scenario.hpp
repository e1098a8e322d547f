#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "spraymet/metrizability.hpp"

namespace spraymet {

struct RunOverrides {
    std::optional<std::uint64_t> seed; // replaces the scenario's sample seed
    int jobs = 1;
    std::string out_dir = "."; // CSV exports land here
};

struct RunResult {
    // 0: all tasks pass; 2: some task failed or was inconclusive.
    // Schema and reference errors throw instead (the CLI maps them to 1).
    int exit_code = 0;
    nlohmann::ordered_json report;
};

// Executes the tasks of a scenario document in order. The report is
// byte-deterministic for a fixed document and seed except for its
// "timing" object, which holds every volatile value.
RunResult run_scenario(const nlohmann::ordered_json& scenario, const RunOverrides& overrides = {});
RunResult run_scenario_file(const std::string& path, const RunOverrides& overrides = {});

// Built-in fixture matrix over all module invariants; deterministic
// apart from the "timing" object. exit_code 0 iff every fixture passes.
RunResult selftest(int jobs = 1);

} // namespace spraymet
