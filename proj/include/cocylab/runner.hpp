#ifndef COCYLAB_RUNNER_HPP
#define COCYLAB_RUNNER_HPP

#include "cocylab/cocycle.hpp"
#include "cocylab/symbolic.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cocylab {

using Json = nlohmann::ordered_json;

/// Every subcommand; "schrodinger" takes a mode (scan, trace, periodic).
const std::vector<std::string>& experiment_names();

MarkovBase parse_base(const Json& j);
Cocycle parse_cocycle(const Json& j);

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

struct RunOutput {
  Json report;      // version, command, seed, threads, config, result, wall_time
  std::string csv;  // empty when the command has no table
};

/// Validates the config, resolves the seed (drawn from std::random_device
/// and recorded when absent) and runs one experiment. ValidationError,
/// BudgetError and NumericalError propagate to the caller.
RunOutput run_experiment(const std::string& command, const Json& config, const RunOverrides& overrides = {});

/// The report without wall_time and the thread count, for determinism
/// comparisons across runs and thread counts.
Json numerical_content(const Json& report);

}  // namespace cocylab

#endif  // COCYLAB_RUNNER_HPP
