#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splitlab/harness/config.hpp"
#include "splitlab/objectives.hpp"

namespace splitlab::harness {

/// Command-line overrides of the spec.
struct CommandOptions {
    std::string out_dir;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<int> parallel;
    std::optional<std::string> format;
};

struct CommandResult {
    std::string out_dir;
    std::vector<std::string> files;  // relative to out_dir, manifest excluded
    std::string manifest;
};

/// --out, then [output] dir, then $SPLITLAB_OUT, then "results".
std::string resolve_out_dir(const ExperimentSpec& spec, const CommandOptions& options);

/// Spec with command-line overrides applied and n_clients synced to the objective.
ExperimentSpec apply_options(ExperimentSpec spec, const CommandOptions& options);

struct BuiltObjective {
    std::shared_ptr<const Objective> objective;
    std::optional<HeterogeneityConstants> constants;  // analytic, when available
    std::optional<double> f_star;
    std::string label;                                // e.g. "G2", "alpha0.5"; empty without a grid
};

/// Builds the objective of `spec`, with the heterogeneity knob (G, alpha or
/// C) overridden by `distribution` when given.
BuiltObjective build_objective(const ObjectiveSpec& spec, std::size_t batch_size,
                               std::optional<double> distribution = std::nullopt);

CommandResult cmd_run(const ExperimentSpec& spec, const CommandOptions& options);
CommandResult cmd_bounds(const ExperimentSpec& spec, const CommandOptions& options);
CommandResult cmd_compare(const ExperimentSpec& spec, const CommandOptions& options);
CommandResult cmd_sweep(const ExperimentSpec& spec, const CommandOptions& options);

struct PartitionRequest {
    std::string labels_path;      // one integer label per line
    std::string mechanism = "dirichlet";
    std::size_t clients = 10;
    double alpha = 1.0;
    std::size_t classes_per_client = 2;
    std::uint64_t seed = 0;
};

/// Reads labels, one non-negative integer per line. Blank lines are skipped.
std::vector<int> read_labels(const std::string& path);

CommandResult cmd_partition(const PartitionRequest& request, const CommandOptions& options);

}  // namespace splitlab::harness
