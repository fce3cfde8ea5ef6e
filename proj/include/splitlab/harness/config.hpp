#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "splitlab/engine.hpp"

namespace splitlab::harness {

/// Bad configuration text. line() is 1-based, 0 when the problem is not tied
/// to a line (missing field, JSON input).
class ConfigError : public UsageError {
public:
    ConfigError(std::string source, std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Objective recipe. `family` is one of quadratic, spectral, logistic, mlp,
/// constants (bounds only: L, sigma, B, G and F given directly).
struct ObjectiveSpec {
    std::string family;
    std::size_t clients = 2;
    std::size_t dim = 1;
    double smoothness = 1.0;     // L
    double min_curvature = 1.0;
    double heterogeneity = 0.0;  // G
    double sigma = 0.0;
    double B = 1.0;
    std::optional<double> F;
    double init_offset = 1.0;
    double init_scale = 1.0;
    std::uint64_t seed = 0;
    // dataset families
    std::size_t samples = 600;
    std::size_t test_samples = 200;
    std::size_t features = 2;
    int classes = 2;
    double separation = 2.0;
    std::string partition = "iid";  // iid, dirichlet, classes
    double alpha = 1.0;
    std::size_t classes_per_client = 1;
    std::size_t cut_width = 8;
    double regularization = 0.0;
};

struct SweepSpec {
    std::vector<double> lr_grid{0.0005, 0.001, 0.005, 0.01, 0.05, 0.1};
    std::vector<Algorithm> algorithms{Algorithm::fl, Algorithm::sl};
    /// Heterogeneity grid: G for quadratic families, alpha (dirichlet) or C
    /// (classes) for dataset families. Empty means the objective as written.
    std::vector<double> distributions;
    bool equal_effective_lr = false;
    double epsilon = 0.1;
    std::size_t probes = 50;
};

struct OutputSpec {
    std::string dir;
    std::string format = "csv";
    int parallel = 1;
};

struct ExperimentSpec {
    ObjectiveSpec objective;
    TrainConfig train;
    std::vector<std::uint64_t> seeds;
    SweepSpec sweep;
    OutputSpec output;

    std::string source = "<spec>";
    std::set<std::string> present;  // "section.key" entries given explicitly

    /// Seeds to run: the explicit list, or {train.seed}.
    std::vector<std::uint64_t> run_seeds() const;
};

/// Parses the sectioned key = value format or, when the text starts with '{',
/// the JSON form produced by to_json.
ExperimentSpec parse_spec(std::string_view text, std::string source = "<spec>");
ExperimentSpec load_spec(const std::string& path);

nlohmann::json to_json(const ExperimentSpec& spec);

/// JSON of everything that determines results (the output section is left out).
std::string canonical_json(const ExperimentSpec& spec);

/// 16 hex digits of FNV-1a over canonical_json.
std::string config_hash(const ExperimentSpec& spec);
std::string fnv1a_hex(std::string_view bytes);

/// Throws ConfigError naming the first missing "section.key".
void require_fields(const ExperimentSpec& spec, std::initializer_list<std::string_view> fields);

/// "0,1,5" or ranges "0-19", mixed freely.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace splitlab::harness
