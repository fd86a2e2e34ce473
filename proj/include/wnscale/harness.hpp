#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wnscale/laws.hpp"

namespace wnscale {

enum class Scenario {
  unicast2d,
  unicast3d,
  receiver_bottleneck,
  dumbbell,
  cluster,
  e2e_erasure,
  hop_by_hop,
  coded_multicast,
  block_synthesis,
  mobility,
};

const std::vector<std::string_view>& scenario_names();
std::string_view to_string(Scenario scenario);
std::optional<Scenario> parse_scenario(std::string_view name);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario-specific knobs. Each scenario reads only the ones it needs; the
/// defaults are the reference settings documented in README.md.
struct ScenarioParams {
  std::string regime = "dense";  // unicast2d / unicast3d / cluster
  double g = 0.5;                // cluster
  std::size_t bridges = 2;       // dumbbell
  double f = 0.5;                // dumbbell
  double p = 0.1;                // erasure scenarios
  double hop_constant = 1.0;     // C in the end-to-end law
  std::size_t max_slots = 1000000;   // e2e_erasure slot budget
  std::size_t packets = 10000;       // hop_by_hop file length
  std::size_t k = 100;               // coded_multicast file length
  std::vector<std::size_t> k_list;   // coded_multicast per-packet sweep
  double q = 0.9;
  std::size_t trials = 10000;
  std::vector<std::size_t> block_sizes{25, 25, 25, 25};  // block_synthesis
  std::size_t slots = 20000;    // mobility
  double rate = 0.01;           // mobility packets per slot per node
  double density = 1.0;         // mobility nodes per cell
};

struct ScenarioConfig {
  Scenario scenario = Scenario::unicast2d;
  std::vector<std::size_t> n_list;
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  ScenarioParams params;
  // Overrides of the per-scenario defaults from default_tolerances().
  std::map<std::string, double> tolerances;

  double tolerance(const std::string& name) const;
};

/// Tolerances applied when the config does not set them.
std::map<std::string, double> default_tolerances(Scenario scenario);

/// Parses the JSON config text; throws ConfigError on any problem.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Checks ranges and per-scenario preconditions; throws ConfigError.
void validate(const ScenarioConfig& config);

struct MetricRow {
  std::size_t n;
  std::size_t repeat;
  std::uint64_t seed;
  std::string metric;
  double value;
};

struct FitVerdict {
  std::string metric;
  std::string kind;  // "power" (log-log), "log_linear", "flat"
  ExponentFit fit;   // over per-n medians
  double mean_exponent = 0.0;  // same fit over per-n means
  double predicted = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RowFailure {
  std::size_t n;
  std::size_t repeat;
  std::uint64_t seed;
  std::string message;
};

struct SweepResult {
  std::string scenario;
  std::vector<MetricRow> rows;  // canonical order: n, repeat, metric
  std::vector<FitVerdict> fits;
  std::vector<Check> checks;
  std::vector<RowFailure> failures;

  bool passed() const;
  const FitVerdict* fit(std::string_view metric) const;
  const Check* check(std::string_view name) const;
  /// Per-n median over repeats, ascending n.
  std::vector<ScalingPoint> medians(std::string_view metric) const;
  std::vector<ScalingPoint> means(std::string_view metric) const;
};

/// Substream seed of one sweep point.
std::uint64_t point_seed(std::uint64_t master, std::size_t n, std::size_t repeat);

/// Runs every (n, repeat) point, fits each metric against its law and
/// evaluates the scenario checks. `jobs` worker threads share the points;
/// the result does not depend on it.
SweepResult run_scenario(const ScenarioConfig& config, std::size_t jobs = 1);

/// Writes the row CSV to `csv_path` and fits/checks to summary_path_for().
void write_results(const SweepResult& result, const std::filesystem::path& csv_path);
std::filesystem::path summary_path_for(const std::filesystem::path& csv_path);

inline constexpr std::string_view kResultsHeader = "scenario,n,repeat,seed,metric,value";

/// Reads a results CSV back into rows; throws std::runtime_error with the
/// path on malformed input.
std::vector<MetricRow> read_results(const std::filesystem::path& csv_path);

}  // namespace wnscale
