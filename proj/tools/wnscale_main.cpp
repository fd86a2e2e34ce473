#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "wnscale/harness.hpp"
#include "wnscale/io.hpp"
#include "wnscale/laws.hpp"

namespace fs = std::filesystem;
using namespace wnscale;

namespace {

void print_summary(const SweepResult& r) {
  for (const auto& f : r.fits)
    std::cout << (f.pass ? "PASS " : "FAIL ") << r.scenario << " fit " << f.metric << " (" << f.kind
              << "): exponent " << format_double(f.fit.exponent) << " +- "
              << format_double(f.fit.standard_error) << ", predicted " << format_double(f.predicted)
              << ", tolerance " << format_double(f.tolerance) << '\n';
  for (const auto& c : r.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << r.scenario << " check " << c.name << ": " << c.detail << '\n';
  for (const auto& f : r.failures)
    std::cout << "FAIL " << r.scenario << " point n=" << f.n << " repeat=" << f.repeat << " seed=" << f.seed
              << ": " << f.message << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
            std::size_t jobs) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  const auto result = run_scenario(cfg, jobs);
  fs::create_directories(out_dir);
  const auto csv = fs::path(out_dir) / (result.scenario + ".csv");
  write_results(result, csv);
  print_summary(result);
  std::cout << "wrote " << csv.string() << " and " << summary_path_for(csv).string() << '\n';
  return result.passed() ? 0 : 1;
}

int cmd_fit(const std::string& csv_path, const std::string& metric) {
  SweepResult r;
  r.rows = read_results(csv_path);
  const auto medians = r.medians(metric);
  if (medians.empty()) {
    std::cerr << "no rows for metric " << metric << " in " << csv_path << '\n';
    return 2;
  }
  const auto fit = fit_exponent({medians, metric});
  std::cout << "n,median\n";
  for (const auto& p : medians) std::cout << format_double(p.n) << ',' << format_double(p.value) << '\n';
  std::cout << "exponent " << format_double(fit.exponent) << " stderr " << format_double(fit.standard_error)
            << " r2 " << format_double(fit.r_squared) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scaling-law experiments for wireless network capacity"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", csv_path, metric;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "run one scenario sweep from a JSON config");
  run->add_option("--config", config_path, "scenario config file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list-scenarios", "print the scenario names");

  auto* fit = app.add_subcommand("fit", "fit a power law to one metric of a results CSV");
  fit->add_option("--csv", csv_path, "results CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--metric", metric, "metric name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir, seed, jobs);
    if (*list) {
      for (auto name : scenario_names()) std::cout << name << '\n';
      return 0;
    }
    if (*fit) return cmd_fit(csv_path, metric);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
