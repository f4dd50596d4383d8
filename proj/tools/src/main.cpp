#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "thermnet/error.hpp"
#include "thermnet_cli/config.hpp"
#include "thermnet_cli/experiments.hpp"

namespace {

constexpr int kNumericFailure = 1;
constexpr int kUsageFailure = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("thermnet");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("THERMNET_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

int fail(const std::string& kind, const std::string& message, int code) {
  const nlohmann::json err{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

std::string joined(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  using namespace thermnet;

  CLI::App app{"Thermal microwave network simulator"};
  app.set_version_flag("--version", "0.1.0");
  std::string experiment;
  std::string figure;
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool dump_config = false;

  app.add_option("experiment", experiment,
                 "One of: " + joined(cli::experiment_names()) + ", or 'reproduce <figure>'");
  app.add_option("figure", figure, "Figure id for 'reproduce': " + joined(cli::figure_ids()));
  app.add_option("-c,--config", config_path, "JSON config merged over the bundled preset");
  app.add_option("-o,--out", out_dir, "Output directory (overrides output.directory)");
  app.add_option("-s,--set", overrides, "Override a config key, e.g. system.t_hot_k=2")->take_all();
  app.add_flag("--print-config", dump_config, "Print the resolved config as JSON and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsageFailure);
  }

  cli::ExperimentConfig cfg;
  try {
    cfg = config_path.empty() ? cli::load_default(overrides) : cli::load_config(config_path, overrides);
    if (!out_dir.empty()) cfg.output_directory = out_dir;
    if (experiment == "reproduce") {
      if (figure.empty()) throw ConfigError("'reproduce' needs a figure id: " + joined(cli::figure_ids()));
    } else if (!figure.empty()) {
      throw ConfigError("unexpected argument '" + figure + "'");
    }
  } catch (const Error& e) {
    return fail("config", e.what(), kUsageFailure);
  } catch (const std::exception& e) {
    return fail("config", e.what(), kUsageFailure);
  }

  if (dump_config) {
    std::cout << cfg.document.dump(2) << "\n";
    return 0;
  }
  if (experiment.empty()) return fail("usage", "experiment is required", kUsageFailure);

  const bool is_figure = experiment == "reproduce";
  const std::string& name = is_figure ? figure : experiment;
  const auto& known = is_figure ? cli::figure_ids() : cli::experiment_names();
  if (std::find(known.begin(), known.end(), name) == known.end())
    return fail("usage", fmt::format("unknown {} '{}'; expected one of: {}", is_figure ? "figure" : "experiment", name,
                                     joined(known)),
                kUsageFailure);

  try {
    const std::filesystem::path out = cfg.output_directory;
    const auto outcome = is_figure ? cli::reproduce_figure(name, cfg, out) : cli::run_experiment(name, cfg, out);
    cli::append_ledger(out / "ledger.csv",
                       {outcome.name, cfg.hash(), cfg.seed, cli::utc_timestamp(), outcome.scalars, outcome.artifacts});
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [k, v] : outcome.scalars) summary[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    std::cout << nlohmann::json{{"name", outcome.name}, {"scalars", summary}}.dump() << "\n";
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kUsageFailure);
  } catch (const InvalidArgument& e) {
    return fail("model", e.what(), kNumericFailure);
  } catch (const NumericalError& e) {
    return fail("numeric", e.what(), kNumericFailure);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kNumericFailure);
  }
  return 0;
}
