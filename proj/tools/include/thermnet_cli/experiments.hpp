#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "thermnet_cli/config.hpp"
#include "thermnet_cli/io.hpp"

namespace thermnet::cli {

/// Collects the files an experiment writes, relative to the output root.
class ArtifactSink {
 public:
  ArtifactSink(std::filesystem::path root, std::string prefix);

  void csv(const std::string& name, const CsvTable& table);
  void json(const std::string& name, const Json& j);

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::string prefix_;
  std::vector<std::string> written_;
};

struct Outcome {
  std::string name;
  Scalars scalars;
  std::vector<std::string> artifacts;
};

const std::vector<std::string>& experiment_names();
const std::vector<std::string>& figure_ids();

/// Runs one experiment, writes its artifacts and summary.json under
/// `out/<name>/`. Does not touch the ledger.
Outcome run_experiment(const std::string& name, const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Same for a figure bundle, under `out/<figure_id>/`.
Outcome reproduce_figure(const std::string& figure_id, const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace thermnet::cli
