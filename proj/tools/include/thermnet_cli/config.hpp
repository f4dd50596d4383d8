#pragma once

// Experiment configuration: a JSON document in laboratory units (GHz, MHz,
// ns, us) that is merged key-by-key over the bundled device preset.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermnet/circuit/circuit.hpp"
#include "thermnet/protocols/protocols.hpp"

namespace thermnet::cli {

using Json = nlohmann::json;

struct CircuitConfig {
  circuit::CircuitNetwork network;
  double target_frequency = 0.0;  // rad/s
  double band_lo = 0.0;
  double band_hi = 0.0;
  double sweep_phi_min = 0.0;
  double sweep_phi_max = 0.0;
  int sweep_points = 0;
};

struct SystemConfig {
  double t_hot = 0.0;
  int qubit_levels = 0;
  int fock_cutoff = 0;
  double qubit_frequency[2] = {0.0, 0.0};
  double anharmonicity = 0.0;
  double coupling[2] = {0.0, 0.0};
  double mode_frequency = 0.0;
  double intrinsic_kappa = 0.0;
  double dcoupler_kappa_on = 0.0;
  double dcoupler_kappa_off = 0.0;
  double pure_dephasing = 0.0;
  std::vector<protocols::ThermalRow> rows;

  const protocols::ThermalRow& row(double t) const;
  protocols::SystemModel model() const { return model_at(t_hot); }
  protocols::SystemModel model_at(double t) const;
};

struct ChevronConfig {
  double detuning_span = 0.0;  // rad/s, full width
  int detuning_points = 0;
  double duration = 0.0;
  double time_step = 0.0;
};

struct SteadyScanConfig {
  double occupancy_min = 0.0;
  double occupancy_max = 0.0;
  int occupancy_points = 0;
  double lifetime_min = 0.0;  // 1/kappa_c, s
  double lifetime_max = 0.0;
  int kappa_points = 0;
  double target_off = 0.0;
  double target_on = 0.0;
  double band = 0.0;
};

struct ResetConfig {
  double swap_period = 0.0;
  double resonator_lifetime = 0.0;
  double duration = 0.0;
  double target_excitation = 0.0;
};

struct ProtocolConfig {
  double sample_interval = 0.0;
  double max_dt = 0.0;
  double cooling_duration = 0.0;
  double retherm_duration = 0.0;
  double retherm_fit_start = 0.0;
  double retherm_fit_stop = 0.0;
  double fit_noise = 0.0;  // additive Gaussian noise on traces before fitting
  double bell_grid = 0.0;
  double bell_max_stage1 = 0.0;
  double bell_max_stage2 = 0.0;
  ChevronConfig chevron;
  SteadyScanConfig steady_scan;
  ResetConfig reset;
};

struct TomographyConfig {
  double confusion_error = 0.0;
  bool spam_correction = true;

  tomography::TomographyOptions options(int n_qubits) const;
};

struct ExperimentConfig {
  CircuitConfig circuit;
  SystemConfig system;
  ProtocolConfig protocol;
  TomographyConfig tomography;
  std::string output_directory;
  std::uint64_t seed = 0;

  /// The fully resolved document this config was decoded from.
  Json document;
  std::uint64_t hash() const;
};

/// The bundled device preset, built from the library reference values.
Json default_document();

/// Parses `text`, reporting syntax errors with line and column.
Json parse_document(const std::string& text, const std::string& origin);

/// Recursively overlays `patch` onto `base`. Keys absent from `base` and
/// type changes are rejected with the dotted key path.
void merge_strict(Json& base, const Json& patch, const std::string& path = "");

/// `key.sub=value`; the value is read as JSON, falling back to a string.
void apply_override(Json& doc, const std::string& assignment);

/// Validates and converts a resolved document.
ExperimentConfig decode(const Json& doc);

/// Preset + optional file + overrides, in that order.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
ExperimentConfig load_default(const std::vector<std::string>& overrides = {});

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace thermnet::cli
