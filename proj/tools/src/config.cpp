#include "thermnet_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "thermnet/error.hpp"
#include "thermnet/units.hpp"

namespace thermnet::cli {
namespace {

using units::ns;
using units::us;

// Round-trips a derived SI value to a short decimal so the preset stays readable.
double tidy(double x) { return std::stod(fmt::format("{:.12g}", x)); }

Json segment_json(const circuit::LineSegment& s) {
  return {{"inductance_nh_per_m", tidy(s.inductance_per_length * 1e9)},
          {"capacitance_pf_per_m", tidy(s.capacitance_per_length * 1e12)},
          {"length_mm", tidy(s.length * 1e3)}};
}

Json row_json(const protocols::ThermalRow& r) {
  return {{"t_hot_k", r.t_hot},
          {"qubit_lifetime_us", {tidy(r.qubit_lifetime[0] / us), tidy(r.qubit_lifetime[1] / us)}},
          {"qubit_occupancy", {r.qubit_occupancy[0], r.qubit_occupancy[1]}},
          {"mode_occupancy_on", {r.mode_occupancy_on[0], r.mode_occupancy_on[1]}},
          {"mode_occupancy_off", {r.mode_occupancy_off[0], r.mode_occupancy_off[1]}}};
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Strict accessor: every read names its dotted key in errors.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const Json& at(const std::string& key) const {
    if (!j_.is_object() || !j_.contains(key)) throw ConfigError("missing key '" + join(path_, key) + "'");
    return j_.at(key);
  }
  Reader child(const std::string& key) const {
    const Json& c = at(key);
    if (!c.is_object()) throw ConfigError("'" + join(path_, key) + "' must be an object");
    return Reader(c, join(path_, key));
  }

  double number(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError("'" + join(path_, key) + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("'" + join(path_, key) + "' must be finite");
    return x;
  }
  double positive(const std::string& key) const {
    const double x = number(key);
    if (!(x > 0.0)) throw ConfigError("'" + join(path_, key) + "' must be positive");
    return x;
  }
  double non_negative(const std::string& key) const {
    const double x = number(key);
    if (x < 0.0) throw ConfigError("'" + join(path_, key) + "' must be non-negative");
    return x;
  }
  int integer(const std::string& key, int min) const {
    const Json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError("'" + join(path_, key) + "' must be an integer");
    const auto x = v.get<long long>();
    if (x < min || x > 1'000'000) throw ConfigError("'" + join(path_, key) + "' out of range");
    return static_cast<int>(x);
  }
  bool boolean(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError("'" + join(path_, key) + "' must be true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError("'" + join(path_, key) + "' must be a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::size_t n, bool require_positive) const {
    const Json& v = at(key);
    const std::string name = join(path_, key);
    if (!v.is_array() || v.size() != n) throw ConfigError(fmt::format("'{}' must be an array of {} numbers", name, n));
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("'" + name + "' must contain numbers only");
      const double x = e.get<double>();
      if (!std::isfinite(x) || (require_positive && !(x > 0.0)) || x < 0.0)
        throw ConfigError("'" + name + "' entries must be " + (require_positive ? "positive" : "non-negative"));
      out.push_back(x);
    }
    return out;
  }

  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, _] : j_.items()) {
      bool ok = false;
      for (const char* allowed : keys) ok = ok || k == allowed;
      if (!ok) throw ConfigError("unknown key '" + join(path_, k) + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
};

circuit::LineSegment read_segment(const Reader& r) {
  return {r.positive("inductance_nh_per_m") * 1e-9, r.positive("capacitance_pf_per_m") * 1e-12,
          r.positive("length_mm") * 1e-3};
}

protocols::ThermalRow read_row(const Reader& r) {
  r.only({"t_hot_k", "qubit_lifetime_us", "qubit_occupancy", "mode_occupancy_on", "mode_occupancy_off"});
  protocols::ThermalRow row;
  row.t_hot = r.positive("t_hot_k");
  const auto life = r.numbers("qubit_lifetime_us", 2, true);
  const auto nq = r.numbers("qubit_occupancy", 2, false);
  const auto on = r.numbers("mode_occupancy_on", 2, false);
  const auto off = r.numbers("mode_occupancy_off", 2, false);
  for (int n = 0; n < 2; ++n) {
    row.qubit_lifetime[n] = life[n] * us;
    row.qubit_occupancy[n] = nq[n];
    row.mode_occupancy_on[n] = on[n];
    row.mode_occupancy_off[n] = off[n];
  }
  return row;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

const protocols::ThermalRow& SystemConfig::row(double t) const {
  for (const auto& r : rows)
    if (std::abs(r.t_hot - t) < 1e-9) return r;
  throw ConfigError(fmt::format("no thermal row for t_hot_k = {}", t));
}

protocols::SystemModel SystemConfig::model_at(double t) const {
  const auto& r = row(t);
  protocols::SystemModel m;
  for (int n = 0; n < 2; ++n) {
    dynamics::QubitParams q;
    q.frequency = qubit_frequency[n];
    q.anharmonicity = anharmonicity;
    q.levels = qubit_levels;
    q.relaxation = 1.0 / r.qubit_lifetime[n];
    q.occupancy = r.qubit_occupancy[n];
    q.pure_dephasing = pure_dephasing;
    m.qubits.push_back(q);
    m.mode_occupancy_on.push_back(r.mode_occupancy_on[n]);
    m.mode_occupancy_off.push_back(r.mode_occupancy_off[n]);
  }
  m.couplings = {coupling[0], coupling[1]};
  m.mode_frequency = mode_frequency;
  m.intrinsic_kappa = intrinsic_kappa;
  m.dcoupler_kappa_on = dcoupler_kappa_on;
  m.dcoupler_kappa_off = dcoupler_kappa_off;
  m.fock_cutoff = fock_cutoff;
  m.validate();
  return m;
}

tomography::TomographyOptions TomographyConfig::options(int n_qubits) const {
  tomography::TomographyOptions o;
  o.spam_correction = spam_correction;
  if (confusion_error > 0.0) o.confusion.assign(n_qubits, tomography::ConfusionMatrix::symmetric(confusion_error));
  return o;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(document.dump()); }

Json default_document() {
  const auto net = circuit::CircuitNetwork::reference();
  const auto m = protocols::reference_model(4.0);
  const auto& d = net.dcoupler;

  Json rows = Json::array();
  for (const auto& r : protocols::reference_rows()) rows.push_back(row_json(r));

  Json doc;
  doc["circuit"] = {
      {"alice_stub", segment_json(net.alice_stub)},
      {"cable", segment_json(net.cable)},
      {"bob_stub", segment_json(net.bob_stub)},
      {"dcoupler",
       {{"series_capacitance_ff", tidy(d.series_capacitance * 1e15)},
        {"parasitic_capacitance_ff", tidy(d.parasitic_capacitance * 1e15)},
        {"zero_flux_inductance_nh", tidy(d.zero_flux_inductance * 1e9)},
        {"parasitic_resistance_ohm", d.parasitic_resistance},
        {"load_resistance_ohm", d.load_resistance}}},
      {"target_frequency_ghz", tidy(units::to_ghz(m.mode_frequency))},
      {"band_ghz", {4.0, 8.0}},
      {"sweep", {{"phi_min", -0.499}, {"phi_max", -0.05}, {"points", 450}}},
  };
  doc["system"] = {
      {"t_hot_k", 4.0},
      {"qubit_levels", m.qubits[0].levels},
      {"fock_cutoff", 0},
      {"qubit_frequency_ghz",
       {tidy(units::to_ghz(m.qubits[0].frequency)), tidy(units::to_ghz(m.qubits[1].frequency))}},
      {"anharmonicity_mhz", tidy(units::to_mhz(m.qubits[0].anharmonicity))},
      {"coupling_mhz", {tidy(units::to_mhz(m.couplings[0])), tidy(units::to_mhz(m.couplings[1]))}},
      {"mode_frequency_ghz", tidy(units::to_ghz(m.mode_frequency))},
      {"intrinsic_lifetime_ns", tidy(1.0 / m.intrinsic_kappa / ns)},
      {"dcoupler_lifetime_on_ns", tidy(1.0 / m.dcoupler_kappa_on / ns)},
      {"dcoupler_lifetime_off_ms", tidy(1.0 / m.dcoupler_kappa_off / units::ms)},
      {"pure_dephasing_per_us", 0.0},
      {"thermal_rows", rows},
  };
  doc["protocol"] = {
      {"sample_interval_ns", 1.0},
      {"max_dt_ns", 0.05},
      {"cooling_duration_ns", 2000.0},
      {"retherm_duration_us", 4.0},
      {"retherm_fit_window_us", {0.0, 4.0}},
      {"fit_noise", 0.0},
      {"bell", {{"grid_ns", 1.0}, {"max_stage1_ns", 60.0}, {"max_stage2_ns", 120.0}}},
      {"chevron", {{"detuning_span_mhz", 40.0}, {"detuning_points", 41}, {"duration_ns", 400.0}, {"time_step_ns", 2.0}}},
      {"steady_scan",
       {{"occupancy_min", 0.01},
        {"occupancy_max", 20.0},
        {"occupancy_points", 25},
        {"lifetime_min_ns", 5.0},
        {"lifetime_max_ns", 2000.0},
        {"kappa_points", 20},
        {"target_off", 0.556},
        {"target_on", 0.095},
        {"band", 0.01}}},
      {"reset", {{"swap_period_ns", 3.2}, {"resonator_lifetime_ns", 60.0}, {"duration_ns", 1000.0}, {"target_excitation", 0.111}}},
  };
  doc["tomography"] = {{"confusion_error", 0.0}, {"spam_correction", true}};
  doc["output"] = {{"directory", "out"}};
  doc["seed"] = 0;
  return doc;
}

Json parse_document(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    std::string what = e.what();
    // nlohmann prefixes "[json.exception.parse_error.101] parse error at line L, column C: "
    if (auto p = what.find(": "); p != std::string::npos) what = what.substr(p + 2);
    throw ConfigError(fmt::format("{}:{}:{}: {}", origin, line, col, what));
  }
}

void merge_strict(Json& base, const Json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("'" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string name = join(path, key);
    if (!base.contains(key)) throw ConfigError("unknown key '" + name + "'");
    Json& target = base[key];
    if (target.is_object()) {
      merge_strict(target, value, name);
      continue;
    }
    const bool same = (target.is_number() && value.is_number()) || target.type() == value.type();
    if (!same) throw ConfigError(fmt::format("'{}' expects {}, got {}", name, target.type_name(), value.type_name()));
    target = value;
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }

  Json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t p; (p = rest.find('.')) != std::string::npos; rest = rest.substr(p + 1)) parts.push_back(rest.substr(0, p));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override key '" + key + "' has an empty component");
    patch = Json{{*it, patch}};
  }
  merge_strict(doc, patch);
}

ExperimentConfig decode(const Json& doc) {
  ExperimentConfig cfg;
  cfg.document = doc;
  const Reader root(doc, "");

  {
    const Reader c = root.child("circuit");
    auto& net = cfg.circuit.network;
    net.alice_stub = read_segment(c.child("alice_stub"));
    net.cable = read_segment(c.child("cable"));
    net.bob_stub = read_segment(c.child("bob_stub"));
    const Reader d = c.child("dcoupler");
    net.dcoupler.series_capacitance = d.positive("series_capacitance_ff") * 1e-15;
    net.dcoupler.parasitic_capacitance = d.positive("parasitic_capacitance_ff") * 1e-15;
    net.dcoupler.zero_flux_inductance = d.positive("zero_flux_inductance_nh") * 1e-9;
    net.dcoupler.parasitic_resistance = d.positive("parasitic_resistance_ohm");
    net.dcoupler.load_resistance = d.non_negative("load_resistance_ohm");
    try {
      net.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("circuit: ") + e.what());
    }
    cfg.circuit.target_frequency = units::ghz(c.positive("target_frequency_ghz"));
    const auto band = c.numbers("band_ghz", 2, true);
    if (!(band[1] > band[0])) throw ConfigError("'circuit.band_ghz' must be increasing");
    cfg.circuit.band_lo = units::ghz(band[0]);
    cfg.circuit.band_hi = units::ghz(band[1]);
    const Reader s = c.child("sweep");
    cfg.circuit.sweep_phi_min = s.number("phi_min");
    cfg.circuit.sweep_phi_max = s.number("phi_max");
    cfg.circuit.sweep_points = s.integer("points", 2);
    if (!(cfg.circuit.sweep_phi_max > cfg.circuit.sweep_phi_min) || cfg.circuit.sweep_phi_min <= -0.5 ||
        cfg.circuit.sweep_phi_max >= 0.5)
      throw ConfigError("'circuit.sweep' must satisfy -0.5 < phi_min < phi_max < 0.5");
  }

  {
    const Reader s = root.child("system");
    auto& sys = cfg.system;
    sys.t_hot = s.positive("t_hot_k");
    sys.qubit_levels = s.integer("qubit_levels", 2);
    sys.fock_cutoff = s.integer("fock_cutoff", 0);
    if (sys.fock_cutoff == 1) throw ConfigError("'system.fock_cutoff' must be 0 (automatic) or at least 2");
    const auto f = s.numbers("qubit_frequency_ghz", 2, true);
    const auto g = s.numbers("coupling_mhz", 2, false);
    for (int n = 0; n < 2; ++n) {
      sys.qubit_frequency[n] = units::ghz(f[n]);
      sys.coupling[n] = units::mhz(g[n]);
    }
    sys.anharmonicity = units::mhz(s.number("anharmonicity_mhz"));
    sys.mode_frequency = units::ghz(s.positive("mode_frequency_ghz"));
    sys.intrinsic_kappa = 1.0 / (s.positive("intrinsic_lifetime_ns") * ns);
    sys.dcoupler_kappa_on = 1.0 / (s.positive("dcoupler_lifetime_on_ns") * ns);
    sys.dcoupler_kappa_off = 1.0 / (s.positive("dcoupler_lifetime_off_ms") * units::ms);
    sys.pure_dephasing = s.non_negative("pure_dephasing_per_us") / us;
    const Json& rows = s.at("thermal_rows");
    if (!rows.is_array() || rows.empty()) throw ConfigError("'system.thermal_rows' must be a non-empty array");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string name = fmt::format("system.thermal_rows[{}]", i);
      if (!rows[i].is_object()) throw ConfigError("'" + name + "' must be an object");
      sys.rows.push_back(read_row(Reader(rows[i], name)));
    }
    for (std::size_t i = 0; i < sys.rows.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (std::abs(sys.rows[i].t_hot - sys.rows[j].t_hot) < 1e-9)
          throw ConfigError(fmt::format("'system.thermal_rows' repeats t_hot_k = {}", sys.rows[i].t_hot));
    (void)sys.row(sys.t_hot);
    try {
      (void)sys.model();
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("system: ") + e.what());
    }
  }

  {
    const Reader p = root.child("protocol");
    auto& pc = cfg.protocol;
    pc.sample_interval = p.positive("sample_interval_ns") * ns;
    pc.max_dt = p.positive("max_dt_ns") * ns;
    pc.cooling_duration = p.positive("cooling_duration_ns") * ns;
    pc.retherm_duration = p.positive("retherm_duration_us") * us;
    const auto win = p.numbers("retherm_fit_window_us", 2, false);
    if (!(win[1] > win[0])) throw ConfigError("'protocol.retherm_fit_window_us' must be increasing");
    pc.retherm_fit_start = win[0] * us;
    pc.retherm_fit_stop = win[1] * us;
    pc.fit_noise = p.non_negative("fit_noise");

    const Reader b = p.child("bell");
    pc.bell_grid = b.positive("grid_ns") * ns;
    pc.bell_max_stage1 = b.positive("max_stage1_ns") * ns;
    pc.bell_max_stage2 = b.positive("max_stage2_ns") * ns;

    const Reader c = p.child("chevron");
    pc.chevron.detuning_span = units::mhz(c.non_negative("detuning_span_mhz"));
    pc.chevron.detuning_points = c.integer("detuning_points", 1);
    pc.chevron.duration = c.positive("duration_ns") * ns;
    pc.chevron.time_step = c.positive("time_step_ns") * ns;

    const Reader s = p.child("steady_scan");
    auto& sc = pc.steady_scan;
    sc.occupancy_min = s.positive("occupancy_min");
    sc.occupancy_max = s.positive("occupancy_max");
    sc.occupancy_points = s.integer("occupancy_points", 2);
    sc.lifetime_min = s.positive("lifetime_min_ns") * ns;
    sc.lifetime_max = s.positive("lifetime_max_ns") * ns;
    sc.kappa_points = s.integer("kappa_points", 2);
    sc.target_off = s.positive("target_off");
    sc.target_on = s.positive("target_on");
    sc.band = s.non_negative("band");
    if (!(sc.occupancy_max > sc.occupancy_min)) throw ConfigError("'protocol.steady_scan' occupancy range is empty");
    if (!(sc.lifetime_max > sc.lifetime_min)) throw ConfigError("'protocol.steady_scan' lifetime range is empty");
    if (sc.target_off >= 1.0 || sc.target_on >= 1.0) throw ConfigError("'protocol.steady_scan' targets must lie in (0, 1)");

    const Reader r = p.child("reset");
    pc.reset.swap_period = r.positive("swap_period_ns") * ns;
    pc.reset.resonator_lifetime = r.positive("resonator_lifetime_ns") * ns;
    pc.reset.duration = r.positive("duration_ns") * ns;
    pc.reset.target_excitation = r.non_negative("target_excitation");
  }

  {
    const Reader t = root.child("tomography");
    cfg.tomography.confusion_error = t.non_negative("confusion_error");
    if (cfg.tomography.confusion_error >= 0.5) throw ConfigError("'tomography.confusion_error' must be below 0.5");
    cfg.tomography.spam_correction = t.boolean("spam_correction");
  }

  cfg.output_directory = root.child("output").string("directory");
  if (cfg.output_directory.empty()) throw ConfigError("'output.directory' must not be empty");
  const Json& seed = root.at("seed");
  if (!seed.is_number_integer() || seed.get<long long>() < 0) throw ConfigError("'seed' must be a non-negative integer");
  cfg.seed = seed.get<std::uint64_t>();
  return cfg;
}

ExperimentConfig load_default(const std::vector<std::string>& overrides) {
  Json doc = default_document();
  for (const auto& o : overrides) apply_override(doc, o);
  return decode(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const Json user = parse_document(ss.str(), path.string());

  Json doc = default_document();
  merge_strict(doc, user);
  for (const auto& o : overrides) apply_override(doc, o);
  return decode(doc);
}

}  // namespace thermnet::cli
