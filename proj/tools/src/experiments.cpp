#include "thermnet_cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "thermnet/analysis/fitting.hpp"
#include "thermnet/analysis/steady_scan.hpp"
#include "thermnet/error.hpp"
#include "thermnet/units.hpp"

namespace thermnet::cli {
namespace {

using units::ns;
using units::us;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1);
  return v;
}

protocols::RunOptions run_options(const ExperimentConfig& cfg) {
  protocols::RunOptions ro;
  ro.sample_interval = cfg.protocol.sample_interval;
  ro.max_dt = cfg.protocol.max_dt;
  return ro;
}

double lifetime(double kappa) { return kappa > 0.0 ? 1.0 / kappa : kInf; }

Json scalars_json(const Scalars& s) {
  Json j = Json::object();
  for (const auto& [k, v] : s) j[k] = std::isfinite(v) ? Json(v) : Json(nullptr);
  return j;
}

// Fit over [start, stop], optionally with seeded additive noise.
analysis::FitResult fit_window(const std::vector<double>& t, const std::vector<double>& y, double start, double stop,
                               double noise, std::uint64_t seed) {
  std::vector<double> tw, yw;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise > 0.0 ? noise : 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < start - 1e-15 || t[i] > stop + 1e-15) continue;
    tw.push_back(t[i]);
    yw.push_back(y[i] + (noise > 0.0 ? noise * gauss(rng) : 0.0));
  }
  return analysis::fit_exponential(tw, yw);
}

CsvTable trace_table(const protocols::ProtocolResult& r) {
  std::vector<std::string> cols{"time_ns"};
  for (std::size_t q = 0; q < r.excited_population.size(); ++q) cols.push_back(fmt::format("Pe_{}", char('A' + q)));
  cols.push_back("n_mode");
  CsvTable t(cols);
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::vector<double> row{r.times[i] / ns};
    for (const auto& pe : r.excited_population) row.push_back(pe[i]);
    row.push_back(r.mode_occupation[i]);
    t.add_row(row);
  }
  return t;
}

Json chi_json(const tomography::Matrix4& chi, double fidelity) {
  return {{"basis", {"I", "X", "Y", "Z"}}, {"chi", matrix_json(chi)}, {"fidelity", fidelity}};
}

// --- experiments -----------------------------------------------------------

Scalars exp_modes(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const auto& c = cfg.circuit;
  const auto off = circuit::find_off_point(c.network, c.target_frequency);
  circuit::ModeSearchOptions opts;
  opts.off_point = off.flux;
  const auto modes = circuit::find_modes(c.network, off.flux, c.band_lo, c.band_hi, opts);

  CsvTable t({"mode_index", "freq_GHz", "Q", "kappa_per_ns", "shift_MHz"});
  const circuit::ModeSolution* nearest = nullptr;
  for (const auto& m : modes) {
    t.add_row({double(m.mode_index), units::to_ghz(m.omega_m), m.quality_factor, m.kappa * ns,
               units::to_mhz(m.freq_shift_vs_off)});
    if (!nearest || std::abs(m.omega_m - c.target_frequency) < std::abs(nearest->omega_m - c.target_frequency))
      nearest = &m;
  }
  sink.csv("modes.csv", t);
  if (!nearest) throw NumericalError("no modes found in the configured band");
  return {{"off_point_phi", off.flux.phi_ratio()},
          {"mode_count", double(modes.size())},
          {"fsr_MHz", units::to_mhz(circuit::ideal_free_spectral_range(c.network))},
          {"target_mode_index", double(nearest->mode_index)},
          {"target_mode_freq_GHz", units::to_ghz(nearest->omega_m)}};
}

Scalars exp_kappa_sweep(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const auto& c = cfg.circuit;
  const auto off = circuit::find_off_point(c.network, c.target_frequency);
  const auto on = circuit::find_on_point(c.network, c.target_frequency);
  const auto phis = linspace(c.sweep_phi_min, c.sweep_phi_max, c.sweep_points);
  const auto pts = circuit::kappa_sweep(c.network, c.target_frequency, phis, off.flux);

  CsvTable t({"phi", "freq_GHz", "kappa_per_ns", "lifetime_ns", "shift_MHz"});
  for (const auto& p : pts)
    t.add_row({p.phi_ratio, units::to_ghz(p.mode.omega_m), p.mode.kappa * ns, lifetime(p.mode.kappa) / ns,
               units::to_mhz(p.mode.freq_shift_vs_off)});
  sink.csv("kappa_sweep.csv", t);
  return {{"on_point_phi", on.flux.phi_ratio()},
          {"on_lifetime_ns", lifetime(on.mode.kappa) / ns},
          {"off_point_phi", off.flux.phi_ratio()},
          {"off_lifetime_ms", lifetime(off.mode.kappa) / units::ms},
          {"mode_index", double(on.mode.mode_index)},
          {"sweep_points", double(pts.size())}};
}

Scalars exp_chevron(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const auto& ch = cfg.protocol.chevron;
  const auto model = cfg.system.model();
  const auto det = linspace(-0.5 * ch.detuning_span, 0.5 * ch.detuning_span, ch.detuning_points);
  Scalars s;
  for (auto [variant, label] : {std::pair{protocols::ChevronVariant::cooled, "cooled"},
                                std::pair{protocols::ChevronVariant::warm, "warm"}}) {
    const auto r = protocols::rabi_chevron_scan(model, det, ch.duration, ch.time_step, variant, run_options(cfg));
    CsvTable t({"detuning_MHz", "time_ns", "Pe"});
    for (std::size_t i = 0; i < r.detunings.size(); ++i)
      for (std::size_t k = 0; k < r.times.size(); ++k)
        t.add_row({units::to_mhz(r.detunings[i]), r.times[k] / ns, r.excited(i, k)});
    sink.csv(fmt::format("chevron_{}.csv", label), t);
    s.emplace_back(fmt::format("{}_max_Pe", label), r.excited.maxCoeff());
    s.emplace_back(fmt::format("{}_min_Pe", label), r.excited.minCoeff());
  }
  return s;
}

Scalars cooling_at(const ExperimentConfig& cfg, double t_hot, ArtifactSink& sink, const std::string& file) {
  const auto model = cfg.system.model_at(t_hot);
  const auto r = protocols::cooling_protocol(model, cfg.protocol.cooling_duration, run_options(cfg));
  sink.csv(file, trace_table(r));
  const auto& pe = r.excited_population[0];
  const auto fit = fit_window(r.times, pe, 0.0, r.times.back(), cfg.protocol.fit_noise, cfg.seed);
  return {{"initial_Pe", pe.front()}, {"final_Pe", pe.back()}, {"tau_ns", fit.time_constant() / ns},
          {"fit_offset", fit.offset}};
}

Scalars exp_cooling(const ExperimentConfig& cfg, ArtifactSink& sink) {
  return cooling_at(cfg, cfg.system.t_hot, sink, "cooling.csv");
}

Scalars exp_retherm(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const auto model = cfg.system.model();
  const auto& p = cfg.protocol;
  Scalars s;
  for (auto [variant, label] : {std::pair{protocols::RethermVariant::qubit_alone, "alone"},
                                std::pair{protocols::RethermVariant::coupled, "coupled"}}) {
    const auto r = protocols::rethermalization_protocol(model, p.retherm_duration, variant, run_options(cfg));
    sink.csv(fmt::format("retherm_{}.csv", label), trace_table(r));
    const auto& pe = r.excited_population[0];
    const auto fit = fit_window(r.times, pe, p.retherm_fit_start, p.retherm_fit_stop, p.fit_noise, cfg.seed);
    s.emplace_back(fmt::format("tau_{}_us", label), fit.time_constant() / us);
    s.emplace_back(fmt::format("final_Pe_{}", label), pe.back());
    s.emplace_back(fmt::format("fit_offset_{}", label), fit.offset);
  }
  return s;
}

struct TransferSummary {
  double f_chi = 0.0;
  Scalars scalars;
};

TransferSummary transfer_at(const ExperimentConfig& cfg, double t_hot, ArtifactSink& sink, const std::string& tag) {
  const auto model = cfg.system.model_at(t_hot);
  protocols::TransferOptions to;
  to.run = run_options(cfg);
  const auto tomo = cfg.tomography.options(1);
  const auto tt = protocols::transfer_process_tomography(model, tomo, to);
  sink.json(fmt::format("chi{}.json", tag), chi_json(tt.process.chi, tt.process.fidelity));

  to.time = tt.time;
  to.receiver_phase = tt.receiver_phase;
  Eigen::Matrix2cd one = Eigen::Matrix2cd::Zero();
  one(1, 1) = 1.0;
  const auto excited = protocols::photon_transfer_protocol(model, one, to);
  sink.csv(fmt::format("transfer{}.csv", tag), trace_table(excited.trajectory));

  return {tt.process.fidelity,
          {{"F_chi", tt.process.fidelity},
           {"transfer_time_ns", tt.time / ns},
           {"receiver_phase_rad", tt.receiver_phase},
           {"max_leakage", tt.max_leakage},
           {"clipped", tt.process.clipped},
           {"receiver_Pe", excited.receiver_state(1, 1).real()}}};
}

Scalars exp_transfer(const ExperimentConfig& cfg, ArtifactSink& sink) {
  auto s = transfer_at(cfg, cfg.system.t_hot, sink, "").scalars;
  s.emplace_back("ideal_transfer_time_ns", protocols::ideal_transfer_time(cfg.system.model()) / ns);
  return s;
}

struct BellSummary {
  double fidelity = 0.0;
  Scalars scalars;
};

BellSummary bell_at(const ExperimentConfig& cfg, double t_hot, ArtifactSink& sink, const std::string& tag,
                    const std::optional<protocols::BellTiming>& timing) {
  const auto model = cfg.system.model_at(t_hot);
  protocols::BellOptions bo;
  bo.run = run_options(cfg);
  bo.timing = timing ? *timing
                     : protocols::bell_timing_search(model, cfg.protocol.bell_grid, cfg.protocol.bell_max_stage1,
                                                     cfg.protocol.bell_max_stage2);
  const auto r = protocols::bell_protocol(model, bo);
  const auto tomo = tomography::state_tomography(r.rho, cfg.tomography.options(2));
  const double f = tomography::fidelity_state(tomo.rho, tomography::bell_psi_plus());
  sink.json(fmt::format("rho{}.json", tag),
            {{"basis", {"00", "01", "10", "11"}}, {"rho", matrix_json(tomo.rho)}, {"fidelity", f}});
  sink.csv(fmt::format("bell{}.csv", tag), trace_table(r.trajectory));
  Scalars s{{"F_rho", f},
            {"F_rho_direct", r.fidelity},
            {"stage1_ns", r.timing.stage1 / ns},
            {"stage2_ns", r.timing.stage2 / ns},
            {"lossless_F_rho", r.timing.fidelity},
            {"leakage", r.leakage},
            {"clipped", tomo.clipped}};
  if (cfg.tomography.confusion_error > 0.0) {
    auto raw_opts = cfg.tomography.options(2);
    raw_opts.spam_correction = false;
    const auto raw = tomography::state_tomography(r.rho, raw_opts);
    s.emplace_back("F_rho_raw", tomography::fidelity_state(raw.rho, tomography::bell_psi_plus()));
  }
  return {f, s};
}

Scalars exp_bell(const ExperimentConfig& cfg, ArtifactSink& sink) {
  return bell_at(cfg, cfg.system.t_hot, sink, "", std::nullopt).scalars;
}

Scalars exp_steady_scan(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const auto model = cfg.system.model();
  const auto& sc = cfg.protocol.steady_scan;
  const auto occ = analysis::log_grid(sc.occupancy_min, sc.occupancy_max, sc.occupancy_points);
  const auto kap = analysis::log_grid(1.0 / sc.lifetime_max, 1.0 / sc.lifetime_min, sc.kappa_points);
  const double kappa_off = model.intrinsic_kappa + model.dcoupler_kappa_off;
  const double kappa_on = model.intrinsic_kappa + model.dcoupler_kappa_on;

  Scalars s;
  for (int n = 0; n < 2; ++n) {
    const char q = char('A' + n);
    const analysis::ScanTemplate tpl{model.qubits[n], model.couplings[n], model.mode_frequency, cfg.system.fock_cutoff};
    auto off = analysis::steady_scan(tpl, occ, kap, sc.target_off, kappa_off, sc.band);

    CsvTable surface({"Nc", "kappa_c_per_us", "Pe"});
    for (std::size_t r = 0; r < kap.size(); ++r)
      for (std::size_t c = 0; c < occ.size(); ++c) surface.add_row({occ[c], kap[r] * us, off.excited(r, c)});
    sink.csv(fmt::format("surface_{}.csv", q), surface);

    // Same surface, second target level.
    auto on = off;
    on.target = sc.target_on;
    on.contour = analysis::marching_squares(occ, kap, off.excited, sc.target_on);
    on.contour_found = off.excited.minCoeff() <= sc.target_on && sc.target_on <= off.excited.maxCoeff();
    const double nc_on = analysis::solve_occupancy(tpl, kappa_on, sc.target_on, 1e-6, sc.occupancy_max);

    for (const auto& [res, label] : {std::pair{&off, "off"}, std::pair{&on, "on"}}) {
      CsvTable contour({"Nc", "kappa_c_per_us"});
      for (const auto& pt : res->contour) contour.add_row({pt.occupancy, pt.kappa * us});
      sink.csv(fmt::format("contour_{}_{}.csv", q, label), contour);
    }
    const double nc_off = off.readout ? off.readout->occupancy : std::nan("");
    s.emplace_back(fmt::format("Nc_off_{}", q), nc_off);
    if (off.readout) {
      s.emplace_back(fmt::format("Nc_off_low_{}", q), off.readout->occupancy_low);
      s.emplace_back(fmt::format("Nc_off_high_{}", q), off.readout->occupancy_high);
    }
    s.emplace_back(fmt::format("Nc_on_{}", q), nc_on);
    s.emplace_back(fmt::format("reduction_ratio_{}", q), nc_off / nc_on);
    s.emplace_back(fmt::format("monotone_{}", q), analysis::monotone_in_occupancy(off) ? 1.0 : 0.0);
  }
  const dynamics::Bath baths[] = {{model.intrinsic_kappa, 1.0}, {model.dcoupler_kappa_on, 0.0}};
  s.emplace_back("merge_reduction_factor", 1.0 / dynamics::merge_baths(baths).occupancy);
  return s;
}

Scalars exp_reset(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const auto model = cfg.system.model();
  const auto& rc = cfg.protocol.reset;
  auto p = protocols::ReadoutResetParams::reference();
  p.coupling = kPi / rc.swap_period;
  p.resonator_kappa = 1.0 / rc.resonator_lifetime;
  p.resonator_occupancy = 0.0;
  const auto r = protocols::readout_reset_protocol(model.qubits[0], p, rc.duration, run_options(cfg));
  sink.csv("reset.csv", trace_table(r));
  Scalars s{{"final_Pe", r.excited_population[0].back()},
            {"equilibrium_Pe_cold", protocols::readout_equilibrium_excitation(model.qubits[0], p)}};
  if (rc.target_excitation > 0.0) {
    const double n = protocols::solve_resonator_occupancy(model.qubits[0], p, rc.target_excitation);
    s.emplace_back("resonator_occupancy_for_target", n);
  }
  return s;
}

// --- figure bundles ----------------------------------------------------------

Scalars fig_s8(const ExperimentConfig& cfg, ArtifactSink& sink) {
  Scalars s;
  CsvTable summary({"t_hot_K", "initial_Pe", "final_Pe", "tau_ns"});
  for (const auto& row : cfg.system.rows) {
    const auto c = cooling_at(cfg, row.t_hot, sink, fmt::format("cooling_{}K.csv", format_number(row.t_hot)));
    summary.add_row({row.t_hot, c[0].second, c[1].second, c[2].second});
    s.emplace_back(fmt::format("tau_ns_{}K", format_number(row.t_hot)), c[2].second);
    s.emplace_back(fmt::format("final_Pe_{}K", format_number(row.t_hot)), c[1].second);
  }
  sink.csv("cooling_vs_temperature.csv", summary);
  return s;
}

Scalars fig_s11(const ExperimentConfig& cfg, ArtifactSink& sink) {
  Scalars s;
  CsvTable summary({"t_hot_K", "F_chi", "F_rho"});
  // Timing is a property of the closed system; search once.
  const auto timing = protocols::bell_timing_search(cfg.system.model(), cfg.protocol.bell_grid,
                                                    cfg.protocol.bell_max_stage1, cfg.protocol.bell_max_stage2);
  for (const auto& row : cfg.system.rows) {
    const std::string tag = fmt::format("_{}K", format_number(row.t_hot));
    const auto tr = transfer_at(cfg, row.t_hot, sink, tag);
    const auto be = bell_at(cfg, row.t_hot, sink, tag, timing);
    summary.add_row({row.t_hot, tr.f_chi, be.fidelity});
    s.emplace_back("F_chi" + tag, tr.f_chi);
    s.emplace_back("F_rho" + tag, be.fidelity);
  }
  sink.csv("fidelity_vs_temperature.csv", summary);
  return s;
}

using Runner = std::function<Scalars(const ExperimentConfig&, ArtifactSink&)>;

const std::map<std::string, Runner>& experiment_table() {
  static const std::map<std::string, Runner> t{
      {"modes", exp_modes},     {"kappa-sweep", exp_kappa_sweep}, {"chevron", exp_chevron},
      {"cooling", exp_cooling}, {"retherm", exp_retherm},         {"transfer", exp_transfer},
      {"bell", exp_bell},       {"steady-scan", exp_steady_scan}, {"reset", exp_reset},
  };
  return t;
}

const std::map<std::string, Runner>& figure_table() {
  static const std::map<std::string, Runner> t{
      {"fig2b", exp_kappa_sweep}, {"fig3c", exp_cooling}, {"fig3d", exp_retherm},
      {"fig4b", exp_transfer},    {"fig4f", exp_bell},    {"figS3bd", exp_kappa_sweep},
      {"figS8", fig_s8},          {"figS10", exp_steady_scan}, {"figS11", fig_s11},
  };
  return t;
}

std::vector<std::string> keys(const std::map<std::string, Runner>& m) {
  std::vector<std::string> k;
  for (const auto& [name, _] : m) k.push_back(name);
  return k;
}

Outcome run(const std::map<std::string, Runner>& table, const std::string& kind, const std::string& name,
            const ExperimentConfig& cfg, const std::filesystem::path& out) {
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError(fmt::format("unknown {} '{}'", kind, name));
  spdlog::info("running {} '{}' at T_hot = {} K", kind, name, cfg.system.t_hot);
  ArtifactSink sink(out, name);
  Outcome o{name, it->second(cfg, sink), {}};
  Json summary{{"name", name},
               {"config_hash", hash_hex(cfg.hash())},
               {"seed", cfg.seed},
               {"t_hot_k", cfg.system.t_hot},
               {"scalars", scalars_json(o.scalars)},
               {"artifacts", sink.written()}};
  sink.json("summary.json", summary);
  o.artifacts = sink.written();
  for (const auto& [k, v] : o.scalars) spdlog::info("  {} = {}", k, format_number(v));
  return o;
}

}  // namespace

ArtifactSink::ArtifactSink(std::filesystem::path root, std::string prefix)
    : root_(std::move(root)), prefix_(std::move(prefix)) {}

void ArtifactSink::csv(const std::string& name, const CsvTable& table) {
  const std::string rel = prefix_ + "/" + name;
  table.write(root_ / rel);
  written_.push_back(rel);
}

void ArtifactSink::json(const std::string& name, const Json& j) {
  const std::string rel = prefix_ + "/" + name;
  write_json(root_ / rel, j);
  written_.push_back(rel);
}

const std::vector<std::string>& experiment_names() {
  static const auto k = keys(experiment_table());
  return k;
}

const std::vector<std::string>& figure_ids() {
  static const auto k = keys(figure_table());
  return k;
}

Outcome run_experiment(const std::string& name, const ExperimentConfig& cfg, const std::filesystem::path& out) {
  return run(experiment_table(), "experiment", name, cfg, out);
}

Outcome reproduce_figure(const std::string& figure_id, const ExperimentConfig& cfg, const std::filesystem::path& out) {
  return run(figure_table(), "figure", figure_id, cfg, out);
}

}  // namespace thermnet::cli
