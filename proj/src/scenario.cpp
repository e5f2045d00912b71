#include "qmf/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace qmf {

namespace fs = std::filesystem;
using nlohmann::json;

DptResult dpt_sweep(const LoopConfig& cfg, double alpha_lin, const MeasurementModel& model,
                    const std::vector<double>& s_grid, std::size_t shots, std::uint64_t seed, double t_begin,
                    double t_end, double threshold, int refine_steps) {
  DptResult out;
  auto eval = [&](double s) {
    const auto recs = run_batch(cfg, LmgParams::from_alpha(s, alpha_lin), model, shots, seed);
    DptPoint p{s, order_parameters(recs, t_begin, t_end)};
    out.points.push_back(p);
    return p.op.z_inf;
  };
  std::vector<double> z;
  for (double s : s_grid) z.push_back(eval(s));
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    if (z[i] < threshold) continue;
    if (i == 0) {
      out.crossing = s_grid[0];
      break;
    }
    double lo = s_grid[i - 1], hi = s_grid[i], zlo = z[i - 1], zhi = z[i];
    for (int r = 0; r < refine_steps; ++r) {
      const double mid = 0.5 * (lo + hi);
      const double zm = eval(mid);
      if (zm >= threshold) {
        hi = mid;
        zhi = zm;
      } else {
        lo = mid;
        zlo = zm;
      }
    }
    out.crossing = lo + (threshold - zlo) / (zhi - zlo) * (hi - lo);
    break;
  }
  return out;
}

std::map<double, std::vector<std::vector<double>>> ftc_series(const LoopConfig& cfg, const QktSchedule& sched,
                                                              double k, const std::vector<double>& alphas,
                                                              const MeasurementModel& model, std::size_t shots,
                                                              std::uint64_t seed) {
  std::map<double, std::vector<std::vector<double>>> out;
  for (double a : alphas) {
    const auto recs = run_batch(cfg, sched, KtParams{a, k, sched.period()}, model, shots, seed);
    auto& dst = out[a];
    for (const auto& r : recs) {
      std::vector<double> zs;
      for (const auto& s : r.strobe_states) zs.push_back(s.z);
      dst.push_back(std::move(zs));
    }
  }
  return out;
}

NoiseBudgetMc noise_budget_mc(double c_sn, double c_qpn, double c_cpn, const std::vector<double>& n1_grid,
                              std::size_t shots, std::uint64_t seed) {
  if (shots < 2) throw std::invalid_argument("noise_budget_mc needs at least two shots");
  NoiseBudgetMc out;
  for (std::size_t g = 0; g < n1_grid.size(); ++g) {
    const double n1 = n1_grid[g];
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < shots; ++i) {
      RandomStream rng = RandomStream::derive(seed + g, i);
      const double v = std::sqrt(c_sn) * rng.normal() + std::sqrt(c_qpn * n1) * rng.normal() +
                       std::sqrt(c_cpn) * n1 * rng.normal();
      sum += v;
      sum2 += v * v;
    }
    const double n = static_cast<double>(shots);
    const double mean = sum / n;
    const double var = (sum2 - n * mean * mean) / (n - 1.0);
    out.points.push_back({n1, var, var * std::sqrt(2.0 / (n - 1.0))});
  }
  out.fit = noise_budget_fit(out.points);
  return out;
}

AveragingMc averaging_mc(const MeasurementModel& model, double sample_period, std::size_t samples,
                         const std::vector<double>& windows, bool with_qpn, std::size_t shots, std::uint64_t seed) {
  std::vector<std::vector<double>> series(shots);
  parallel_for(shots, [&](std::size_t i) {
    RandomStream rng = RandomStream::derive(seed, i);
    const double offset = with_qpn ? draw_qpn_offset(model, rng) : 0.0;
    series[i].reserve(samples);
    for (std::size_t n = 0; n < samples; ++n)
      series[i].push_back(measure(0.0, model.spin_length(), model, sample_period, offset, true, rng).value);
  });
  AveragingMc out;
  out.points = averaging_scan(series, sample_period, windows);
  out.fit = fit_averaging(out.points, with_qpn);
  return out;
}

std::vector<QuantumTrajectory> qmf_ensemble(double j, double sigma, double dt, std::size_t n_steps,
                                            const LmgParams& p, SphericalAngles start, std::size_t n_traj,
                                            std::uint64_t seed) {
  const QmfStepper stepper(j);
  std::vector<QuantumTrajectory> out(n_traj);
  parallel_for(n_traj, [&](std::size_t i) {
    RandomStream rng = RandomStream::derive(seed, i);
    out[i] = run_qmf_trajectory(stepper, start, p, dt, sigma, n_steps, rng);
  });
  return out;
}

std::pair<LoopConfig, MeasurementModel> matched_classical(double j, double sigma, double dt, double duration,
                                                          SphericalAngles start) {
  MeasurementModel m;
  // J = n1 f = j and pointing spread sqrt(n2 f / 2) / (n1 f) = 1/sqrt(2j).
  m.f = 0.5;
  m.n1_eff = 2.0 * j;
  m.ratio_n2_n1 = 1.0;
  m.chi_p = 1.0;
  // Shot-noise standard deviation sigma in spin units at averaging time dt.
  m.sn_coeff = sigma * sigma * dt;
  LoopConfig c;
  c.sample_period = dt;
  c.plant_dt = dt / 20.0;
  c.latency = 0.0;
  c.duration = duration;
  c.decay_half_time = 1e9;
  c.initial_state = start;
  c.noise = {true, false, true, false};
  c.arithmetic = Arithmetic::double_precision;
  c.max_z_rate = 1e300;
  return {c, m};
}

TrajectoryRecord to_record(const QuantumTrajectory& q, const LmgParams& p, std::uint64_t shot) {
  TrajectoryRecord r;
  r.meta.shot = shot;
  r.meta.model = "quantum-lmg";
  r.meta.params = {{"s", p.s}, {"lambda", p.lambda}, {"j", q.j}};
  for (std::size_t i = 0; i < q.t.size(); ++i) {
    r.t.push_back(q.t[i]);
    r.x.push_back(q.jx[i]);
    r.y.push_back(q.jy[i]);
    r.z.push_back(q.jz[i]);
    r.j_true.push_back(q.j * std::sqrt(q.jx[i] * q.jx[i] + q.jy[i] * q.jy[i] + q.jz[i] * q.jz[i]));
    r.meas.push_back(q.outcome[i]);
    r.ctl_z.push_back(std::isnan(q.outcome[i]) ? 0.0 : p.k_nl() * q.outcome[i] / q.j);
    r.ctl_x.push_back(p.alpha_lin());
    r.j_est.push_back(q.j);
  }
  return r;
}

namespace {

struct Writer {
  fs::path root;
  std::vector<ManifestEntry> outputs;

  fs::path path(const std::string& rel) const { return root / rel; }
  void done(const std::string& rel) { outputs.push_back({rel, sha256_file(root / rel)}); }
  void json_file(const std::string& rel, const json& j) {
    write_json(path(rel), j);
    done(rel);
  }
  void csv_file(const std::string& rel, const CsvTable& t) {
    write_csv(path(rel), t);
    done(rel);
  }
  void trajectories(const std::string& dir, const std::vector<TrajectoryRecord>& recs, const ExperimentConfig& cfg) {
    const std::string base = dir.empty() ? "" : dir + "/";
    if (cfg.emit == "json") {
      write_trajectories_json(path(base + "trajectories.json"), recs);
      done(base + "trajectories.json");
    } else {
      write_trajectories_csv(path(base + "trajectories.csv"), recs);
      done(base + "trajectories.csv");
    }
    json side = sidecar_json(recs, cfg.hash());
    for (const auto& [k, v] : cfg.sweep_point) side["sweep_point"][k] = v;
    json_file(base + "trajectories.meta.json", side);
  }
};

std::string sub_dir(std::size_t i, std::size_t n) {
  if (n <= 1) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "sub_%03zu", i);
  return buf;
}

void require_axes(const ExperimentConfig& cfg, const std::set<std::string>& allowed) {
  for (const auto& a : cfg.sweeps)
    if (!allowed.count(a.key))
      throw ConfigError(to_string(cfg.scenario) + " cannot sweep " + a.key, "sweep." + a.key);
}

double max_energy_drift(const TrajectoryRecord& r, const LmgParams& p) {
  const double e0 = lmg_energy({r.x[0], r.y[0], r.z[0]}, p);
  double d = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) d = std::max(d, std::abs(lmg_energy({r.x[i], r.y[i], r.z[i]}, p) - e0));
  return d;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void run_lmg_like(const ExperimentConfig& cfg, Writer& w, bool symmetry) {
  const auto subs = cfg.expand();
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& c = subs[i];
    const std::string dir = sub_dir(i, subs.size());
    const LmgParams p = c.lmg();
    auto recs = run_batch(c.loop, p, c.measurement, c.shots, c.seed + i);
    for (auto& r : recs) r.meta.config_hash = cfg.hash();
    w.trajectories(dir, recs, c);
    const std::string base = dir.empty() ? "" : dir + "/";
    if (symmetry) {
      const SymmetryStats st = symmetry_stats(recs, c.analysis.settle);
      json j;
      j["s"] = p.s;
      j["shots"] = recs.size();
      j["upper_fraction"] = st.upper_fraction;
      j["initial_final_correlation"] = std::isnan(st.initial_final_correlation) ? json(nullptr) : json(st.initial_final_correlation);
      j["n_settled"] = st.n_settled;
      std::vector<double> abs_tdd;
      for (const auto& [m0, t] : st.tdd_list) {
        j["tdd_list"].push_back({{"first_measurement", m0}, {"t_dd", optional_json(t)}});
        if (t) abs_tdd.push_back(std::abs(*t));
      }
      if (!abs_tdd.empty()) {
        std::sort(abs_tdd.begin(), abs_tdd.end());
        j["median_abs_tdd"] = abs_tdd[abs_tdd.size() / 2];
      }
      const auto fps = lmg_fixed_points(p.s);
      if (fps.size() == 4) j["fixed_point_z"] = fps[2].location.z;
      w.json_file(base + "symmetry_stats.json", j);
    } else {
      json j;
      for (const auto& r : recs) {
        const TddResult t = extract_tdd(r, c.analysis.settle);
        j["shots"].push_back({{"shot", r.meta.shot},
                              {"final_z", r.z.back()},
                              {"max_energy_drift", max_energy_drift(r, p)},
                              {"settled", t.settled},
                              {"t_dd", optional_json(t.t_dd)}});
      }
      j["latency_metric"] = latency_metric(p.alpha_lin(), c.loop.latency);
      w.json_file(base + "summary.json", j);
    }
  }
}

void run_kt(const ExperimentConfig& cfg, Writer& w) {
  const auto subs = cfg.expand();
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& c = subs[i];
    const std::string dir = sub_dir(i, subs.size());
    const std::string base = dir.empty() ? "" : dir + "/";
    const QktSchedule sched = qkt_schedule(c.schedule.t_linear, c.schedule.t_gap, c.schedule.t_kick,
                                           c.schedule.n_steps, c.loop.sample_period, c.loop.duration - c.loop.latency);
    KtParams kp = c.kt;
    kp.tau = sched.period();
    auto recs = run_batch(c.loop, sched, kp, c.measurement, c.shots, c.seed + i);
    w.trajectories(dir, recs, c);
    write_stroboscopic_csv(w.path(base + "stroboscopic.csv"), recs);
    w.done(base + "stroboscopic.csv");
    json j;
    for (const auto& r : recs) {
      double dev = 0.0;
      std::vector<double> zs;
      for (std::size_t n = 0; n < r.strobe_states.size(); ++n) {
        zs.push_back(r.strobe_states[n].z);
        if (n + 1 < r.strobe_states.size())
          dev = std::max(dev, (r.strobe_states[n + 1].vec() - kt_step(r.strobe_states[n], kp).vec()).norm());
      }
      json s{{"shot", r.meta.shot}, {"max_map_deviation", dev}};
      if (zs.size() >= 8 && std::any_of(zs.begin(), zs.end(), [](double v) { return v != 0.0; }))
        s["spectral_entropy"] = spectral_entropy(zs, c.analysis.include_dc).entropy;
      j["shots"].push_back(s);
    }
    w.json_file(base + "summary.json", j);
  }
}

void run_dpt(const ExperimentConfig& cfg, Writer& w) {
  require_axes(cfg, {"lmg.s"});
  std::vector<double> grid;
  for (const auto& a : cfg.sweeps) grid = a.values;
  for (const auto& c : cfg.expand()) (void)c;  // validates every grid point
  const DptResult r = dpt_sweep(cfg.loop, cfg.lmg_alpha_lin, cfg.measurement, grid, cfg.shots, cfg.seed,
                                cfg.analysis.window_begin, cfg.analysis.window_end, cfg.analysis.dpt_threshold,
                                cfg.analysis.dpt_refine);
  CsvTable t{{"s", "z_inf", "czz_inf", "stderr"}, {}};
  auto pts = r.points;
  std::sort(pts.begin(), pts.end(), [](const DptPoint& a, const DptPoint& b) { return a.s < b.s; });
  for (const auto& p : pts) t.rows.push_back({p.s, p.op.z_inf, p.op.czz_inf, p.op.z_stderr});
  w.csv_file("order_parameters.csv", t);
  json j;
  j["threshold"] = cfg.analysis.dpt_threshold;
  j["window"] = {cfg.analysis.window_begin, cfg.analysis.window_end};
  j["crossing_s"] = optional_json(r.crossing);
  j["critical_s_pole"] = lmg_critical_s_for_pole();
  w.json_file("dpt_summary.json", j);
}

void run_lyapunov(const ExperimentConfig& cfg, Writer& w) {
  require_axes(cfg, {"kt.k", "kt.alpha"});
  CsvTable t{{"k", "alpha", "lambda_jacobian", "lambda_jacobian_centre", "lambda_stddev", "stddev_intercept",
              "spectral_entropy"},
             {}};
  for (const auto& c : cfg.expand()) {
    const KtParams& p = c.kt;
    const double lj = lyapunov_jacobian(p, c.analysis.lyap_x0, c.analysis.lyap_steps).lambda_max;
    const double lc = lyapunov_jacobian(p, c.analysis.ensemble_centre, c.analysis.lyap_steps).lambda_max;
    const auto ens = kt_theta_ensemble(p, c.analysis.ensemble_centre, c.analysis.ensemble, c.analysis.ensemble_tilt,
                                       c.analysis.fit_steps, c.seed);
    const LyapunovEstimate ls = lyapunov_stddev(ens, c.analysis.fit_steps);
    std::vector<double> zs;
    SpinVector x = c.analysis.lyap_x0;
    for (int n = 0; n < 1024; ++n) {
      zs.push_back(x.z);
      x = kt_step(x, p);
    }
    t.rows.push_back({p.k, p.alpha, lj, lc, ls.lambda_max, ls.intercept, spectral_entropy(zs, c.analysis.include_dc).entropy});
  }
  w.csv_file("lyapunov.csv", t);
}

void run_ftc(const ExperimentConfig& cfg, Writer& w) {
  require_axes(cfg, {"kt.alpha"});
  std::vector<double> alphas;
  for (const auto& a : cfg.sweeps) alphas = a.values;
  for (const auto& c : cfg.expand()) (void)c;
  const QktSchedule sched = qkt_schedule(cfg.schedule.t_linear, cfg.schedule.t_gap, cfg.schedule.t_kick,
                                         cfg.schedule.n_steps, cfg.loop.sample_period, cfg.loop.duration - cfg.loop.latency);
  const auto series = ftc_series(cfg.loop, sched, cfg.kt.k, alphas, cfg.measurement, cfg.shots, cfg.seed);
  CsvTable raw{{"alpha", "shot", "step", "z"}, {}};
  for (const auto& [a, ens] : series)
    for (std::size_t s = 0; s < ens.size(); ++s)
      for (std::size_t n = 0; n < ens[s].size(); ++n)
        raw.rows.push_back({a, static_cast<double>(s), static_cast<double>(n), ens[s][n]});
  w.csv_file("ftc_series.csv", raw);
  const FtcRigidity rig = ftc_rigidity(series, cfg.analysis.include_dc);
  CsvTable psd{{"alpha", "bin", "frequency", "power"}, {}};
  for (std::size_t i = 0; i < rig.alphas.size(); ++i) {
    const double n = static_cast<double>(2 * (rig.psd[i].size() - 1));
    for (std::size_t b = 0; b < rig.psd[i].size(); ++b)
      psd.rows.push_back({rig.alphas[i], static_cast<double>(b), static_cast<double>(b) / n, rig.psd[i][b]});
  }
  w.csv_file("ftc_psd.csv", psd);
  json j;
  j["k"] = cfg.kt.k;
  for (std::size_t i = 0; i < rig.alphas.size(); ++i)
    j["alphas"].push_back({{"alpha", rig.alphas[i]},
                           {"alpha_over_pi", rig.alphas[i] / kPi},
                           {"period2_dominant", static_cast<bool>(rig.period2_dominant[i])},
                           {"period2_fraction", rig.period2_fraction[i]}});
  if (rig.window) j["window"] = {rig.window->first, rig.window->second};
  j["rigidity_window"] = rig.rigidity_window;
  j["fwhm"] = rig.fwhm;
  w.json_file("ftc_rigidity.json", j);
}

void run_noise_budget(const ExperimentConfig& cfg, Writer& w) {
  require_axes(cfg, {});
  const auto& nb = cfg.noise_budget;
  const NoiseBudgetMc mc = noise_budget_mc(nb.c_sn, nb.c_qpn, nb.c_cpn, nb.n1_grid, std::max<std::size_t>(cfg.shots, 2), cfg.seed);
  CsvTable t{{"n1", "variance", "sigma"}, {}};
  for (const auto& p : mc.points) t.rows.push_back({p.n1, p.variance, p.sigma});
  w.csv_file("noise_budget.csv", t);
  auto term = [](const FitTerm& f, double injected) { return json{{"value", f.value}, {"stderr", f.error}, {"injected", injected}}; };
  w.json_file("noise_budget_fit.json", {{"c_sn", term(mc.fit.c_sn, nb.c_sn)},
                                        {"c_qpn", term(mc.fit.c_qpn, nb.c_qpn)},
                                        {"c_cpn", term(mc.fit.c_cpn, nb.c_cpn)},
                                        {"chi2_per_dof", mc.fit.chi2_per_dof}});
  const double max_window = *std::max_element(nb.windows.begin(), nb.windows.end());
  const auto samples = std::max<std::size_t>(nb.series_samples,
                                              static_cast<std::size_t>(std::ceil(max_window / cfg.loop.sample_period)));
  const AveragingMc av = averaging_mc(cfg.measurement, cfg.loop.sample_period, samples, nb.windows, cfg.loop.noise.qpn,
                                      std::max<std::size_t>(cfg.shots, 2), cfg.seed + 1);
  CsvTable a{{"T", "variance", "stderr"}, {}};
  for (const auto& p : av.points) a.rows.push_back({p.T, p.variance, p.error});
  w.csv_file("averaging.csv", a);
  w.json_file("averaging_fit.json", {{"c_sn", av.fit.c_sn.value},
                                     {"c_sn_stderr", av.fit.c_sn.error},
                                     {"c_qpn", av.fit.c_qpn.value},
                                     {"c_qpn_stderr", av.fit.c_qpn.error},
                                     {"exponent", av.fit.exponent},
                                     {"exponent_stderr", av.fit.exponent_stderr},
                                     {"floor_subtracted", cfg.loop.noise.qpn}});
}

void run_composite(const ExperimentConfig& cfg, Writer& w) {
  require_axes(cfg, {});
  const auto& grid = cfg.composite.theta_grid;
  const auto noisy = composite_pulse_scan(grid, cfg.loop.rotation_noise, cfg.shots, cfg.seed, cfg.composite.initial_tilt);
  const auto base = composite_pulse_scan(grid, RotationNoise{}, cfg.shots, cfg.seed, cfg.composite.initial_tilt);
  CsvTable t{{"theta", "variance", "stderr", "baseline_variance", "baseline_stderr"}, {}};
  for (std::size_t i = 0; i < grid.size(); ++i)
    t.rows.push_back({grid[i], noisy[i].variance, noisy[i].error, base[i].variance, base[i].error});
  w.csv_file("composite_scan.csv", t);
}

void run_quantum(const ExperimentConfig& cfg, Writer& w) {
  const auto subs = cfg.expand();
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& c = subs[i];
    const std::string dir = sub_dir(i, subs.size());
    const LmgParams p = c.lmg();
    const auto traj = qmf_ensemble(c.quantum.j, c.quantum.sigma, c.quantum.dt, c.quantum.n_steps, p,
                                   c.loop.initial_state, c.shots, c.seed + i);
    std::vector<TrajectoryRecord> recs;
    for (std::size_t s = 0; s < traj.size(); ++s) {
      recs.push_back(to_record(traj[s], p, s));
      recs.back().meta.master_seed = c.seed + i;
    }
    w.trajectories(dir, recs, c);
  }
}

}  // namespace

RunManifest run_scenario(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  Writer w{fs::path(cfg.out_dir), {}};
  std::error_code ec;
  fs::create_directories(w.root, ec);
  if (ec) throw IoError("cannot create output directory " + w.root.string() + ": " + ec.message());
  {
    std::ofstream out(w.path("config.effective.ini"));
    if (!out) throw IoError("cannot write " + w.path("config.effective.ini").string());
    for (const auto& [k, v] : cfg.canonical) out << k << " = " << v << '\n';
  }
  w.done("config.effective.ini");
  switch (cfg.scenario) {
    case Scenario::lmg_run: run_lmg_like(cfg, w, false); break;
    case Scenario::ssb_ensemble: run_lmg_like(cfg, w, true); break;
    case Scenario::kt_run: run_kt(cfg, w); break;
    case Scenario::dpt_sweep: run_dpt(cfg, w); break;
    case Scenario::lyapunov: run_lyapunov(cfg, w); break;
    case Scenario::ftc_sweep: run_ftc(cfg, w); break;
    case Scenario::noise_budget: run_noise_budget(cfg, w); break;
    case Scenario::composite_scan: run_composite(cfg, w); break;
    case Scenario::quantum_qmf: run_quantum(cfg, w); break;
  }
  RunManifest m;
  m.config_hash = cfg.hash();
  m.seed = cfg.seed;
  m.outputs = w.outputs;
  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(w.path("manifest.json"), m.to_json());
  return m;
}

json analyze(const std::string& kind, const std::vector<fs::path>& inputs, const AnalysisSettings& settings) {
  if (inputs.empty()) throw std::invalid_argument("analyze: no input files");
  json out;
  out["kind"] = kind;
  if (kind == "ftc") {
    std::map<double, std::vector<std::vector<double>>> series;
    for (const auto& in : inputs) {
      const CsvTable t = read_csv(in);
      if (t.header != std::vector<std::string>{"alpha", "shot", "step", "z"})
        throw IoError(in.string() + ": expected an ftc_series.csv file");
      std::map<std::pair<double, double>, std::vector<double>> by;
      for (const auto& r : t.rows) by[{r[0], r[1]}].push_back(r[3]);
      for (auto& [key, zs] : by) series[key.first].push_back(std::move(zs));
    }
    const FtcRigidity rig = ftc_rigidity(series, settings.include_dc);
    for (std::size_t i = 0; i < rig.alphas.size(); ++i)
      out["alphas"].push_back({{"alpha", rig.alphas[i]}, {"period2_dominant", static_cast<bool>(rig.period2_dominant[i])}});
    out["rigidity_window"] = rig.rigidity_window;
    out["fwhm"] = rig.fwhm;
    return out;
  }
  std::vector<TrajectoryRecord> recs;
  for (const auto& in : inputs) {
    auto r = read_trajectories_csv(in);
    recs.insert(recs.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  if (kind == "symmetry") {
    const SymmetryStats st = symmetry_stats(recs, settings.settle);
    out["upper_fraction"] = st.upper_fraction;
    out["initial_final_correlation"] =
        std::isnan(st.initial_final_correlation) ? json(nullptr) : json(st.initial_final_correlation);
    out["n_settled"] = st.n_settled;
    for (const auto& [m0, t] : st.tdd_list) out["tdd_list"].push_back({{"first_measurement", m0}, {"t_dd", optional_json(t)}});
  } else if (kind == "tdd") {
    for (const auto& r : recs) {
      const TddResult t = extract_tdd(r, settings.settle);
      out["shots"].push_back({{"shot", r.meta.shot}, {"settled", t.settled}, {"t_dd", optional_json(t.t_dd)},
                              {"z_initial", t.z_initial}, {"z_final", t.z_final}});
    }
  } else if (kind == "order-parameters") {
    const OrderParameters op = order_parameters(recs, settings.window_begin, settings.window_end);
    out["z_inf"] = op.z_inf;
    out["czz_inf"] = op.czz_inf;
    out["stderr"] = op.z_stderr;
  } else if (kind == "spectral-entropy") {
    for (const auto& r : recs) {
      const SpectralSummary s = spectral_entropy(r.z, settings.include_dc);
      out["shots"].push_back({{"shot", r.meta.shot}, {"entropy", s.entropy}, {"dominant_frequency", s.dominant_frequency}});
    }
  } else {
    throw std::invalid_argument("unknown analysis kind '" + kind + "'");
  }
  return out;
}

}  // namespace qmf
