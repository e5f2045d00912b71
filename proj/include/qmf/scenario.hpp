#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qmf/analysis.hpp"
#include "qmf/config.hpp"
#include "qmf/io.hpp"
#include "qmf/loop.hpp"
#include "qmf/measurement.hpp"
#include "qmf/quantum.hpp"

namespace qmf {

// Experiment recipes shared by the CLI and the acceptance checks.

struct DptPoint {
  double s = 0.0;
  OrderParameters op;
};

struct DptResult {
  std::vector<DptPoint> points;         // grid first, then refinement points
  std::optional<double> crossing;       // first s where z_inf reaches threshold
};

// Runs the LMG loop from cfg.initial_state at each s (fixed alpha_lin) and
// locates the first upward crossing of z_inf through threshold, refined by
// bisection inside the bracketing grid interval.
DptResult dpt_sweep(const LoopConfig& cfg, double alpha_lin, const MeasurementModel& model,
                    const std::vector<double>& s_grid, std::size_t shots, std::uint64_t seed, double t_begin,
                    double t_end, double threshold, int refine_steps);

// Stroboscopic Z series (initial state plus one point per step) for every
// alpha; one entry per shot.
std::map<double, std::vector<std::vector<double>>> ftc_series(const LoopConfig& cfg, const QktSchedule& sched,
                                                              double k, const std::vector<double>& alphas,
                                                              const MeasurementModel& model, std::size_t shots,
                                                              std::uint64_t seed);

struct NoiseBudgetMc {
  std::vector<BudgetPoint> points;
  NoiseBudgetFit fit;
};

// Synthetic per-shot signals sqrt(c_sn) g1 + sqrt(c_qpn n1) g2 + sqrt(c_cpn) n1 g3,
// where the last term is a classical pointing error acting on a signal
// proportional to n1.
NoiseBudgetMc noise_budget_mc(double c_sn, double c_qpn, double c_cpn, const std::vector<double>& n1_grid,
                              std::size_t shots, std::uint64_t seed);

struct AveragingMc {
  std::vector<AveragingPoint> points;
  AveragingFit fit;
};

// Measurement records of a z = 0 spin (per-sample shot noise, optionally a
// frozen QPN offset) scanned over averaging windows.
AveragingMc averaging_mc(const MeasurementModel& model, double sample_period, std::size_t samples,
                         const std::vector<double>& windows, bool with_qpn, std::size_t shots, std::uint64_t seed);

// Quantum trajectories, trajectory i on RandomStream::derive(seed, i).
std::vector<QuantumTrajectory> qmf_ensemble(double j, double sigma, double dt, std::size_t n_steps,
                                            const LmgParams& p, SphericalAngles start, std::size_t n_traj,
                                            std::uint64_t seed);

// Classical loop settings matched to a quantum run: SCS pointing spread
// 1/sqrt(2j), shot noise sigma/j in units of Z, no QPN offset, no decay,
// zero latency, one controller sample per quantum step.
std::pair<LoopConfig, MeasurementModel> matched_classical(double j, double sigma, double dt, double duration,
                                                          SphericalAngles start);

TrajectoryRecord to_record(const QuantumTrajectory& q, const LmgParams& p, std::uint64_t shot);

// Runs the configured scenario and writes its outputs plus manifest.json
// into cfg.out_dir.
RunManifest run_scenario(const ExperimentConfig& cfg);

// Post-processing of files written earlier; returns a JSON summary.
// kinds: symmetry, order-parameters, tdd, spectral-entropy, ftc.
nlohmann::json analyze(const std::string& kind, const std::vector<std::filesystem::path>& inputs,
                       const AnalysisSettings& settings);

}  // namespace qmf
