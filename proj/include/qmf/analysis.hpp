#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "qmf/loop.hpp"
#include "qmf/models.hpp"
#include "qmf/spin.hpp"

namespace qmf {

enum class LyapunovMethod { jacobian, stddev };

struct LyapunovEstimate {
  double lambda_max = 0.0;  // per step for the kicked top
  LyapunovMethod method = LyapunovMethod::jacobian;
  double intercept = 0.0;   // stddev fit: ln sigma(0)
  std::vector<double> residuals;
  std::size_t n_points = 0;
};

struct SpectralSummary {
  std::vector<double> frequencies;  // cycles per sample
  std::vector<double> p;            // normalized spectral weights, sum 1
  double entropy = 0.0;
  double dominant_frequency = 0.0;
};

// One-sided power |F_k|^2 for k = 0..n/2.
std::vector<double> power_spectrum(const std::vector<double>& series);

// S = -sum p ln p / ln n_bins with p the normalized DFT magnitude |F_k|.
// The DC bin is left out unless include_dc; a constant series (no power
// outside DC) reports S = 0 with all weight on DC.
SpectralSummary spectral_entropy(const std::vector<double>& series, bool include_dc = false);

// Largest exponent from tangent vectors pushed through kt_jacobian and
// renormalized every step. Throws std::runtime_error if the orbit leaves
// the unit sphere.
LyapunovEstimate lyapunov_jacobian(const KtParams& p, const SpinVector& x0, std::size_t n_steps);

// Log-linear fit of the ensemble spread of theta over the first n_fit steps;
// series[member][step].
LyapunovEstimate lyapunov_stddev(const std::vector<std::vector<double>>& theta_series, std::size_t n_fit);

// Ensemble of kicked-top orbits started from Gaussian tilts (sigma tilt) of
// center; returns theta[member][step] for steps 0..n_steps. Member i draws
// from RandomStream::derive(seed, i).
std::vector<std::vector<double>> kt_theta_ensemble(const KtParams& p, const SpinVector& center,
                                                   std::size_t members, double tilt, std::size_t n_steps,
                                                   std::uint64_t seed);

struct OrderParameters {
  double z_inf = 0.0;
  double czz_inf = 0.0;
  double z_stderr = 0.0;    // across records; 0 for a single record
  double czz_stderr = 0.0;
};

// Time averages of Z and Z^2 over samples with t in [t_begin, t_end), then
// averaged over the ensemble.
OrderParameters order_parameters(const std::vector<TrajectoryRecord>& records, double t_begin, double t_end);

struct SettleCriteria {
  double final_fraction = 0.1;  // trailing part of the record used for Z_final
  double threshold = 1e-3;      // settled if var(Z_final window) < threshold * swing^2
};

struct TddResult {
  std::optional<double> t_dd;  // signed: negative for a lower-well outcome
  bool settled = false;
  double z_initial = 0.0;
  double z_final = 0.0;
  double final_variance = 0.0;
};

// First (interpolated) crossing of (Z_initial + Z_final)/2.
TddResult extract_tdd(const TrajectoryRecord& rec, const SettleCriteria& crit = {});
TddResult extract_tdd(const std::vector<double>& t, const std::vector<double>& z, const SettleCriteria& crit = {});

// Last time |Z - Z_final| exceeds band * |Z_final|; nullopt if unsettled.
std::optional<double> settling_time(const TrajectoryRecord& rec, double band = 0.05, const SettleCriteria& crit = {});

struct SymmetryStats {
  double upper_fraction = 0.0;
  double initial_final_correlation = 0.0;  // NaN if either side has no spread
  std::vector<std::pair<double, std::optional<double>>> tdd_list;  // (first measurement, t_DD)
  std::size_t n_settled = 0;
};

SymmetryStats symmetry_stats(const std::vector<TrajectoryRecord>& records, const SettleCriteria& crit = {});

double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct FtcRigidity {
  std::vector<double> alphas;
  std::vector<std::vector<double>> psd;  // ensemble-mean power per alpha, bins 0..n/2
  std::vector<bool> period2_dominant;
  std::vector<double> period2_fraction;  // period-2 power over non-DC power
  std::optional<std::pair<double, double>> window;  // contiguous dominant range containing the alpha nearest pi
  double rigidity_window = 0.0;  // width of that range
  double fwhm = 0.0;             // width where period2_fraction >= half its peak
};

// Each series is mean-subtracted before its spectrum is taken; the DC bin
// is ignored in the dominance test unless include_dc.
FtcRigidity ftc_rigidity(const std::map<double, std::vector<std::vector<double>>>& series_by_alpha,
                         bool include_dc = false);

}  // namespace qmf
