#pragma once

#include <cstdint>
#include <vector>

#include "qmf/random.hpp"
#include "qmf/spin.hpp"

namespace qmf {

struct MeasurementModel {
  double n1_eff = 1e6;
  double ratio_n2_n1 = 0.5;
  double f = 4.0;
  double chi_p = 1e-6;     // signal units (V) per spin unit
  double sn_coeff = 2e-12; // signal^2 * s; equals the QPN variance at T = 2 us

  double n2_eff() const { return ratio_n2_n1 * n1_eff; }
  double spin_length() const { return n1_eff * f; }
  void validate() const;
};

struct MeasurementSample {
  double t = 0.0;
  double value = 0.0;
  double m_f = 0.0;
  double m_qpn = 0.0;
  double m_sn = 0.0;
};

double qpn_variance(const MeasurementModel& m);
double shot_noise_variance(const MeasurementModel& m, double T);
double pointing_uncertainty(const MeasurementModel& m);

// The QPN part of a measurement is frozen for a whole trajectory; draw it
// once per shot and pass it to every measure() call of that shot.
double draw_qpn_offset(const MeasurementModel& m, RandomStream& rng);

MeasurementSample measure(double z_true, double j_current, const MeasurementModel& m, double T,
                          double qpn_offset, bool shot_noise, RandomStream& rng);

struct FitTerm {
  double value = 0.0;
  double error = 0.0;
};

struct BudgetPoint {
  double n1 = 0.0;
  double variance = 0.0;
  double sigma = 0.0;  // uncertainty of variance; 0 means relative weighting
};

struct NoiseBudgetFit {
  FitTerm c_sn, c_qpn, c_cpn;
  double chi2_per_dof = 0.0;
};

// Weighted least squares for variance = c_sn + c_qpn n1 + c_cpn n1^2.
// Points without a sigma are weighted by 1/variance, which keeps the
// small-n1 end from being swamped when the data span decades.
NoiseBudgetFit noise_budget_fit(const std::vector<BudgetPoint>& points);

struct AveragingPoint {
  double T = 0.0;
  double variance = 0.0;
  double error = 0.0;
};

// Variance across shots of the boxcar mean over the first T/sample_period
// samples of each series.
std::vector<AveragingPoint> averaging_scan(const std::vector<std::vector<double>>& shots,
                                           double sample_period, const std::vector<double>& windows);

struct AveragingFit {
  FitTerm c_sn, c_qpn;    // variance = c_sn / T + c_qpn
  double exponent = 0.0;  // slope of log variance vs log T (after removing c_qpn if requested)
  double exponent_stderr = 0.0;
};

// subtract_floor: fit the power law to variance - c_qpn instead of variance.
AveragingFit fit_averaging(const std::vector<AveragingPoint>& points, bool subtract_floor);

struct CompositePoint {
  double theta = 0.0;
  double variance = 0.0;
  double error = 0.0;
};

// R(x, theta) R(y, pi/2) applied to +z, Monte Carlo over noisy pulses.
// Shot i uses RandomStream::derive(seed, i) at every theta, so the scan
// uses common random numbers across the grid. initial_tilt adds the
// projection-noise pointing error of the prepared state.
std::vector<CompositePoint> composite_pulse_scan(const std::vector<double>& theta_grid,
                                                 const RotationNoise& noise, std::size_t n_shots,
                                                 std::uint64_t seed, double initial_tilt = 0.0);

}  // namespace qmf
