#include "qmf/measurement.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace qmf {

void MeasurementModel::validate() const {
  if (!(n1_eff > 0.0)) throw std::invalid_argument("measurement.n1_eff must be positive");
  if (!(ratio_n2_n1 > 0.0 && ratio_n2_n1 <= 1.0))
    throw std::invalid_argument("measurement.ratio_n2_n1 must lie in (0, 1]");
  if (!(f > 0.0)) throw std::invalid_argument("measurement.f must be positive");
  if (!(chi_p > 0.0)) throw std::invalid_argument("measurement.chi_p must be positive");
  if (!(sn_coeff >= 0.0)) throw std::invalid_argument("measurement.sn_coeff must be non-negative");
}

double qpn_variance(const MeasurementModel& m) {
  return m.chi_p * m.chi_p * m.n2_eff() * m.f / 2.0;
}

double shot_noise_variance(const MeasurementModel& m, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("shot_noise_variance: averaging time must be positive");
  return m.sn_coeff / T;
}

double pointing_uncertainty(const MeasurementModel& m) {
  return std::sqrt(m.n2_eff() * m.f / 2.0) / (m.n1_eff * m.f);
}

double draw_qpn_offset(const MeasurementModel& m, RandomStream& rng) {
  return std::sqrt(qpn_variance(m)) * rng.normal();
}

MeasurementSample measure(double z_true, double j_current, const MeasurementModel& m, double T,
                          double qpn_offset, bool shot_noise, RandomStream& rng) {
  if (!(std::abs(z_true) <= 1.0 + 1e-9)) throw std::invalid_argument("measure: |z_true| must be <= 1");
  if (!(T > 0.0)) throw std::invalid_argument("measure: averaging time must be positive");
  MeasurementSample s;
  s.m_f = m.chi_p * j_current * z_true;
  s.m_qpn = qpn_offset;
  s.m_sn = shot_noise ? std::sqrt(shot_noise_variance(m, T)) * rng.normal() : 0.0;
  s.value = s.m_f + s.m_qpn + s.m_sn;
  return s;
}

namespace {

struct LinearFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd stderr_;
  double chi2_per_dof = 0.0;
};

// Weighted linear least squares; standard errors are scaled by the reduced
// chi^2 when there are spare degrees of freedom.
LinearFit weighted_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& w) {
  const Eigen::MatrixXd Aw = w.asDiagonal() * A;
  const Eigen::VectorXd bw = w.asDiagonal() * b;
  // Column scaling keeps the normal matrix well conditioned when the
  // columns span many decades (1, n, n^2).
  Eigen::VectorXd scale(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    scale(j) = Aw.col(j).norm();
    if (scale(j) == 0.0) throw std::invalid_argument("least-squares design has an all-zero column");
  }
  const Eigen::MatrixXd As = Aw * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
  qr.setThreshold(1e-12);
  if (qr.rank() < A.cols()) throw std::invalid_argument("least-squares design is rank deficient");
  const Eigen::VectorXd ys = qr.solve(bw);
  LinearFit fit;
  fit.coef = ys.cwiseQuotient(scale);
  const Eigen::MatrixXd cov_s = (As.transpose() * As).inverse();
  const Eigen::Index dof = A.rows() - A.cols();
  const double chi2 = (As * ys - bw).squaredNorm();
  fit.chi2_per_dof = dof > 0 ? chi2 / static_cast<double>(dof) : 0.0;
  const double inflate = dof > 0 ? fit.chi2_per_dof : 1.0;
  fit.stderr_ = (cov_s.diagonal() * inflate).cwiseSqrt().cwiseQuotient(scale);
  return fit;
}

}  // namespace

NoiseBudgetFit noise_budget_fit(const std::vector<BudgetPoint>& points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    A(i, 0) = 1.0;
    A(i, 1) = p.n1;
    A(i, 2) = p.n1 * p.n1;
    b(i) = p.variance;
    const double sigma = p.sigma > 0.0 ? p.sigma : std::abs(p.variance);
    w(i) = sigma > 0.0 ? 1.0 / sigma : 1.0;
  }
  if (n < 3) throw std::invalid_argument("noise_budget_fit needs at least 3 distinct n1 values");
  const LinearFit fit = weighted_lsq(A, b, w);
  NoiseBudgetFit out;
  out.c_sn = {fit.coef(0), fit.stderr_(0)};
  out.c_qpn = {fit.coef(1), fit.stderr_(1)};
  out.c_cpn = {fit.coef(2), fit.stderr_(2)};
  out.chi2_per_dof = fit.chi2_per_dof;
  return out;
}

std::vector<AveragingPoint> averaging_scan(const std::vector<std::vector<double>>& shots,
                                           double sample_period, const std::vector<double>& windows) {
  if (!(sample_period > 0.0)) throw std::invalid_argument("averaging_scan: sample period must be positive");
  if (shots.size() < 2) throw std::invalid_argument("averaging_scan: need at least two shots");
  std::vector<AveragingPoint> out;
  for (double T : windows) {
    const auto n = static_cast<std::size_t>(std::llround(T / sample_period));
    if (n == 0) throw std::invalid_argument("averaging_scan: window shorter than one sample");
    std::vector<double> means;
    means.reserve(shots.size());
    for (const auto& s : shots) {
      if (s.size() < n) throw std::invalid_argument("averaging_scan: series shorter than the window");
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += s[i];
      means.push_back(acc / static_cast<double>(n));
    }
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= static_cast<double>(means.size());
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    var /= static_cast<double>(means.size() - 1);
    const double se = var * std::sqrt(2.0 / static_cast<double>(means.size() - 1));
    out.push_back({static_cast<double>(n) * sample_period, var, se});
  }
  return out;
}

AveragingFit fit_averaging(const std::vector<AveragingPoint>& points, bool subtract_floor) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 3) throw std::invalid_argument("fit_averaging needs at least 3 windows");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    A(i, 0) = 1.0 / p.T;
    A(i, 1) = 1.0;
    b(i) = p.variance;
    const double sigma = p.error > 0.0 ? p.error : std::abs(p.variance);
    w(i) = sigma > 0.0 ? 1.0 / sigma : 1.0;
  }
  AveragingFit out;
  const LinearFit lin = weighted_lsq(A, b, w);
  out.c_sn = {lin.coef(0), lin.stderr_(0)};
  out.c_qpn = {lin.coef(1), lin.stderr_(1)};

  // Power law on log-log axes, weighted by relative uncertainty.
  std::vector<double> lx, ly, lw;
  for (const auto& p : points) {
    const double v = subtract_floor ? p.variance - out.c_qpn.value : p.variance;
    if (v <= 0.0) continue;
    const double rel = p.error > 0.0 ? p.error / v : 1.0;
    lx.push_back(std::log(p.T));
    ly.push_back(std::log(v));
    lw.push_back(1.0 / rel);
  }
  if (lx.size() < 2) throw std::invalid_argument("fit_averaging: too few positive points for the power law");
  const auto m = static_cast<Eigen::Index>(lx.size());
  Eigen::MatrixXd B(m, 2);
  Eigen::VectorXd c(m), v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    B(i, 0) = 1.0;
    B(i, 1) = lx[static_cast<std::size_t>(i)];
    c(i) = ly[static_cast<std::size_t>(i)];
    v(i) = lw[static_cast<std::size_t>(i)];
  }
  const LinearFit pw = weighted_lsq(B, c, v);
  out.exponent = pw.coef(1);
  out.exponent_stderr = pw.stderr_(1);
  return out;
}

std::vector<CompositePoint> composite_pulse_scan(const std::vector<double>& theta_grid,
                                                 const RotationNoise& noise, std::size_t n_shots,
                                                 std::uint64_t seed, double initial_tilt) {
  if (n_shots < 100) throw std::invalid_argument("composite_pulse_scan needs at least 100 shots");
  noise.validate();
  std::vector<CompositePoint> out;
  out.reserve(theta_grid.size());
  const double n = static_cast<double>(n_shots);
  for (double theta : theta_grid) {
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n_shots; ++i) {
      RandomStream rng = RandomStream::derive(seed, i);
      SpinVector v = initial_tilt > 0.0 ? gaussian_tilt(kZAxis, initial_tilt, rng) : kZAxis;
      const ShotErrors e = draw_shot_errors(noise, rng);
      v = noisy_rotate(v, kPi / 2.0, kPi / 2.0, noise, e, rng);
      v = noisy_rotate(v, 0.0, theta, noise, e, rng);
      sum += v.z;
      sum2 += v.z * v.z;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
    out.push_back({theta, var, var * std::sqrt(2.0 / (n - 1.0))});
  }
  return out;
}

}  // namespace qmf
