#include <cmath>
#include <numeric>

#include "doctest.h"
#include "qmf/measurement.hpp"
#include "qmf/random.hpp"
#include "qmf/scenario.hpp"

using namespace qmf;

namespace {

double sample_variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// Ordinary least-squares slope, written out.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("model validation") {
  MeasurementModel m;
  CHECK_NOTHROW(m.validate());
  m.ratio_n2_n1 = 1.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.ratio_n2_n1 = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = MeasurementModel{};
  m.n1_eff = -1;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("qpn_variance") {
  MeasurementModel m;
  m.chi_p = 1.0;
  CHECK(qpn_variance(m) == doctest::Approx(1e6));
  m.ratio_n2_n1 = 1.0;
  m.n1_eff = 12345;
  CHECK(qpn_variance(m) == doctest::Approx(12345 * 4.0 / 2));
  m.n1_eff = 1e-300;
  CHECK(qpn_variance(m) < 1e-290);
}

TEST_CASE("shot_noise_variance") {
  MeasurementModel m;
  m.sn_coeff = 2e-10;
  CHECK(shot_noise_variance(m, 1e-4) == doctest::Approx(2e-6));
  CHECK(shot_noise_variance(m, 2e-4) == doctest::Approx(0.5 * shot_noise_variance(m, 1e-4)));
  CHECK(shot_noise_variance(m, 1e300) < 1e-300);
  CHECK_THROWS_AS(shot_noise_variance(m, 0.0), std::invalid_argument);
}

TEST_CASE("pointing_uncertainty") {
  MeasurementModel m;
  CHECK(pointing_uncertainty(m) == doctest::Approx(2.5e-4));
  m.ratio_n2_n1 = 1.0;
  CHECK(pointing_uncertainty(m) == doctest::Approx(std::sqrt(2e6) / 4e6));
  const double a = pointing_uncertainty(m);
  m.n1_eff *= 4;
  CHECK(pointing_uncertainty(m) == doctest::Approx(a / 2));
}

TEST_CASE("measure") {
  MeasurementModel m;
  RandomStream rng(1);
  const MeasurementSample s = measure(1.0, 3e6, m, 2e-6, 0.0, false, rng);
  CHECK(s.value == doctest::Approx(m.chi_p * 3e6));
  CHECK(s.value == s.m_f + s.m_qpn + s.m_sn);

  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const MeasurementSample r = measure(0.0, 4e6, m, 2e-6, 0.0, true, rng);
    CHECK(r.value == r.m_f + r.m_qpn + r.m_sn);
    sum += r.value;
  }
  CHECK(std::abs(sum / n) < 3 * std::sqrt(shot_noise_variance(m, 2e-6) / n));

  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) {
    RandomStream shot = RandomStream::derive(3, i);
    const double off = draw_qpn_offset(m, shot);
    v.push_back(measure(0.0, 4e6, m, 2e-6, off, true, shot).value);
  }
  CHECK(sample_variance(v) == doctest::Approx(qpn_variance(m) + shot_noise_variance(m, 2e-6)).epsilon(0.05));
  CHECK_THROWS_AS(measure(1.5, 1.0, m, 2e-6, 0.0, false, rng), std::invalid_argument);
  CHECK_THROWS_AS(measure(0.5, 1.0, m, 0.0, 0.0, false, rng), std::invalid_argument);
}

TEST_CASE("noise_budget_fit recovers exact quadratics") {
  std::vector<BudgetPoint> pts;
  for (double n : {1.0, 2.0, 5.0, 7.0, 11.0}) pts.push_back({n, 1 + 2 * n + 3 * n * n, 0.0});
  const NoiseBudgetFit f = noise_budget_fit(pts);
  CHECK(std::abs(f.c_sn.value - 1) < 1e-9);
  CHECK(std::abs(f.c_qpn.value - 2) < 1e-9);
  CHECK(std::abs(f.c_cpn.value - 3) < 1e-9);
  CHECK_THROWS_AS(noise_budget_fit({{1, 1, 0}, {1, 1, 0}, {2, 3, 0}}), std::invalid_argument);
}

TEST_CASE("noise_budget_fit on Monte Carlo data") {
  std::vector<double> grid{1e4, 2e4, 5e4, 1e5, 2e5, 5e5, 1e6, 2e6, 5e6, 1e7};
  const NoiseBudgetMc free = noise_budget_mc(3e4, 1.0, 0.0, grid, 4000, 21);
  CHECK(std::abs(free.fit.c_cpn.value) < 2 * free.fit.c_cpn.error);
  CHECK(free.fit.c_qpn.value == doctest::Approx(1.0).epsilon(0.1));

  // Large classical noise: the quadratic term dominates at 1e6 atoms.
  const NoiseBudgetMc big = noise_budget_mc(3e4, 1.0, 1e-4, grid, 4000, 22);
  const double n = 1e6;
  CHECK(big.fit.c_cpn.value * n * n > 10 * (big.fit.c_sn.value + big.fit.c_qpn.value * n));
}

TEST_CASE("budget scaling exponents") {
  std::vector<double> grid{1e4, 3e4, 1e5, 3e5, 1e6, 3e6, 1e7};
  std::vector<double> lx, lq, lc;
  const NoiseBudgetMc q = noise_budget_mc(0.0, 1.0, 0.0, grid, 4000, 31);
  const NoiseBudgetMc c = noise_budget_mc(0.0, 0.0, 1e-6, grid, 4000, 32);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    lx.push_back(std::log(grid[i]));
    lq.push_back(std::log(q.points[i].variance));
    lc.push_back(std::log(c.points[i].variance));
  }
  CHECK(slope(lx, lq) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(slope(lx, lc) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("averaging_scan") {
  const std::vector<double> windows{2e-6, 4e-6, 8e-6, 16e-6, 32e-6, 64e-6};
  MeasurementModel m;
  const AveragingMc white = averaging_mc(m, 2e-6, 32, windows, false, 3000, 41);
  CHECK(white.fit.exponent == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(white.fit.c_sn.value == doctest::Approx(m.sn_coeff).epsilon(0.1));

  const AveragingMc floor = averaging_mc(m, 2e-6, 256, {2e-6, 16e-6, 128e-6, 512e-6}, true, 3000, 42);
  CHECK(floor.fit.c_qpn.value == doctest::Approx(qpn_variance(m)).epsilon(0.1));
  CHECK(floor.points.back().variance == doctest::Approx(qpn_variance(m)).epsilon(0.1));

  const std::vector<std::vector<double>> flat(10, std::vector<double>(16, 0.25));
  for (const auto& p : averaging_scan(flat, 1.0, {1, 2, 4, 8})) CHECK(p.variance == 0.0);
  CHECK_THROWS_AS(averaging_scan(flat, 1.0, {32}), std::invalid_argument);
}

TEST_CASE("composite_pulse_scan") {
  std::vector<double> grid;
  for (int j = 1; j <= 15; ++j) grid.push_back(j * kPi / 8);
  for (const auto& p : composite_pulse_scan(grid, RotationNoise{}, 200, 1)) CHECK(p.variance < 1e-28);

  RotationNoise n;
  n.static_detuning_sigma = kTwoPi * 50.0;
  const auto noisy = composite_pulse_scan(grid, n, 2000, 5, 2.5e-4);
  const auto base = composite_pulse_scan(grid, RotationNoise{}, 2000, 5, 2.5e-4);
  std::size_t imax = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (noisy[i].variance > noisy[imax].variance) imax = i;
  CHECK(imax == 5);  // 3 pi / 4
  const std::size_t i32 = 11;  // 3 pi / 2
  CHECK(std::abs(noisy[i32].variance - base[i32].variance) <
        2 * std::hypot(noisy[i32].error, base[i32].error));
  CHECK_THROWS_AS(composite_pulse_scan(grid, n, 99, 1), std::invalid_argument);
}
