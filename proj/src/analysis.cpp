#include "qmf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace qmf {

namespace {

std::vector<std::complex<double>> rfft(const std::vector<double>& series) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> out;
  fft.fwd(out, series);
  out.resize(series.size() / 2 + 1);
  return out;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(v.size() - 1);
}

}  // namespace

std::vector<double> power_spectrum(const std::vector<double>& series) {
  if (series.empty()) throw std::invalid_argument("power_spectrum: empty series");
  std::vector<double> p;
  for (const auto& c : rfft(series)) p.push_back(std::norm(c));
  return p;
}

SpectralSummary spectral_entropy(const std::vector<double>& series, bool include_dc) {
  if (series.size() < 8) throw std::invalid_argument("spectral_entropy: need at least 8 samples");
  if (std::all_of(series.begin(), series.end(), [](double v) { return v == 0.0; }))
    throw std::invalid_argument("spectral_entropy: all-zero series");
  const auto spec = rfft(series);
  const double n = static_cast<double>(series.size());
  std::size_t first = include_dc ? 0 : 1;
  double total = 0.0;
  for (std::size_t k = first; k < spec.size(); ++k) total += std::abs(spec[k]);
  // Everything at DC (constant input): report that honestly.
  if (total <= 1e-12 * std::abs(spec[0])) {
    first = 0;
    total = 0.0;
    for (const auto& c : spec) total += std::abs(c);
  }
  SpectralSummary s;
  double h = 0.0, best = -1.0;
  for (std::size_t k = first; k < spec.size(); ++k) {
    const double p = std::abs(spec[k]) / total;
    s.frequencies.push_back(static_cast<double>(k) / n);
    s.p.push_back(p);
    if (p > 0.0) h -= p * std::log(p);
    if (p > best) {
      best = p;
      s.dominant_frequency = static_cast<double>(k) / n;
    }
  }
  const double bins = static_cast<double>(s.p.size());
  s.entropy = bins > 1.0 ? std::clamp(h / std::log(bins), 0.0, 1.0) : 0.0;
  return s;
}

LyapunovEstimate lyapunov_jacobian(const KtParams& p, const SpinVector& x0, std::size_t n_steps) {
  if (n_steps < 1000) throw std::invalid_argument("lyapunov_jacobian: n_steps must be at least 1000");
  SpinVector x = x0;
  Eigen::Vector2d v(1.0, 0.0);
  double sum = 0.0, half_estimate = 0.0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    v = kt_jacobian(x, p) * v;
    const double g = v.norm();
    if (!(g > 0.0) || !std::isfinite(g)) throw std::runtime_error("lyapunov_jacobian: tangent vector degenerated");
    sum += std::log(g);
    v /= g;
    x = kt_step(x, p);
    if (!std::isfinite(x.x) || std::abs(x.norm() - 1.0) > 1e-9)
      throw std::runtime_error("lyapunov_jacobian: orbit left the unit sphere");
    if (n + 1 == n_steps / 2) half_estimate = sum / static_cast<double>(n + 1);
  }
  LyapunovEstimate e;
  e.method = LyapunovMethod::jacobian;
  e.lambda_max = sum / static_cast<double>(n_steps);
  e.n_points = n_steps;
  // Convergence diagnostic: change between the half-length and full estimate.
  e.residuals = {e.lambda_max - half_estimate};
  return e;
}

LyapunovEstimate lyapunov_stddev(const std::vector<std::vector<double>>& series, std::size_t n_fit) {
  if (series.size() < 50) throw std::invalid_argument("lyapunov_stddev: need at least 50 ensemble members");
  if (n_fit < 3) throw std::invalid_argument("lyapunov_stddev: n_fit must be at least 3");
  std::vector<double> logs;
  for (std::size_t n = 0; n < n_fit; ++n) {
    std::vector<double> col;
    for (const auto& s : series) {
      if (s.size() <= n) throw std::invalid_argument("lyapunov_stddev: series shorter than n_fit");
      col.push_back(s[n]);
    }
    const double var = sample_variance(col);
    const double floor = 1e-13 * std::max(1.0, std::abs(mean(col)));
    if (!(var > floor * floor)) throw std::domain_error("lyapunov_stddev: zero ensemble variance at step " + std::to_string(n));
    logs.push_back(0.5 * std::log(var));
  }
  // Ordinary least squares of log sigma against the step index.
  const double m = static_cast<double>(n_fit);
  const double xbar = (m - 1.0) / 2.0;
  const double ybar = mean(logs);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t n = 0; n < n_fit; ++n) {
    const double dx = static_cast<double>(n) - xbar;
    sxy += dx * (logs[n] - ybar);
    sxx += dx * dx;
  }
  LyapunovEstimate e;
  e.method = LyapunovMethod::stddev;
  e.lambda_max = sxy / sxx;
  e.intercept = ybar - e.lambda_max * xbar;
  e.n_points = n_fit;
  for (std::size_t n = 0; n < n_fit; ++n)
    e.residuals.push_back(logs[n] - (e.intercept + e.lambda_max * static_cast<double>(n)));
  return e;
}

std::vector<std::vector<double>> kt_theta_ensemble(const KtParams& p, const SpinVector& center,
                                                   std::size_t members, double tilt, std::size_t n_steps,
                                                   std::uint64_t seed) {
  std::vector<std::vector<double>> out(members);
  for (std::size_t i = 0; i < members; ++i) {
    RandomStream rng = RandomStream::derive(seed, i);
    SpinVector x = gaussian_tilt(center, tilt, rng);
    out[i].reserve(n_steps + 1);
    out[i].push_back(to_angles(x).theta);
    for (std::size_t n = 0; n < n_steps; ++n) {
      x = kt_step(x, p);
      out[i].push_back(to_angles(x).theta);
    }
  }
  return out;
}

OrderParameters order_parameters(const std::vector<TrajectoryRecord>& records, double t_begin, double t_end) {
  if (records.empty()) throw std::invalid_argument("order_parameters: no records");
  std::vector<double> zs, czz;
  // Sample times are i * Ts in floating point; keep edge samples from
  // flipping in or out on the last ulp.
  const double eps = 1e-9 * (t_end - t_begin);
  for (const auto& r : records) {
    double a = 0.0, b = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r.t[i] < t_begin - eps || r.t[i] >= t_end - eps) continue;
      a += r.z[i];
      b += r.z[i] * r.z[i];
      ++n;
    }
    if (n == 0) throw std::invalid_argument("order_parameters: record does not cover the averaging window");
    zs.push_back(a / static_cast<double>(n));
    czz.push_back(b / static_cast<double>(n));
  }
  OrderParameters o;
  o.z_inf = mean(zs);
  o.czz_inf = mean(czz);
  const double k = static_cast<double>(records.size());
  o.z_stderr = std::sqrt(sample_variance(zs) / k);
  o.czz_stderr = std::sqrt(sample_variance(czz) / k);
  return o;
}

TddResult extract_tdd(const std::vector<double>& t, const std::vector<double>& z, const SettleCriteria& crit) {
  if (t.size() != z.size() || t.size() < 10) throw std::invalid_argument("extract_tdd: need matching series of >= 10 samples");
  TddResult r;
  const std::size_t n = z.size();
  const std::size_t tail = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(crit.final_fraction * static_cast<double>(n))));
  const std::vector<double> final_window(z.end() - static_cast<std::ptrdiff_t>(tail), z.end());
  r.z_initial = z.front();
  r.z_final = mean(final_window);
  r.final_variance = sample_variance(final_window);
  const double swing = r.z_final - r.z_initial;
  r.settled = swing != 0.0 && r.final_variance < crit.threshold * swing * swing;
  if (!r.settled) return r;
  const double mid = 0.5 * (r.z_initial + r.z_final);
  const double dir = swing > 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    if ((z[i] - mid) * dir >= 0.0) {
      const double z0 = z[i - 1], z1 = z[i];
      const double frac = z1 != z0 ? (mid - z0) / (z1 - z0) : 0.0;
      const double tc = t[i - 1] + std::clamp(frac, 0.0, 1.0) * (t[i] - t[i - 1]);
      r.t_dd = r.z_final < 0.0 ? -tc : tc;
      break;
    }
  }
  return r;
}

TddResult extract_tdd(const TrajectoryRecord& rec, const SettleCriteria& crit) {
  return extract_tdd(rec.t, rec.z, crit);
}

std::optional<double> settling_time(const TrajectoryRecord& rec, double band, const SettleCriteria& crit) {
  const TddResult r = extract_tdd(rec, crit);
  if (!r.settled) return std::nullopt;
  const double tol = band * std::abs(r.z_final);
  for (std::size_t i = rec.size(); i-- > 0;)
    if (std::abs(rec.z[i] - r.z_final) > tol) return i + 1 < rec.size() ? rec.t[i + 1] : rec.t[i];
  return rec.t.front();
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: need two equal-length series");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

SymmetryStats symmetry_stats(const std::vector<TrajectoryRecord>& records, const SettleCriteria& crit) {
  if (records.size() < 2) throw std::invalid_argument("symmetry_stats: need at least two records");
  SymmetryStats s;
  std::vector<double> first, well;
  std::size_t upper = 0;
  for (const auto& r : records) {
    const TddResult t = extract_tdd(r, crit);
    if (t.z_final > 0.0) ++upper;
    if (t.settled) ++s.n_settled;
    first.push_back(r.meas.front());
    well.push_back(t.z_final > 0.0 ? 1.0 : -1.0);
    s.tdd_list.push_back({r.meas.front(), t.t_dd});
  }
  s.upper_fraction = static_cast<double>(upper) / static_cast<double>(records.size());
  s.initial_final_correlation = pearson(first, well);
  return s;
}

FtcRigidity ftc_rigidity(const std::map<double, std::vector<std::vector<double>>>& series_by_alpha,
                         bool include_dc) {
  FtcRigidity out;
  for (const auto& [alpha, ensemble] : series_by_alpha) {
    if (ensemble.empty()) throw std::invalid_argument("ftc_rigidity: empty ensemble");
    std::vector<double> psd;
    for (const auto& s : ensemble) {
      if (s.size() < 16) throw std::invalid_argument("ftc_rigidity: series must have at least 16 steps");
      const double mu = mean(s);
      std::vector<double> centered(s.size());
      std::transform(s.begin(), s.end(), centered.begin(), [mu](double v) { return v - mu; });
      const auto p = power_spectrum(centered);
      if (psd.empty()) psd.assign(p.size(), 0.0);
      if (p.size() != psd.size()) throw std::invalid_argument("ftc_rigidity: series lengths differ within an ensemble");
      for (std::size_t k = 0; k < p.size(); ++k) psd[k] += p[k] / static_cast<double>(ensemble.size());
    }
    const std::size_t first = include_dc ? 0 : 1;
    const std::size_t nyq = psd.size() - 1;  // period-2 bin for an even length
    const auto peak = std::max_element(psd.begin() + static_cast<std::ptrdiff_t>(first), psd.end());
    const double total = std::accumulate(psd.begin() + 1, psd.end(), 0.0);
    out.alphas.push_back(alpha);
    out.period2_dominant.push_back(static_cast<std::size_t>(peak - psd.begin()) == nyq && *peak > 0.0);
    out.period2_fraction.push_back(total > 0.0 ? psd[nyq] / total : 0.0);
    out.psd.push_back(std::move(psd));
  }
  if (out.alphas.empty()) return out;

  std::size_t centre = 0;
  for (std::size_t i = 1; i < out.alphas.size(); ++i)
    if (std::abs(out.alphas[i] - kPi) < std::abs(out.alphas[centre] - kPi)) centre = i;
  if (out.period2_dominant[centre]) {
    std::size_t lo = centre, hi = centre;
    while (lo > 0 && out.period2_dominant[lo - 1]) --lo;
    while (hi + 1 < out.alphas.size() && out.period2_dominant[hi + 1]) ++hi;
    out.window = std::make_pair(out.alphas[lo], out.alphas[hi]);
    out.rigidity_window = out.alphas[hi] - out.alphas[lo];
  }

  // FWHM of the period-2 fraction around its maximum, linearly interpolated.
  const auto& f = out.period2_fraction;
  const std::size_t top = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
  const double half = 0.5 * f[top];
  if (half > 0.0) {
    auto edge = [&](std::size_t inside, std::size_t outside) {
      const double t = (half - f[outside]) / (f[inside] - f[outside]);
      return out.alphas[outside] + t * (out.alphas[inside] - out.alphas[outside]);
    };
    std::size_t lo = top, hi = top;
    while (lo > 0 && f[lo - 1] >= half) --lo;
    while (hi + 1 < f.size() && f[hi + 1] >= half) ++hi;
    const double left = lo > 0 ? edge(lo, lo - 1) : out.alphas[lo];
    const double right = hi + 1 < f.size() ? edge(hi, hi + 1) : out.alphas[hi];
    out.fwhm = right - left;
  }
  return out;
}

}  // namespace qmf
