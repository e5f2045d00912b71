#include <cmath>
#include <complex>

#include "doctest.h"
#include "qmf/loop.hpp"
#include "qmf/quantum.hpp"
#include "qmf/scenario.hpp"

using namespace qmf;
using cd = std::complex<double>;

namespace {

// |<m|SCS(+x)>|^2 = C(2j, j+m) / 2^(2j), tabulated directly.
std::vector<double> binomial_weights(int two_j) {
  std::vector<double> w(two_j + 1);
  for (int k = 0; k <= two_j; ++k) w[k] = std::exp(std::lgamma(two_j + 1.0) - std::lgamma(k + 1.0) -
                                                   std::lgamma(two_j - k + 1.0) - two_j * std::log(2.0));
  return w;
}

double variance(const QuantumSpinState& s, const CMatrix& op) {
  const double m = expect(s, op);
  return expect(s, op * op) - m * m;
}

QuantumSpinState basis_state(double j, int index) {
  QuantumSpinState s{j, CVector::Zero(static_cast<Eigen::Index>(2 * j + 1))};
  s.amplitudes(index) = 1.0;
  return s;
}

}  // namespace

TEST_CASE("spin operators") {
  const SpinOperators h = spin_operators(0.5);
  CMatrix sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, cd(0, -1), cd(0, 1), 0;
  sz << 1, 0, 0, -1;
  CHECK((h.jx - 0.5 * sx).norm() < 1e-15);
  CHECK((h.jy - 0.5 * sy).norm() < 1e-15);
  CHECK((h.jz - 0.5 * sz).norm() < 1e-15);

  const SpinOperators one = spin_operators(1.0);
  CHECK((one.jz - Eigen::Vector3cd(1, 0, -1).asDiagonal().toDenseMatrix()).norm() < 1e-15);

  const SpinOperators o = spin_operators(20.0);
  const CMatrix cas = o.jx * o.jx + o.jy * o.jy + o.jz * o.jz;
  CHECK((cas - 420.0 * CMatrix::Identity(41, 41)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((o.jx * o.jy - o.jy * o.jx - cd(0, 1) * o.jz).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((o.jx - o.jx.adjoint()).norm() < 1e-15);
  CHECK((o.jy - o.jy.adjoint()).norm() < 1e-15);

  CHECK_THROWS_AS(spin_operators(0.3), std::invalid_argument);
  CHECK_THROWS_AS(spin_operators(500.5), std::invalid_argument);
}

TEST_CASE("spin coherent states") {
  const QuantumSpinState up = scs_state(3.0, {0.0, 0.0});
  CHECK(std::abs(up.amplitudes(0) - 1.0) < 1e-15);

  const SpinOperators o = spin_operators(4.0);
  const QuantumSpinState x = scs_state(4.0, {kPi / 2, 0.0});
  CHECK(std::abs(expect(x, o.jz)) < 1e-12);
  const auto w = binomial_weights(8);
  double var = 0;
  for (int i = 0; i <= 8; ++i) {
    const double m = 4.0 - i;
    var += w[i] * m * m;
    CHECK(std::norm(x.amplitudes(i)) == doctest::Approx(w[i]).epsilon(1e-12));
  }
  CHECK(variance(x, o.jz) == doctest::Approx(var).epsilon(1e-12));
  CHECK(std::abs(variance(x, o.jz) - 2.0) < 1e-8);
  CHECK(std::abs(variance(x, o.jy) - variance(x, o.jz)) < 1e-10);

  RandomStream rng(1);
  const SpinOperators b = spin_operators(7.5);
  for (int i = 0; i < 50; ++i) {
    const SphericalAngles a{kPi * rng.uniform(), -kPi + kTwoPi * rng.uniform()};
    const QuantumSpinState s = scs_state(7.5, a);
    const SpinVector n = from_angles(a);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
    CHECK(std::abs(n.x * expect(s, b.jx) + n.y * expect(s, b.jy) + n.z * expect(s, b.jz) - 7.5) < 1e-8);
  }
}

TEST_CASE("expect") {
  const SpinOperators o = spin_operators(5.0);
  CHECK(expect(basis_state(5.0, 0), o.jz) == doctest::Approx(5.0));
  CHECK(std::abs(expect(scs_state(5.0, {kPi / 2, 0.0}), o.jx) - 5.0) < 1e-8);
  CHECK(expect(scs_state(5.0, {1.0, 2.0}), CMatrix::Identity(11, 11)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(expect(scs_state(5.0, {1.0, 2.0}), CMatrix::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("kraus measurement") {
  // Trapezoid quadrature of the outcome density.
  for (double sigma : {0.7, 3.0}) {
    const QuantumSpinState s = scs_state(6.0, {1.1, 0.3});
    double total = 0;
    const double lo = -6 - 12 * sigma, hi = 6 + 12 * sigma, h = 1e-3;
    for (double m = lo; m <= hi; m += h) total += kraus_apply(s, m, sigma).prob_density * h;
    CHECK(std::abs(total - 1.0) < 1e-8);
  }
  // Operator completeness: each diagonal entry of the integral of K^dagger K.
  const double j = 20.0, sigma = 1.5;
  for (int i = 0; i <= 40; i += 5) {
    const QuantumSpinState e = basis_state(j, i);
    double total = 0;
    for (double m = -j - 15 * sigma; m <= j + 15 * sigma; m += 1e-3) total += kraus_apply(e, m, sigma).prob_density * 1e-3;
    CHECK(std::abs(total - 1.0) < 1e-6);
  }

  const QuantumSpinState e = basis_state(3.0, 2);
  const KrausResult r = kraus_apply(e, 1.0, 1e-3);
  CHECK((r.state.amplitudes - e.amplitudes).norm() < 1e-12);

  // Far in the tail the density underflows but the conditioned state is
  // still the top level.
  const KrausResult tail = kraus_apply(scs_state(3.0, {1.0, 0.0}), 1e4, 0.5);
  CHECK(tail.prob_density == 0.0);
  CHECK(std::abs(std::norm(tail.state.amplitudes(0)) - 1.0) < 1e-12);

  const QuantumSpinState x = scs_state(4.0, {kPi / 2, 0.0});
  const KrausResult weak = kraus_apply(x, 3.0, 4e3);
  const SpinOperators o = spin_operators(4.0);
  CHECK(std::abs(expect(weak.state, o.jz)) < 1e-5);
  CHECK(std::norm(x.amplitudes.dot(weak.state.amplitudes)) > 1 - 1e-6);
}

TEST_CASE("outcome sampling") {
  RandomStream rng(3);
  const QuantumSpinState e = basis_state(4.0, 1);  // m = 3
  const int n = 100000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += sample_outcome(e, 2.0, rng);
  CHECK(std::abs(sum / n - 3.0) < 3 * 2.0 / std::sqrt(n));

  const QuantumSpinState x = scs_state(4.0, {kPi / 2, 0.0});
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double m = sample_outcome(x, 3.0, rng);
    s1 += m;
    s2 += m * m;
  }
  const double var = (s2 - s1 * s1 / n) / (n - 1);
  CHECK(var == doctest::Approx(9.0 + 2.0).epsilon(0.03));

  const auto w = binomial_weights(8);
  std::vector<int> counts(9, 0);
  for (int i = 0; i < n; ++i) {
    const double m = sample_outcome(x, 0.0, rng);
    REQUIRE(m == std::round(m));
    counts[static_cast<int>(4 - m)]++;
  }
  for (int i = 0; i <= 8; ++i) CHECK(std::abs(counts[i] - n * w[i]) < 5 * std::sqrt(n * w[i]) + 1);
}

TEST_CASE("qmf_step") {
  const double j = 50.0, alpha = 3.0e4, dt = 2e-6;
  const QmfStepper st(j);
  const SpinOperators& o = st.operators();
  QuantumSpinState s = scs_state(j, {0.4, 0.9});
  SpinVector c = from_angles({0.4, 0.9});
  const LmgParams lin{0.0, alpha};
  for (int n = 0; n < 20; ++n) {
    s = st.step(s, 0.0, lin, dt, 1e12);
    c = rotate(c, kXAxis, alpha * dt);
    CHECK(std::abs(s.norm() - 1.0) < 1e-10);
    CHECK(std::abs(expect(s, o.jz) / j - c.z) < 1e-6);
    CHECK(std::abs(expect(s, o.jy) / j - c.y) < 1e-6);
  }

  const QuantumSpinState x = scs_state(j, {kPi / 2, 0.0});
  const QuantumSpinState a = st.step(x, 7.0, {0.7, alpha}, 0.0, 5.0);
  CHECK((a.amplitudes - kraus_apply(x, 7.0, 5.0).state.amplitudes).norm() < 1e-12);
  const QuantumSpinState b = qmf_step(x, 7.0, {0.7, alpha}, dt, 5.0);
  CHECK(std::abs(b.norm() - 1.0) < 1e-10);
  CHECK((b.amplitudes - st.step(x, 7.0, {0.7, alpha}, dt, 5.0).amplitudes).norm() < 1e-12);
}

TEST_CASE("repeated weak measurement localizes Jz") {
  const double j = 20.0;
  const SpinOperators o = spin_operators(j);
  QuantumSpinState s = scs_state(j, {kPi / 2, 0.0});
  RandomStream rng(4);
  double prev = variance(s, o.jz);
  for (int n = 0; n < 30; ++n) {
    s = kraus_apply(s, sample_outcome(s, 3.0, rng), 3.0).state;
    const double v = variance(s, o.jz);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("mmss_variance") {
  auto enumerate = [](double f) {
    double s = 0;
    const int n = static_cast<int>(2 * f + 1);
    for (int i = 0; i < n; ++i) s += (f - i) * (f - i);
    return s / n;
  };
  const MmssVariance v4 = mmss_variance(4.0);
  CHECK(v4.variance == doctest::Approx(20.0 / 3.0));
  CHECK(v4.variance == doctest::Approx(enumerate(4.0)));
  CHECK(v4.ratio_to_scs == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
  const MmssVariance h = mmss_variance(0.5);
  CHECK(h.variance == doctest::Approx(0.25));
  CHECK(h.ratio_to_scs == doctest::Approx(1.0));
  double prev = 0;
  for (double f = 0.5; f <= 10; f += 0.5) {
    CHECK(mmss_variance(f).variance == doctest::Approx(enumerate(f)));
    CHECK(mmss_variance(f).ratio_to_scs > prev);
    prev = mmss_variance(f).ratio_to_scs;
  }
  CHECK_THROWS_AS(mmss_variance(0.25), std::invalid_argument);
}

TEST_CASE("quantum run from +x follows the matched classical loop") {
  // Neither model has latency here, so neither settles; both ride the orbit
  // through the fixed-point region. Compare second-half mean |Z|.
  const double j = 200.0, sigma = 20.0, dt = 2e-6;
  const std::size_t steps = 150, n = 16;
  const LmgParams p = LmgParams::from_alpha(0.7, kTwoPi * 6.25e3);
  const SphericalAngles start{kPi / 2, 0.0};
  const auto q = qmf_ensemble(j, sigma, dt, steps, p, start, n, 17);
  const auto [cfg, model] = matched_classical(j, sigma, dt, dt * steps, start);
  const auto c = run_batch(cfg, p, model, 4 * n, 18);
  auto half_mean = [&](auto get, std::size_t count) {
    double acc = 0;
    std::size_t k = 0;
    for (std::size_t t = 0; t < count; ++t)
      for (std::size_t i = steps / 2; i <= steps; ++i, ++k) acc += std::abs(get(t, i));
    return acc / k;
  };
  const double mq = half_mean([&](std::size_t t, std::size_t i) { return q[t].jz[i]; }, n);
  const double mc = half_mean([&](std::size_t t, std::size_t i) { return c[t].z[i]; }, 4 * n);
  CHECK(std::abs(mq - mc) < 0.1);
  double peak = 0;
  for (const auto& t : q)
    for (double z : t.jz) peak = std::max(peak, std::abs(z));
  CHECK(peak > 0.9);
}
