#include <cmath>

#include "doctest.h"
#include "qmf/controller.hpp"
#include "qmf/random.hpp"

using namespace qmf;

namespace {

const FixedPointFormat kQ{true, 32, 4};

// The printed [5,5] rational function, evaluated term by term in long double.
long double pade_oracle(long double x) {
  const long double c[6] = {1.0L, 1.0L / 2, 1.0L / 9, 1.0L / 72, 1.0L / 1008, 1.0L / 30240};
  long double num = 0, den = 0, p = 1;
  for (int i = 0; i < 6; ++i) {
    num += c[i] * p;
    den += (i % 2 ? -1 : 1) * c[i] * p;
    p *= x;
  }
  return num / den;
}

double wrap_oracle(double x) { return std::copysign(std::fmod(std::abs(x), 2.0), x); }

}  // namespace

TEST_CASE("format invariants") {
  CHECK(kQ.frac_bits() == 28);
  CHECK(kQ.step() == std::ldexp(1.0, -28));
  CHECK_THROWS_AS((FixedPointFormat{true, 32, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((FixedPointFormat{true, 65, 4}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((FixedPointFormat{true, 8, 9}.validate()), std::invalid_argument);
  CHECK_NOTHROW((FixedPointFormat{true, 64, 8}.validate()));
}

TEST_CASE("fxp_quantize") {
  CHECK(fxp_quantize(0.0, kQ).raw == 0);
  CHECK(fxp_quantize(0.5, kQ).to_double() == 0.5);
  CHECK(std::abs(fxp_quantize(1.0 / 3.0, kQ).to_double() - 1.0 / 3.0) <= std::ldexp(1.0, -28));
  RandomStream rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double x = -8.0 + 16.0 * rng.uniform();
    const FixedPointValue v = fxp_quantize(x, kQ);
    CHECK(std::abs(v.to_double() - x) <= std::ldexp(1.0, -(32 - 4 - 1)));
    CHECK(fxp_quantize(v.to_double(), kQ).raw == v.raw);
  }
  FxpDiagnostics d;
  const FixedPointValue big = fxp_quantize(100.0, kQ, &d);
  CHECK(big.raw == kQ.raw_max());
  CHECK(fxp_quantize(-100.0, kQ, &d).raw == kQ.raw_min());
  CHECK(d.saturations == 2);
  const FixedPointFormat u{false, 16, 2};
  CHECK(fxp_quantize(-1.0, u).raw == 0);
}

TEST_CASE("fixed-point arithmetic") {
  const auto a = fxp_quantize(1.25, kQ), b = fxp_quantize(-0.75, kQ);
  CHECK(fxp_add(a, b).to_double() == 0.5);
  CHECK(fxp_sub(a, b).to_double() == 2.0);
  CHECK(fxp_mul(a, b).to_double() == -0.9375);
  CHECK(std::abs(fxp_div(a, b).to_double() + 5.0 / 3.0) <= kQ.step());
  CHECK_THROWS_AS(fxp_div(a, fxp_quantize(0.0, kQ)), std::domain_error);
  FxpDiagnostics d;
  const auto s = fxp_mul(fxp_quantize(7.0, kQ), fxp_quantize(7.0, kQ), &d);
  CHECK(s.raw == kQ.raw_max());
  CHECK(d.saturations == 1);
  CHECK(fxp_clamp(fxp_quantize(3.0, kQ), -1.0, 1.0).to_double() == 1.0);
}

TEST_CASE("pade_exp") {
  CHECK(pade_exp(0.0) == 1.0);
  CHECK(std::abs(pade_exp(-1.0) - static_cast<double>(pade_oracle(-1.0L))) < 1e-15);
  double prev = 2.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = -static_cast<double>(i) / 1000.0;
    const double p = pade_exp(x);
    CHECK(std::abs(p - std::exp(x)) < 1e-4);
    CHECK(std::abs(p - static_cast<double>(pade_oracle(x))) < 1e-15);
    CHECK(p < prev);
    prev = p;
    const double q = pade_exp(fxp_quantize(x, kQ)).to_double();
    CHECK(std::abs(q - p) < 1.0 / 32768.0);
  }
  CHECK_THROWS_AS(pade_exp(20.0), std::domain_error);
}

TEST_CASE("bmod2") {
  CHECK(bmod2(fxp_quantize(1.75, kQ)).to_double() == 1.75);
  CHECK(bmod2(fxp_quantize(2.5, kQ)).to_double() == 0.5);
  CHECK(bmod2(fxp_quantize(-3.25, kQ)).to_double() == -1.25);
  CHECK(bmod2(-3.25) == -1.25);
  RandomStream rng(6);
  for (int i = 0; i < 100000; ++i) {
    const double x = -7.9 + 15.8 * rng.uniform();
    const FixedPointValue q = fxp_quantize(x, kQ);
    CHECK(std::abs(bmod2(q).to_double() - wrap_oracle(q.to_double())) <= kQ.step());
  }
}

TEST_CASE("kick_angle") {
  CHECK(kick_angle(0.9, 10.0) == doctest::Approx(9.0 - kTwoPi).epsilon(1e-12));
  CHECK(kick_angle(1.0, kPi) == doctest::Approx(kPi));
  CHECK(kick_angle(0.0, 3.0) == 0.0);
  RandomStream rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double m = -1.0 + 2.0 * rng.uniform(), k = 20.0 * rng.uniform();
    const double a = kick_angle(m, k);
    CHECK(std::abs(a) < kTwoPi);
    const SpinVector v = SpinVector::normalized(rng.normal(), rng.normal(), rng.normal());
    CHECK((rotate(v, kZAxis, a).vec() - rotate(v, kZAxis, k * m).vec()).norm() < 1e-9);
    if (k < 8 * kPi / 1.0001) {
      const double af = kick_angle(fxp_quantize(m, kQ), k);
      CHECK((rotate(v, kZAxis, af).vec() - rotate(v, kZAxis, k * m).vec()).norm() < 1e-6);
    }
  }
}

TEST_CASE("decay_estimate") {
  const double h = 2e-3;
  CHECK(decay_estimate(4e6, h, 0.0) == 4e6);
  CHECK(decay_estimate(4e6, h, h) == doctest::Approx(2e6).epsilon(1e-4));
  CHECK(decay_estimate(4e6, h, 2 * h) == doctest::Approx(1e6).epsilon(2e-4));
  CHECK(decay_estimate(4e6, h, 10 * h) == doctest::Approx(4e6 / 1024).epsilon(1e-3));
  for (double t : {0.0, 1e-4, 7e-4, 1.5e-3, 3e-3})
    CHECK(decay_estimate(1.0, h, t, kQ) == doctest::Approx(decay_estimate(1.0, h, t)).epsilon(1.0 / 32768));
  CHECK_THROWS_AS(decay_estimate(1.0, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(decay_estimate(1.0, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("ctl_gain") {
  CoilCalibration c;
  CHECK(ctl_gain(c) == doctest::Approx(5478.26).epsilon(1e-5));
  CoilCalibration d = c;
  d.amp_gain = 2.0;
  CHECK(ctl_gain(d) == doctest::Approx(2 * ctl_gain(c)));
  d.resistance = 0.0;
  CHECK_THROWS_AS(ctl_gain(d), std::invalid_argument);
  d = c;
  d.n_loops = 0.0;
  CHECK(ctl_gain(d) == 0.0);
  d.gamma = -1.0;
  CHECK_THROWS_AS(ctl_gain(d), std::invalid_argument);
}

TEST_CASE("lmg_control") {
  const LmgParams p{0.7, kTwoPi * 31.25e3};
  const double chi = 1e-6, J = 4e6;
  CHECK(lmg_control(chi * J, J, chi, p) == doctest::Approx(p.k_nl()));
  CHECK(lmg_control(0.0, J, chi, p) == 0.0);
  CHECK(lmg_control(0.5 * chi * J, J, chi, p) == doctest::Approx(6.872e4).epsilon(1e-4));
  CHECK(lmg_control(3.0 * chi * J, J, chi, p) == doctest::Approx(p.k_nl()));
  CHECK(lmg_control(-3.0 * chi * J, J, chi, p) == doctest::Approx(-p.k_nl()));
  CHECK(lmg_control(chi * J, J, chi, p, 1000.0) == 1000.0);
  CHECK_THROWS_AS(lmg_control(1.0, 0.0, chi, p), std::invalid_argument);
}

TEST_CASE("qkt_schedule") {
  const QktSchedule s = qkt_schedule(20e-6, 8e-6, 20e-6, 25, 2e-6, 1.5e-3);
  CHECK(s.period() == doctest::Approx(48e-6));
  CHECK(s.total() == doctest::Approx(1.2e-3));
  CHECK_THROWS_AS(qkt_schedule(20e-6, 8e-6, 20e-6, 32, 2e-6, 1.5e-3), std::invalid_argument);
  CHECK(qkt_schedule(20e-6, 8e-6, 20e-6, 0, 2e-6, 1.5e-3).total() == 0.0);
  CHECK_THROWS_AS(qkt_schedule(21e-6, 8e-6, 20e-6, 5, 2e-6, 1.5e-3), std::invalid_argument);
  CHECK_THROWS_AS(qkt_schedule(0.0, 8e-6, 20e-6, 5, 2e-6, 1.5e-3), std::invalid_argument);
}

TEST_CASE("fixed-point controller tracks the double reference") {
  ControllerConfig fx, dbl;
  dbl.arithmetic = Arithmetic::double_precision;
  const double chi = 1e-6, v0 = 4.0;
  Controller a(fx, v0, chi), b(dbl, v0, chi);
  const LmgParams p{0.7, kTwoPi * 6.25e3 / 0.3};
  RandomStream rng(13);
  for (std::size_t tick = 0; tick < 750; ++tick) {
    CHECK(a.signal_estimate(tick) == doctest::Approx(b.signal_estimate(tick)).epsilon(1.0 / 32768));
    const double m = (-1.2 + 2.4 * rng.uniform()) * b.signal_estimate(tick);
    CHECK(std::abs(a.normalized(m, tick) - b.normalized(m, tick)) < 1.0 / 32768);
    CHECK(std::abs(a.lmg_rate(m, tick, p) - b.lmg_rate(m, tick, p)) < p.k_nl() / 32768);
    CHECK(std::abs(b.normalized(m, tick)) <= 1.0);
  }
  CHECK(b.signal_estimate(1000) == doctest::Approx(v0 / 2).epsilon(1e-4));
  Controller c(dbl, v0, chi);
  c.set_input_filter([](double m) { return 0.5 * m; });
  CHECK(c.normalized(v0, 0) == doctest::Approx(0.5));
}
