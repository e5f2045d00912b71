#include "qmf/fixed_point.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qmf {

namespace {

using i128 = __int128;

std::int64_t saturate(i128 raw, const FixedPointFormat& fmt, FxpDiagnostics* diag) {
  const i128 lo = fmt.raw_min(), hi = fmt.raw_max();
  if (raw < lo || raw > hi) {
    if (diag) ++diag->saturations;
    return static_cast<std::int64_t>(raw < lo ? lo : hi);
  }
  return static_cast<std::int64_t>(raw);
}

// Arithmetic right shift with round-half-up.
i128 shift_round(i128 v, int bits) {
  if (bits <= 0) return v << -bits;
  return (v + (i128{1} << (bits - 1))) >> bits;
}

// Re-express raw of format `from` in format `to`.
i128 convert(std::int64_t raw, const FixedPointFormat& from, const FixedPointFormat& to) {
  return shift_round(raw, from.frac_bits() - to.frac_bits());
}

}  // namespace

double FixedPointFormat::step() const { return std::ldexp(1.0, -frac_bits()); }

std::int64_t FixedPointFormat::raw_min() const {
  if (!is_signed) return 0;
  return word_bits == 64 ? INT64_MIN : -(std::int64_t{1} << (word_bits - 1));
}

std::int64_t FixedPointFormat::raw_max() const {
  if (is_signed) return word_bits == 64 ? INT64_MAX : (std::int64_t{1} << (word_bits - 1)) - 1;
  return (std::int64_t{1} << word_bits) - 1;
}

void FixedPointFormat::validate() const {
  if (!(1 <= int_bits && int_bits <= word_bits && word_bits <= 64))
    throw std::invalid_argument("fixed-point format needs 1 <= int_bits <= word_bits <= 64");
  if (!is_signed && word_bits > 63)
    throw std::invalid_argument("unsigned fixed-point formats are limited to 63 bits");
}

double FixedPointValue::to_double() const { return std::ldexp(static_cast<double>(raw), -format.frac_bits()); }

FixedPointValue fxp_quantize(double x, const FixedPointFormat& fmt, FxpDiagnostics* diag) {
  fmt.validate();
  if (std::isnan(x)) throw std::invalid_argument("fxp_quantize: NaN input");
  const double scaled = std::round(std::ldexp(x, fmt.frac_bits()));
  const double lo = static_cast<double>(fmt.raw_min()), hi = static_cast<double>(fmt.raw_max());
  FixedPointValue v{0, fmt};
  if (scaled < lo) {
    if (diag) ++diag->saturations;
    v.raw = fmt.raw_min();
  } else if (scaled >= hi) {
    // hi may not be exactly representable as a double (64-bit words).
    if (scaled > hi && diag) ++diag->saturations;
    v.raw = scaled > hi ? fmt.raw_max() : static_cast<std::int64_t>(scaled);
  } else {
    v.raw = static_cast<std::int64_t>(scaled);
  }
  return v;
}

FixedPointValue fxp_add(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag) {
  const i128 r = i128{a.raw} + convert(b.raw, b.format, a.format);
  return {saturate(r, a.format, diag), a.format};
}

FixedPointValue fxp_sub(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag) {
  const i128 r = i128{a.raw} - convert(b.raw, b.format, a.format);
  return {saturate(r, a.format, diag), a.format};
}

FixedPointValue fxp_mul(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag) {
  const i128 p = i128{a.raw} * i128{b.raw};
  return {saturate(shift_round(p, b.format.frac_bits()), a.format, diag), a.format};
}

FixedPointValue fxp_div(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag) {
  if (b.raw == 0) throw std::domain_error("fxp_div: division by zero");
  // (a / 2^fa) / (b / 2^fb) in units of 2^-fa: a * 2^fb / b, rounded.
  i128 num = i128{a.raw} << b.format.frac_bits();
  i128 den = b.raw;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 q = num >= 0 ? (num + den / 2) / den : -((-num + den / 2) / den);
  return {saturate(q, a.format, diag), a.format};
}

FixedPointValue fxp_clamp(const FixedPointValue& a, double lo, double hi) {
  const FixedPointValue l = fxp_quantize(lo, a.format), h = fxp_quantize(hi, a.format);
  if (a.raw < l.raw) return l;
  if (a.raw > h.raw) return h;
  return a;
}

FixedPointValue bmod2(const FixedPointValue& x) {
  if (!x.format.is_signed) throw std::invalid_argument("bmod2 needs a signed format");
  const int keep = x.format.frac_bits() + 1;
  const i128 mag = x.raw < 0 ? -i128{x.raw} : i128{x.raw};
  const i128 mask = (i128{1} << keep) - 1;
  const i128 r = mag & mask;
  return {static_cast<std::int64_t>(x.raw < 0 ? -r : r), x.format};
}

double bmod2(double x) {
  const double r = std::fmod(std::abs(x), 2.0);
  return x < 0.0 ? -r : r;
}

}  // namespace qmf
