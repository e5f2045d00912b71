#pragma once

#include <cstdint>

namespace qmf {

// (signed, word_bits, int_bits); int_bits counts the sign bit. Raw values are
// held in int64, so unsigned formats are limited to 63 bits.
struct FixedPointFormat {
  bool is_signed = true;
  int word_bits = 32;
  int int_bits = 4;

  int frac_bits() const { return word_bits - int_bits; }
  double step() const;
  std::int64_t raw_min() const;
  std::int64_t raw_max() const;
  void validate() const;
  bool operator==(const FixedPointFormat&) const = default;
};

struct FixedPointValue {
  std::int64_t raw = 0;
  FixedPointFormat format;
  double to_double() const;
};

// Counts silent saturations; pass one in when the caller wants to know.
struct FxpDiagnostics {
  std::uint64_t saturations = 0;
};

// Round to nearest (ties away from zero), saturate at the format range.
FixedPointValue fxp_quantize(double x, const FixedPointFormat& fmt, FxpDiagnostics* diag = nullptr);
inline double fxp_dequantize(const FixedPointValue& v) { return v.to_double(); }

// Results take the format of the left operand.
FixedPointValue fxp_add(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag = nullptr);
FixedPointValue fxp_sub(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag = nullptr);
FixedPointValue fxp_mul(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag = nullptr);
// Throws std::domain_error on division by zero.
FixedPointValue fxp_div(const FixedPointValue& a, const FixedPointValue& b, FxpDiagnostics* diag = nullptr);
FixedPointValue fxp_clamp(const FixedPointValue& a, double lo, double hi);

// sign(x) * mod(|x|, 2): keep the fraction bits and the lowest integer bit
// of the magnitude, then put the sign back.
FixedPointValue bmod2(const FixedPointValue& x);
double bmod2(double x);

}  // namespace qmf
