#pragma once

#include <complex>
#include <string>
#include <vector>

#include "swgsim/errors.hpp"

namespace swg {

enum class FilterFamily { chebyshev1, elliptic };

std::string to_string(FilterFamily f);
FilterFamily filter_family_from_string(const std::string& s);

// One second-order rational section in the analog domain, ascending powers:
//
//   H(s) = (b0 + b1*s + b2*s^2) / (1 + a1*s + a2*s^2)
//
// The denominator constant term is normalized to 1, so the section's DC gain
// is b0. First-order sections set b2 = a2 = 0.
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> eval(std::complex<double> s) const {
    return (b0 + s * (b1 + s * b2)) / (1.0 + s * (a1 + s * a2));
  }
  // Denominator roots strictly in the left half plane.
  bool stable() const;
};

struct FilterSpec {
  double passband_edge_hz = 1.0e9;
  double stopband_freq_hz = 1.25e9;
  double min_stopband_atten_db = 60.0;
  double max_passband_ripple_db = 1.0;
  int max_order = 12;

  void validate() const;  // throws std::invalid_argument naming the field
};

struct FilterDesign {
  FilterFamily family = FilterFamily::elliptic;
  int order = 0;
  std::vector<BiquadSection> sections;
  double dc_gain_db = 0.0;

  std::complex<double> response(double freq_hz) const;
  double mag_db(double freq_hz) const;
  bool stable() const;
};

// Minimum order of `family` meeting `spec`, from the Chebyshev/elliptic
// degree equations. At least 1; may exceed spec.max_order.
int min_order(FilterFamily family, const FilterSpec& spec);

// Design at an explicit order (>= min for a compliant result, but any order
// >= 1 is accepted so tests can probe the just-failing design). Band edges
// are kept exactly at the spec edges; the achieved stopband attenuation is
// whatever the order delivers.
FilterDesign design_lowpass(FilterFamily family, int order, const FilterSpec& spec);

// Minimum-order design meeting the spec, or infeasible_spec_error when no
// order <= spec.max_order does.
FilterDesign synth_lowpass(const FilterSpec& spec,
                           FilterFamily family = FilterFamily::elliptic);

}  // namespace swg
