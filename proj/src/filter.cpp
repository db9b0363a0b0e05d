#include "swgsim/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace swg {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double agm(double a, double b) {
  for (int i = 0; i < 64 && std::fabs(a - b) > 1e-16 * a; ++i) {
    const double am = 0.5 * (a + b);
    const double gm = std::sqrt(a * b);
    a = am;
    b = gm;
  }
  return a;
}

// Complete elliptic integrals K(k) and K'(k) = K(k'), modulus convention.
// The complementary integral is evaluated from k directly so that tiny
// moduli (k ~ 1e-9, i.e. k' rounding to 1) stay accurate.
struct EllipticK {
  double K;
  double Kp;
};

EllipticK ellipk_pair(double k) {
  const double kp = std::sqrt((1.0 - k) * (1.0 + k));
  EllipticK out{};
  out.K = kPi / (2.0 * agm(1.0, kp));
  if (k < 1e-7) {
    out.Kp = std::log(4.0 / k) + 0.25 * k * k * (std::log(4.0 / k) - 1.0);
  } else {
    out.Kp = kPi / (2.0 * agm(1.0, k));
  }
  return out;
}

// Descending Landen sequence k1, k2, ... from modulus k.
std::vector<double> landen_chain(double k) {
  std::vector<double> v;
  for (int i = 0; i < 32; ++i) {
    const double kp = std::sqrt((1.0 - k) * (1.0 + k));
    k = k / (1.0 + kp);
    k *= k;
    v.push_back(k);
    if (k < 1e-17) break;
  }
  return v;
}

// cd(u*K, k) for complex u, by ascending Gauss transformation.
cplx cde(cplx u, const std::vector<double>& chain) {
  cplx w = std::cos(u * (kPi / 2.0));
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    w = (1.0 + *it) * w / (1.0 + *it * w * w);
  }
  return w;
}

// sn(u*K, k) for complex u.
cplx sne(cplx u, const std::vector<double>& chain) {
  cplx w = std::sin(u * (kPi / 2.0));
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    w = (1.0 + *it) * w / (1.0 + *it * w * w);
  }
  return w;
}

// Inverse of sne: returns u with sn(u*K, k) = w.
cplx asne(cplx w, double k, const std::vector<double>& chain) {
  double prev = k;
  for (double kn : chain) {
    w = 2.0 * w / ((1.0 + kn) * (1.0 + std::sqrt(1.0 - prev * prev * w * w)));
    prev = kn;
  }
  return 2.0 * std::asin(w) / kPi;
}

double nome(const EllipticK& kk) { return std::exp(-kPi * kk.Kp / kk.K); }

// Modulus from the nome, k = (theta2(q)/theta3(q))^2.
double modulus_from_nome(double q) {
  double t2 = 0.0, t3 = 0.0;
  for (int n = 0; n < 24; ++n) {
    const double a = std::pow(q, n * (n + 1));  // theta2 series / 2 q^{1/4}
    t2 += a;
    if (n >= 1) t3 += std::pow(q, static_cast<double>(n) * n);
    if (n >= 2 && a < 1e-18) break;
  }
  const double theta2 = 2.0 * std::pow(q, 0.25) * t2;
  const double theta3 = 1.0 + 2.0 * t3;
  const double r = theta2 / theta3;
  return r * r;
}

double ripple_epsilon(double ripple_db) {
  return std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
}

double atten_epsilon(double atten_db) {
  return std::sqrt(std::pow(10.0, atten_db / 10.0) - 1.0);
}

BiquadSection pole_pair_section(cplx p, double zero_imag, double gain) {
  // Conjugate pole pair {p, conj(p)}, optional jw-axis zero pair {+-j*zero_imag}.
  const double pp = std::norm(p);
  BiquadSection s;
  s.a1 = -2.0 * p.real() / pp;
  s.a2 = 1.0 / pp;
  if (zero_imag > 0.0) {
    s.b0 = gain;
    s.b2 = gain / (zero_imag * zero_imag);
  } else {
    s.b0 = gain;
  }
  return s;
}

BiquadSection real_pole_section(double p, double gain) {
  BiquadSection s;
  s.b0 = gain;
  s.a1 = -1.0 / p;
  return s;
}

FilterDesign design_elliptic(int order, const FilterSpec& spec) {
  const double wp = 2.0 * kPi * spec.passband_edge_hz;
  const double ep = ripple_epsilon(spec.max_passband_ripple_db);
  const double k = spec.passband_edge_hz / spec.stopband_freq_hz;

  FilterDesign d;
  d.family = FilterFamily::elliptic;
  d.order = order;

  if (order == 1) {
    d.sections.push_back(real_pole_section(-wp / ep, 1.0));
    d.dc_gain_db = 0.0;
    return d;
  }

  const auto chain = landen_chain(k);
  const auto kk = ellipk_pair(k);

  // With order fixed and the band edges held exactly, the achieved
  // discrimination follows from the degree equation via the nome:
  // q1 = q^N, k1 = k(q1). The achieved stopband attenuation is then
  // 10*log10(1 + (ep/k1)^2) >= the requested one.
  const double q1 = std::pow(nome(kk), order);
  const double k1 = modulus_from_nome(q1);
  const auto chain1 = landen_chain(k1);

  const cplx u_eps = asne(cplx(0.0, 1.0 / ep), k1, chain1);
  const double v0 = u_eps.imag() / order;

  const int pair_count = order / 2;
  const bool odd = order % 2 != 0;

  if (odd) {
    const cplx s0 = cplx(0.0, 1.0) * sne(cplx(0.0, v0), chain);
    d.sections.push_back(real_pole_section(wp * s0.real(), 1.0));
  }
  for (int i = 1; i <= pair_count; ++i) {
    const double ui = (2.0 * i - 1.0) / order;
    const double zeta = cde(cplx(ui, 0.0), chain).real();
    const double zero = wp / (k * zeta);
    const cplx p = cplx(0.0, 1.0) * wp * cde(cplx(ui, -v0), chain);
    d.sections.push_back(pole_pair_section(p, zero, 1.0));
  }
  if (!odd) {
    const double g = std::pow(10.0, -spec.max_passband_ripple_db / 20.0);
    d.sections.front().b0 *= g;
    d.sections.front().b1 *= g;
    d.sections.front().b2 *= g;
  }
  double dc = 1.0;
  for (const auto& s : d.sections) dc *= s.b0;
  d.dc_gain_db = 20.0 * std::log10(dc);
  return d;
}

FilterDesign design_chebyshev1(int order, const FilterSpec& spec) {
  const double wp = 2.0 * kPi * spec.passband_edge_hz;
  const double ep = ripple_epsilon(spec.max_passband_ripple_db);
  const double a = std::asinh(1.0 / ep) / order;

  FilterDesign d;
  d.family = FilterFamily::chebyshev1;
  d.order = order;

  const int pair_count = order / 2;
  const bool odd = order % 2 != 0;
  if (odd) {
    d.sections.push_back(real_pole_section(-wp * std::sinh(a), 1.0));
  }
  for (int i = 1; i <= pair_count; ++i) {
    const double theta = kPi * (2.0 * i - 1.0) / (2.0 * order);
    const cplx p = wp * cplx(-std::sinh(a) * std::sin(theta),
                             std::cosh(a) * std::cos(theta));
    d.sections.push_back(pole_pair_section(p, 0.0, 1.0));
  }
  if (!odd) {
    d.sections.front().b0 *= std::pow(10.0, -spec.max_passband_ripple_db / 20.0);
  }
  double dc = 1.0;
  for (const auto& s : d.sections) dc *= s.b0;
  d.dc_gain_db = 20.0 * std::log10(dc);
  return d;
}

}  // namespace

std::string to_string(FilterFamily f) {
  return f == FilterFamily::elliptic ? "elliptic" : "chebyshev-type-1";
}

FilterFamily filter_family_from_string(const std::string& s) {
  if (s == "elliptic") return FilterFamily::elliptic;
  if (s == "chebyshev-type-1" || s == "chebyshev1" || s == "chebyshev") {
    return FilterFamily::chebyshev1;
  }
  throw std::invalid_argument("unknown filter family '" + s + "'");
}

bool BiquadSection::stable() const {
  if (a2 < 0.0 || a1 < 0.0) return false;
  if (a2 == 0.0) return true;  // first-order with a1 >= 0; a1 == 0 is constant
  return a1 > 0.0;
}

void FilterSpec::validate() const {
  if (!(passband_edge_hz > 0.0)) {
    throw std::invalid_argument("FilterSpec.passband_edge_hz must be > 0");
  }
  if (!(stopband_freq_hz > passband_edge_hz)) {
    throw std::invalid_argument(
        "FilterSpec.stopband_freq_hz must exceed passband_edge_hz");
  }
  if (!(min_stopband_atten_db > 0.0)) {
    throw std::invalid_argument("FilterSpec.min_stopband_atten_db must be > 0");
  }
  if (!(max_passband_ripple_db > 0.0)) {
    throw std::invalid_argument("FilterSpec.max_passband_ripple_db must be > 0");
  }
  if (max_order < 1) {
    throw std::invalid_argument("FilterSpec.max_order must be >= 1");
  }
}

std::complex<double> FilterDesign::response(double freq_hz) const {
  const std::complex<double> s(0.0, 2.0 * kPi * freq_hz);
  std::complex<double> h(1.0, 0.0);
  for (const auto& sec : sections) h *= sec.eval(s);
  return h;
}

double FilterDesign::mag_db(double freq_hz) const {
  const double m = std::abs(response(freq_hz));
  return 20.0 * std::log10(std::max(m, 1e-300));
}

bool FilterDesign::stable() const {
  return std::all_of(sections.begin(), sections.end(),
                     [](const BiquadSection& s) { return s.stable(); });
}

int min_order(FilterFamily family, const FilterSpec& spec) {
  const double ep = ripple_epsilon(spec.max_passband_ripple_db);
  const double es = atten_epsilon(spec.min_stopband_atten_db);
  if (es <= ep) return 1;  // demanded attenuation within the ripple budget

  if (family == FilterFamily::chebyshev1) {
    const double selectivity = spec.stopband_freq_hz / spec.passband_edge_hz;
    const double n = std::acosh(es / ep) / std::acosh(selectivity);
    return std::max(1, static_cast<int>(std::ceil(n - 1e-9)));
  }

  const double k = spec.passband_edge_hz / spec.stopband_freq_hz;
  const double k1 = ep / es;
  const auto kk = ellipk_pair(k);
  const auto kk1 = ellipk_pair(k1);
  const double n = (kk.K / kk.Kp) * (kk1.Kp / kk1.K);
  return std::max(1, static_cast<int>(std::ceil(n - 1e-9)));
}

FilterDesign design_lowpass(FilterFamily family, int order, const FilterSpec& spec) {
  spec.validate();
  if (order < 1) throw std::invalid_argument("filter order must be >= 1");
  return family == FilterFamily::elliptic ? design_elliptic(order, spec)
                                          : design_chebyshev1(order, spec);
}

FilterDesign synth_lowpass(const FilterSpec& spec, FilterFamily family) {
  spec.validate();
  const int n = min_order(family, spec);
  if (n > spec.max_order) {
    throw infeasible_spec_error(
        to_string(family) + " low-pass needs order " + std::to_string(n) +
        " for " + std::to_string(spec.min_stopband_atten_db) + " dB at " +
        std::to_string(spec.stopband_freq_hz) + " Hz, above max_order " +
        std::to_string(spec.max_order) + " (transition band too narrow)");
  }
  return design_lowpass(family, n, spec);
}

}  // namespace swg
