#include "swgsim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "swgsim/errors.hpp"

namespace swg {

namespace {

// Trigger probability of a released carrier scales as pde^gamma. The
// detrapped carrier sits in the multiplication region, so its avalanche
// probability tracks the detection efficiency; the sub-linear exponent
// reproduces the measured growth of the afterpulse fraction with PDE.
constexpr double kTriggerPdeExponent = 0.75;

// Expected in-window releases per gate below which the fast path treats the
// afterpulse probability as zero. Error bound: < n_gates * eps events.
constexpr double kTrapReleaseEpsilon = 1e-12;

constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

struct GateLaw {
  double p_dark = 0.0;
  double p_photon_on_pulse = 0.0;  // constant: the delay is fixed per run
  double duty = 0.0;
  double decay = 1.0;              // exp(-T_gate / tau)
  double trigger_eff = 0.0;        // p_trigger * pde^gamma
  double pulse_stride_gates = 0.0; // f_g / rep_rate; 0 when source off
  double n_fill = 0.0;
  double release_factor = 0.0;     // (1 - decay) * duty
};

double gate_transmission(const DetectorParams& params, const GateClock& clock,
                         const PhotonSource& source) {
  const double period = clock.period_s();
  double d = std::fmod(clock.phase_offset_s, period);
  if (d < 0.0) d += period;
  const double displaced = std::min(d, period - d);
  const double width = params.gate_width.at(params.pde);
  const double sigma_pulse = source.pulse_sigma_s;
  const double fwhm_eff =
      std::sqrt(width * width + kFwhmPerSigma * kFwhmPerSigma * sigma_pulse * sigma_pulse);
  const double x = displaced / fwhm_eff;
  return std::exp(-4.0 * std::log(2.0) * x * x);
}

GateLaw make_gate_law(const DetectorParams& params, const GateClock& clock,
                      const PhotonSource& source) {
  GateLaw law;
  law.p_dark = std::min(1.0, params.dcr.at(params.pde) / clock.gate_freq_hz);
  law.duty = params.gate_width.at(params.pde) * clock.gate_freq_hz;
  law.decay = std::exp(-clock.period_s() / params.traps.tau_detrap_s);
  law.trigger_eff =
      params.traps.p_trigger * std::pow(params.pde, kTriggerPdeExponent);
  law.n_fill = params.traps.n_fill;
  law.release_factor = (1.0 - law.decay) * law.duty;
  if (source.mu > 0.0 && source.rep_rate_hz > 0.0) {
    law.pulse_stride_gates = clock.gate_freq_hz / source.rep_rate_hz;
    const double eta_gate = params.pde * gate_transmission(params, clock, source);
    law.p_photon_on_pulse = -std::expm1(-source.mu * eta_gate);
  }
  return law;
}

inline double p_after_from_released(double trigger_eff, double released) {
  const double x = trigger_eff * released;
  return x > 0.0 ? -std::expm1(-x) : 0.0;
}

// Gate index of source pulse n (nearest gate gets the whole pulse).
inline std::uint64_t pulse_gate(double stride, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      std::llround(static_cast<double>(n) * stride));
}

// Smallest pulse number whose gate is >= g.
inline std::uint64_t first_pulse_at_or_after(double stride, std::uint64_t g) {
  if (g == 0) return 0;
  auto n = static_cast<std::uint64_t>(
      std::ceil((static_cast<double>(g) - 0.5) / stride));
  while (pulse_gate(stride, n) < g) ++n;
  while (n > 0 && pulse_gate(stride, n - 1) >= g) --n;
  return n;
}

struct EngineCore {
  const GateLaw law;
  const double fg;
  const std::uint64_t holdoff_gates;
  const RunOptions& opts;

  double pop = 0.0;
  std::uint64_t holdoff_until = 0;
  std::uint64_t pop_int = 0;  // integer-trap mode
  Rng rng;
  RunCounts counts;
  std::vector<EventRecord>* events;

  EngineCore(const GateLaw& l, double gate_freq, std::uint64_t ho_gates,
             const RunOptions& o, std::uint64_t seed,
             std::vector<EventRecord>* ev)
      : law(l), fg(gate_freq), holdoff_gates(ho_gates), opts(o), rng(seed),
        events(ev) {}

  void emit(std::uint64_t g, Cause cause) {
    const bool recorded = g >= holdoff_until;
    CauseCounts& bucket = recorded ? counts.recorded : counts.unrecorded;
    switch (cause) {
      case Cause::photon: ++bucket.photon; break;
      case Cause::dark: ++bucket.dark; break;
      case Cause::afterpulse: ++bucket.afterpulse; break;
    }
    if (recorded) {
      const std::uint64_t until = g + 1 + holdoff_gates;
      holdoff_until = until < g ? std::numeric_limits<std::uint64_t>::max() : until;
    }
    if (opts.record_events || opts.event_sink) {
      const EventRecord rec{g, (static_cast<double>(g) + 0.25) / fg, cause, recorded};
      if (opts.event_sink) opts.event_sink(rec);
      if (opts.record_events) {
        if (events->size() >= opts.event_cap) {
          throw event_buffer_overflow_error(
              "run_sequence: event stream exceeds cap of " +
              std::to_string(opts.event_cap));
        }
        events->push_back(rec);
      }
    }
  }
};

// Naive oracle: one uniform per gate, photon -> dark -> afterpulse cascade.
void run_exact_loop(EngineCore& core, std::uint64_t start, std::uint64_t n_gates) {
  const GateLaw& law = core.law;
  const std::uint64_t end = start + n_gates;
  std::uint64_t next_pulse = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t pulse_n = 0;
  if (law.pulse_stride_gates > 0.0) {
    pulse_n = first_pulse_at_or_after(law.pulse_stride_gates, start);
    next_pulse = pulse_gate(law.pulse_stride_gates, pulse_n);
  }

  for (std::uint64_t g = start; g < end; ++g) {
    double p_ph = 0.0;
    if (g == next_pulse) {
      p_ph = law.p_photon_on_pulse;
      ++pulse_n;
      next_pulse = pulse_gate(law.pulse_stride_gates, pulse_n);
    }
    double p_af;
    std::uint64_t released_int = 0;
    if (core.opts.integer_traps) {
      released_int = core.rng.binomial(core.pop_int, 1.0 - law.decay);
      core.pop_int -= released_int;
      p_af = released_int == 0
                 ? 0.0
                 : 1.0 - std::pow(1.0 - law.duty * law.trigger_eff,
                                  static_cast<double>(released_int));
    } else {
      const double released = core.pop * law.release_factor;
      p_af = p_after_from_released(law.trigger_eff, released);
      core.pop *= law.decay;
    }

    const double u = core.rng.uniform();
    Cause cause{};
    bool avalanche = false;
    const double t_dark = p_ph + (1.0 - p_ph) * law.p_dark;
    if (u < p_ph) {
      cause = Cause::photon;
      avalanche = true;
    } else if (u < t_dark) {
      cause = Cause::dark;
      avalanche = true;
    } else if (u < t_dark + (1.0 - t_dark) * p_af) {
      cause = Cause::afterpulse;
      avalanche = true;
    }
    if (avalanche) {
      if (core.opts.integer_traps) {
        core.pop_int += core.rng.poisson(law.n_fill);
      } else {
        core.pop += law.n_fill;
      }
      core.emit(g, cause);
    }
  }
}

// Skip-sampling engine: between source pulses the per-gate law is a constant
// dark term plus a deterministically decaying afterpulse term, so candidate
// avalanches are drawn geometrically under an upper bound and accepted by
// thinning. Distribution-identical to the naive loop.
void run_fast(EngineCore& core, std::uint64_t start, std::uint64_t n_gates) {
  const GateLaw& law = core.law;
  const std::uint64_t end = start + n_gates;
  const double eps_pop = law.release_factor > 0.0
                             ? kTrapReleaseEpsilon / law.release_factor
                             : std::numeric_limits<double>::infinity();
  const std::uint64_t efold_gates = law.decay < 1.0
      ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
            std::ceil(-1.0 / std::log(law.decay))))
      : std::numeric_limits<std::uint64_t>::max();

  std::uint64_t next_pulse = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t pulse_n = 0;
  if (law.pulse_stride_gates > 0.0) {
    pulse_n = first_pulse_at_or_after(law.pulse_stride_gates, start);
    next_pulse = pulse_gate(law.pulse_stride_gates, pulse_n);
  }

  std::uint64_t g = start;
  while (g < end) {
    if (core.pop < eps_pop) core.pop = 0.0;

    if (g == next_pulse) {
      // Single-gate handling, all three causes live.
      const double released = core.pop * law.release_factor;
      const double p_af = p_after_from_released(law.trigger_eff, released);
      core.pop *= law.decay;
      const double u = core.rng.uniform();
      const double p_ph = law.p_photon_on_pulse;
      const double t_dark = p_ph + (1.0 - p_ph) * law.p_dark;
      Cause cause{};
      bool avalanche = false;
      if (u < p_ph) {
        cause = Cause::photon;
        avalanche = true;
      } else if (u < t_dark) {
        cause = Cause::dark;
        avalanche = true;
      } else if (u < t_dark + (1.0 - t_dark) * p_af) {
        cause = Cause::afterpulse;
        avalanche = true;
      }
      if (avalanche) {
        core.pop += law.n_fill;
        core.emit(g, cause);
      }
      ++pulse_n;
      next_pulse = pulse_gate(law.pulse_stride_gates, pulse_n);
      ++g;
      continue;
    }

    const std::uint64_t stretch_end = std::min(end, next_pulse);

    if (core.pop == 0.0) {
      // Homogeneous stretch: pure geometric on the dark rate.
      if (law.p_dark <= 0.0) {
        g = stretch_end;
        continue;
      }
      const double k = core.rng.geometric(law.p_dark);
      if (k >= static_cast<double>(stretch_end - g)) {
        g = stretch_end;
        continue;
      }
      const auto gc = g + static_cast<std::uint64_t>(k);
      core.pop += law.n_fill;
      core.emit(gc, Cause::dark);
      g = gc + 1;
      continue;
    }

    // Decaying afterpulse term: bound it at the segment start (one e-fold
    // long at most) and thin the geometric candidates.
    const std::uint64_t seg_end =
        std::min(stretch_end, efold_gates < stretch_end - g
                                  ? g + efold_gates
                                  : stretch_end);
    const double pa_bound =
        p_after_from_released(law.trigger_eff, core.pop * law.release_factor);
    const double p_bound = std::min(1.0, law.p_dark + pa_bound);
    const double k = core.rng.geometric(p_bound);
    if (k >= static_cast<double>(seg_end - g)) {
      core.pop *= std::pow(law.decay, static_cast<double>(seg_end - g));
      g = seg_end;
      continue;
    }
    const auto gc = g + static_cast<std::uint64_t>(k);
    const double pop_c = core.pop * std::pow(law.decay, k);
    const double p_af = p_after_from_released(law.trigger_eff, pop_c * law.release_factor);
    const double p_tot = law.p_dark + p_af - law.p_dark * p_af;
    const double u = core.rng.uniform();
    if (u * p_bound < p_tot) {
      const double v = core.rng.uniform();
      const Cause cause = v * p_tot < law.p_dark ? Cause::dark : Cause::afterpulse;
      core.pop = pop_c * law.decay + law.n_fill;
      core.emit(gc, cause);
    } else {
      core.pop = pop_c * law.decay;
    }
    g = gc + 1;
  }
}

}  // namespace

std::string to_string(Cause c) {
  switch (c) {
    case Cause::photon: return "photon";
    case Cause::dark: return "dark";
    case Cause::afterpulse: return "afterpulse";
  }
  return "?";
}

void DetectorParams::validate(double gate_freq_hz) const {
  if (!(pde >= 0.0 && pde <= 1.0)) {
    throw std::invalid_argument("DetectorParams.pde must be in [0,1]");
  }
  if (!(dcr.dcr0_cps >= 0.0)) {
    throw std::invalid_argument("DetectorParams.dcr.dcr0_cps must be >= 0");
  }
  const double width = gate_width.at(pde);
  if (!(width > 0.0 && width < 1.0 / gate_freq_hz)) {
    throw std::invalid_argument(
        "DetectorParams.gate_width: dt(pde) must lie in (0, 1/f_g)");
  }
  if (!(traps.n_fill >= 0.0)) {
    throw std::invalid_argument("DetectorParams.traps.n_fill must be >= 0");
  }
  if (!(traps.tau_detrap_s > 0.0)) {
    throw std::invalid_argument("DetectorParams.traps.tau_detrap_s must be > 0");
  }
  if (!(traps.p_trigger >= 0.0 && traps.p_trigger <= 1.0)) {
    throw std::invalid_argument("DetectorParams.traps.p_trigger must be in [0,1]");
  }
}

void GateClock::validate() const {
  if (!(gate_freq_hz > 0.0)) {
    throw std::invalid_argument("GateClock.gate_freq_hz must be > 0");
  }
  if (!(phase_offset_s >= 0.0 && phase_offset_s < period_s())) {
    throw std::invalid_argument(
        "GateClock.phase_offset_s must be in [0, 1/gate_freq_hz)");
  }
}

void PhotonSource::validate() const {
  if (!(mu >= 0.0)) throw std::invalid_argument("PhotonSource.mu must be >= 0");
  if (mu > 0.0 && !(rep_rate_hz > 0.0)) {
    throw std::invalid_argument("PhotonSource.rep_rate_hz must be > 0");
  }
  if (!(pulse_sigma_s >= 0.0)) {
    throw std::invalid_argument("PhotonSource.pulse_sigma_s must be >= 0");
  }
}

void HoldOffPolicy::validate() const {
  if (!(holdoff_s >= 0.0)) {
    throw std::invalid_argument("HoldOffPolicy.holdoff_s must be >= 0");
  }
}

GateProbabilities per_gate_probabilities(const DetectorParams& params,
                                         const GateClock& clock,
                                         const PhotonSource& source,
                                         const EngineState& state,
                                         std::uint64_t gate_index) {
  params.validate(clock.gate_freq_hz);
  clock.validate();
  source.validate();
  const GateLaw law = make_gate_law(params, clock, source);

  GateProbabilities p;
  p.dark = law.p_dark;
  if (law.pulse_stride_gates > 0.0) {
    const auto n = static_cast<std::uint64_t>(std::llround(
        static_cast<double>(gate_index) / law.pulse_stride_gates));
    if (pulse_gate(law.pulse_stride_gates, n) == gate_index) {
      p.photon = law.p_photon_on_pulse;
    }
  }
  const double released = state.trap_population * law.release_factor;
  p.afterpulse = p_after_from_released(law.trigger_eff, released);
  return p;
}

EngineState trap_update(EngineState state, std::uint64_t /*gate_index*/,
                        bool avalanche_occurred, const DetectorParams& params,
                        const GateClock& clock) {
  const double decay = std::exp(-clock.period_s() / params.traps.tau_detrap_s);
  state.trap_population *= decay;
  if (avalanche_occurred) {
    state.trap_population += params.traps.n_fill;
  }
  return state;
}

GateClock set_delay(GateClock clock, double phase_offset_s) {
  if (!(phase_offset_s >= 0.0 && phase_offset_s < clock.period_s())) {
    throw std::invalid_argument("set_delay: offset must be in [0, gate period)");
  }
  clock.phase_offset_s = phase_offset_s;
  return clock;
}

RunResult run_sequence(const DetectorParams& params, const GateClock& clock,
                       const PhotonSource& source, const HoldOffPolicy& holdoff,
                       std::uint64_t n_gates, std::uint64_t seed,
                       const RunOptions& options) {
  params.validate(clock.gate_freq_hz);
  clock.validate();
  source.validate();
  holdoff.validate();
  if (n_gates < 1) throw std::invalid_argument("run_sequence: n_gates must be >= 1");
  if (options.integer_traps && options.mode == EngineMode::fast) {
    throw std::invalid_argument(
        "run_sequence: integer trap mode requires the exact per-gate loop");
  }

  const GateLaw law = make_gate_law(params, clock, source);
  const auto ho_gates = static_cast<std::uint64_t>(
      std::min(std::llround(holdoff.holdoff_s * clock.gate_freq_hz),
               static_cast<long long>(1) << 62));

  RunResult result;
  result.counts.n_gates = n_gates;
  EngineCore core(law, clock.gate_freq_hz, ho_gates, options, seed,
                  &result.events);
  if (options.mode == EngineMode::fast) {
    run_fast(core, clock.gate_index, n_gates);
  } else {
    run_exact_loop(core, clock.gate_index, n_gates);
  }
  result.counts.recorded = core.counts.recorded;
  result.counts.unrecorded = core.counts.unrecorded;
  return result;
}

void write_events_ndjson(const std::vector<EventRecord>& events,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  char buf[160];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf,
                  "{\"gate_index\":%llu,\"t_s\":%.12g,\"cause\":\"%s\",\"recorded\":%s}\n",
                  static_cast<unsigned long long>(e.gate_index), e.t_s,
                  to_string(e.cause).c_str(), e.recorded ? "true" : "false");
    out << buf;
  }
}

}  // namespace swg
