#pragma once

#include <stdexcept>
#include <string>

namespace swg {

// No filter of the requested family and order budget can meet the spec.
struct infeasible_spec_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Delay scan saw no peak above the noise floor (source too weak or off).
struct no_peak_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct insufficient_statistics_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Calibration targets cannot be distinguished (e.g. identical PDE values).
struct degenerate_fit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct unreachable_target_error : std::runtime_error {
  double best_residual;
  unreachable_target_error(const std::string& msg, double residual)
      : std::runtime_error(msg), best_residual(residual) {}
};

struct event_buffer_overflow_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config parse or validation failure, with file:line anchoring when known.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace swg
