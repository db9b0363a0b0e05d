#pragma once

#include "swgsim/config.hpp"

namespace swg {

// Dispatches to the named protocol, writes its CSVs and run manifest into
// config.output_dir (all-or-nothing). Exit status: 0 success, 1 protocol
// error, 2 config error; diagnostics go to stderr.
int run_protocol(const RunConfig& config);

}  // namespace swg
