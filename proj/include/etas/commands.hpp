#pragma once

#include <iosfwd>

#include "etas/run_config.hpp"

namespace etas {

/// Each command reads its settings from `config` (filling defaults), writes
/// its outputs plus a resolved `config.txt` into the `out` directory, and
/// prints a short human-readable summary to `log`.
void cmd_simulate(RunConfig& config, std::ostream& log);
void cmd_fit(RunConfig& config, std::ostream& log);
void cmd_evaluate(RunConfig& config, std::ostream& log);
void cmd_forecast(RunConfig& config, std::ostream& log);

}  // namespace etas
