#ifndef KGFLOW_SCENARIO_HPP
#define KGFLOW_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace kgflow {

/// Malformed or contradictory configuration input (CLI exit 1). Any other
/// exception escaping a run is a numerical/runtime failure (exit 2).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    int workers = 1;
    std::optional<std::uint64_t> seed;      // overrides the config seed
    std::optional<std::string> output_dir;  // overrides the config directory
};

/// Parses a strict-JSON scenario config (unknown keys rejected) and runs it:
/// artifacts land in the output directory, a human-readable digest goes to
/// `summary`. Identical config + seed produce byte-identical artifacts for
/// any worker count.
void run_scenario(const std::string& config_text, const RunOptions& opts, std::ostream& summary);

}  // namespace kgflow

#endif
