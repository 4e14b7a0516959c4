#pragma once

#include <iosfwd>
#include <string>

#include "homog/experiment.hpp"

namespace homog {

/// Parse an experiment description. The grammar is documented in
/// docs/config.md; every error is a ConfigError naming `source` and the line.
/// The result is validated before it is returned.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");

/// parse_config on a file; ConfigError if it cannot be opened.
ExperimentConfig load_config(const std::string& path);

}  // namespace homog
