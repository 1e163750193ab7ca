#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mvg/model.hpp"

namespace mvg {

/// Model names accepted by `train --model`, in order: single0..single3
/// (0.5 s, 1 s, 2 s, 4 s views), parallel, merged.
const std::vector<std::string>& model_names();
ArchitectureConfig architecture_for(const std::string& model_name);

/// Runs the command line `args` (args[0] is the program name). Reports go to
/// `out`; progress and errors go to `err`. Errors are printed as one line,
/// "error[<category>]: <message>", and mapped to a non-zero exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvg
