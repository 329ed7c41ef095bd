// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gtpdm::cli {

/// Exit codes; every nonzero exit also prints one JSON error record on `err`.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kConfig = 3,
    kIo = 4,
    kValidation = 5,
    kTraining = 6,
    kNumeric = 7,
};

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gtpdm::cli
