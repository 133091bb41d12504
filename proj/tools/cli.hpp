#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rnnsamp::cli {

enum ExitCode : int {
    kOk = 0,
    kError = 1,
    kUsage = 2,
    kPartialFailure = 3,  // some architectures could not be evaluated
};

/// Entry point of the `rnnsamp` command. `args[0]` is the program name.
///
///   rnnsamp gen-data   --frequency F --t-end T -o series.csv
///   rnnsamp sample     --data series.csv --nc 1..100 --lb 30 --out-dir out/
///   rnnsamp train      --data series.csv --nc 16 --lb 30 -o run.json
///   rnnsamp experiment --plan plan.json --out-dir report/
///
/// Every subcommand accepts `--config file.json`, a flat object whose keys are
/// long flag names; flags given on the command line take precedence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rnnsamp::cli
