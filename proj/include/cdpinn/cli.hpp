#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cdpinn {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumerics = 3,
};

// Entry point of the `cdpinn` tool. args excludes the program name.
//
//   cdpinn train    --problem h2:1.0|FILE --profile desk|paper [--epochs N --lr X --seed S] --out DIR
//   cdpinn eval     --checkpoint F --problem P [--grid 512] --out DIR
//   cdpinn oracle   --problem P [--lambda-grid 101 --nc-order 2 --checkpoint F] --out DIR
//   cdpinn fidelity --checkpoint F --problem P [--dt 1e-4 --grid 101] --out DIR
//   cdpinn export-problem --problem P --out FILE
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cdpinn
