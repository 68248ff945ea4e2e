#pragma once

#include <iosfwd>

namespace p2s::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Entry point behind the p2s binary. Subcommands: toydata, preprocess,
/// pretrain, train, sample, render, eval, gradcheck. Returns kExitUsage on
/// bad flags (with usage on `err`) and kExitRuntime on any other failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace p2s::cli
