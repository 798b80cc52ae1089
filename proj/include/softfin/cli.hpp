#pragma once

// the `softfin` command line: collect, train-surrogate, train-rl, evaluate,
// compare, plot, and pipeline (all of them in order), all driven by one
// master seed, an optional key = value config file, and an output directory.
// exposed as a function so tests can drive the exact binary entry point
// in-process.

namespace softfin {

// exit code 0 on success, 1 on runtime failure (one-line diagnostic on
// stderr), 2 on unknown flags/subcommands (usage text on stderr)
int cli_main(int argc, const char* const* argv);

}  // namespace softfin
