#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uscx {

/** Version string recorded in every run manifest. */
inline constexpr const char* kCliVersion = "0.1.0";

/**
 * Runs one uscx subcommand end to end: parses flags, loads the optional
 * JSON config (flags override config values), executes the experiment,
 * writes the result artifacts plus a manifest.json into the output
 * directory, and prints the primary report to `out`.
 *
 * Subcommands: simulate, capacity, maxstab-check, sklar, gallery, gevfit,
 * hypoconv.  Common flags: --config PATH, --seed U64, --n SAMPLES,
 * --out DIR, --threads N, --format {csv,json}.  When neither flag nor
 * config supplies a seed, the USCX_SEED environment variable is used, then
 * 0; the seed in effect is always recorded in the manifest.
 *
 * Exit codes: 0 success; 2 validation error (flags, config, input files);
 * 3 a statistical or convergence check failed (some |z| reached the
 * threshold, or a fail verdict); 4 internal error.
 *
 * `args` holds the arguments in natural order without the program name,
 * e.g. {"capacity", "--model", "constant_one", "--probe-level", "2.0"}.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

/** argv form used by the uscx binary; argv[0] is the program name. */
int run_cli(int argc, const char* const* argv);

}  // namespace uscx
