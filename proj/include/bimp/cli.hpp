#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace bimp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitHashMismatch = 4;

struct CliOptions {
  std::string config_path;
  std::string out_dir;  // --out; else config output_dir; else $BIMP_OUT_DIR; else "out"
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<int> level;
  std::string policy_path;       // simulate / evaluate; default <out>/policy.bin
  std::string field_path;        // policy / evaluate / check
  std::string certificate_path;  // check
};

/// Each command writes its artifacts under the output directory, prints a
/// short summary to `out` and returns a process exit code.
int run_solve(const CliOptions& options, std::ostream& out, std::ostream& err);
int run_policy(const CliOptions& options, std::ostream& out, std::ostream& err);
int run_simulate(const CliOptions& options, std::ostream& out, std::ostream& err);
int run_evaluate(const CliOptions& options, std::ostream& out, std::ostream& err);
int run_check(const CliOptions& options, std::ostream& out, std::ostream& err);
int run_oracle_compare(const CliOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to the commands above.
int cli_main(int argc, char** argv);

}  // namespace bimp
