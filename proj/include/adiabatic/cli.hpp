#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace adiabatic {

struct CliOptions {
  std::string command;
  std::string config_path;
  std::string out_dir;  // empty: the config's "output"
  std::vector<double> epsilon_override;
  std::size_t threads = 0;  // 0: leave the config's job count
  std::vector<std::size_t> bench_sizes{4096, 8192};
};

inline const std::vector<std::string>& cli_commands() {
  static const std::vector<std::string> c{"decompose", "single",     "converge",
                                          "superpose", "identities", "bench"};
  return c;
}

/// Runs one command and writes its CSV, report.json and plot.gp files.
/// Returns 0 on success, 2 for configuration errors, 3 for numerical
/// invariant failures and 4 for runtime aborts; failures also leave a
/// failure.json record in the output directory.
int run_command(const CliOptions& options, std::ostream& log);

/// Parses "a,b,c" into doubles (ConfigError on junk).
std::vector<double> parse_number_list(const std::string& text);

}  // namespace adiabatic
