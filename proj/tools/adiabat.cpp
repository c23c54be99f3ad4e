#include <iostream>

#include <CLI11.hpp>

#include "adiabatic/cli.hpp"
#include "adiabatic/types.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical matrix NLS: adiabatic decoupling experiments"};
  adiabatic::CliOptions opt;
  std::string eps_list, sizes;
  app.add_option("command", opt.command, "decompose | single | converge | superpose | identities | bench")
      ->required()
      ->check(CLI::IsMember(adiabatic::cli_commands()));
  app.add_option("--config", opt.config_path, "JSON experiment config");
  app.add_option("--out", opt.out_dir, "output directory (default: the config's \"output\")");
  app.add_option("--epsilon-override", eps_list, "comma-separated epsilon list");
  app.add_option("--threads", opt.threads, "worker threads / parallel epsilon jobs");
  app.add_option("--sizes", sizes, "bench grid sizes, comma-separated powers of two");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (!eps_list.empty()) opt.epsilon_override = adiabatic::parse_number_list(eps_list);
    if (!sizes.empty()) {
      opt.bench_sizes.clear();
      for (double s : adiabatic::parse_number_list(sizes)) {
        opt.bench_sizes.push_back(static_cast<std::size_t>(s));
      }
    }
  } catch (const adiabatic::ConfigError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  }
  return adiabatic::run_command(opt, std::cerr);
}
