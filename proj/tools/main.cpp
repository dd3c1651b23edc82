#include <CLI11.hpp>
#include <iostream>

#include "coxbayes/error.hpp"
#include "coxbayes/run.hpp"

using namespace coxbayes;

namespace {

int print_violations(const std::vector<ConfigViolation>& violations) {
  for (const auto& v : violations) std::cerr << "config error at " << (v.path.empty() ? "/" : v.path) << ": " << v.message << '\n';
  return violations.empty() ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian intensity estimation for covariate-driven Cox processes"};
  app.require_subcommand(1);

  std::string config_path;
  RunOptions opts;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = "out";

  auto* run_cmd = app.add_subcommand("run", "run the command named in a config file");
  run_cmd->add_option("--config", config_path, "JSON config file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the config seed");
  auto* threads_opt = run_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out, "output root directory");
  run_cmd->add_flag("--check", opts.check, "fail with exit code 3 when a check does not hold");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "validate a config file without running it");
  validate_cmd->add_option("--config", validate_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate_cmd) {
      const auto violations = validate_config(read_config(validate_path));
      if (violations.empty()) std::cout << "ok\n";
      return print_violations(violations);
    }
    const Json config = read_config(config_path);
    const auto violations = validate_config(config);
    if (!violations.empty()) return print_violations(violations);
    if (*seed_opt) opts.seed = seed;
    if (*threads_opt) opts.threads = threads;
    opts.out = out;
    const RunOutcome outcome = run(config, opts);
    for (const auto& m : outcome.messages) std::cout << m << '\n';
    std::cout << outcome.summary.dump(2) << '\n' << "wrote " << outcome.dir.string() << '\n';
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
