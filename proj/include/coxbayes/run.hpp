#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coxbayes/config.hpp"

namespace coxbayes {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitCheckFailed = 3, kExitRuntime = 4 };

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::filesystem::path out = "out";
  bool check = false;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path dir;
  std::vector<std::string> messages;  // check results and notes
  Json summary;
};

/// Executes one configured command, writing artifacts under <out>/run-<hash>/.
/// Throws ConfigError for invalid configs and Error for runtime failures.
RunOutcome run(const Json& config, const RunOptions& options);

/// Reads and parses a config file; a missing, empty or malformed file is a ConfigError.
Json read_config(const std::filesystem::path& path);

}  // namespace coxbayes
