#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ikon/pipeline.hpp"

namespace ikon::testing {

using Rng = std::mt19937_64;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path fixture_dir();
std::filesystem::path cli_path();

/// Project config over the toy fixture (lexicon, rules, seeds, 30-document corpus).
pipeline::ProjectConfig toy_config(double threshold = 0.2);

struct CliResult {
  int exit_code = -1;
  std::string out;  // stdout; stderr is discarded
};
/// Runs the ikon executable with `args` (already shell-quoted where needed).
CliResult run_cli(const std::string& args);
/// Single-quotes `s` for /bin/sh.
std::string shell_quote(const std::string& s);

void write_text(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

/// Uniform integer in [lo, hi].
inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

}  // namespace ikon::testing
