/**
 * @file commands.h
 * @brief Subcommands of the scoregraph CLI, callable in-process.
 *
 * Exit codes: 0 success, 1 internal error, 2 user or input error.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace scoregraph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUser = 2;

struct BuildArgs {
  std::filesystem::path input;
  std::string format = "notes-json";  // or "midi"
  std::filesystem::path out;
  bool metrical = false;
  bool inverse = false;
  unsigned jobs = 0;  // 0 = hardware concurrency
};

struct SampleArgs {
  std::filesystem::path graphs;
  std::int64_t batch_size = 300;
  std::int64_t target_size = 300;
  std::vector<std::int64_t> fanouts{3, 3, 3};
  std::uint64_t seed = 0;
  std::uint64_t num_batches = 1;
  std::filesystem::path out;
  bool metrical = false;
  unsigned workers = 1;
};

struct StatsArgs {
  std::filesystem::path graphs;
};

struct BenchArgs {
  std::int64_t notes = 5000;
  std::int64_t repeat = 3;
  std::uint64_t seed = 0;
};

int cmd_build(const BuildArgs& args, std::ostream& out, std::ostream& err);
int cmd_sample(const SampleArgs& args, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err);

/// Parses a fan-out list such as "3,3,3"; "all" or "-1" means unbounded.
std::vector<std::int64_t> parse_fanouts(const std::string& text);

/// Full command line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scoregraph::cli
