#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace psmooth::cli {

enum Exit { kOk = 0, kConfig = 1, kNoContraction = 2, kInclusion = 3, kDominance = 4, kInvariant = 5 };

struct Options {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool quiet = false;
  std::string policy = "all";  // simulate: all, greedy, open_loop, constant:<index>
};

int cmd_solve(const Options& opt);
int cmd_lambda(const Options& opt);
int cmd_simulate(const Options& opt);
int cmd_check(const Options& opt);

}  // namespace psmooth::cli
