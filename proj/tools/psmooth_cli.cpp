#include <CLI11.hpp>
#include <omp.h>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace psmooth::cli;
  CLI::App app{"Partial-smoothing HJB solver"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration")->required();
    sub->add_option("--out-dir", opt.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "base seed for random streams");
    sub->add_option("--threads", opt.threads, "OpenMP thread cap (0 keeps the default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", opt.quiet, "suppress progress output");
  };
  CLI::App* solve = app.add_subcommand("solve", "Picard solve of the HJB equation");
  CLI::App* lambda = app.add_subcommand("lambda", "blow-up profile of the smoothing operator");
  CLI::App* simulate = app.add_subcommand("simulate", "policy costs and value dominance");
  CLI::App* check = app.add_subcommand("check", "invariant suite at reduced sizes");
  for (CLI::App* s : {solve, lambda, simulate, check}) add_common(s);
  simulate->add_option("--policy", opt.policy, "all, greedy, open_loop or constant:<index>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  for (CLI::App* s : {solve, lambda, simulate, check})
    if (s->count("--seed")) opt.seed = seed;
  if (opt.threads > 0) omp_set_num_threads(opt.threads);

  if (*solve) return cmd_solve(opt);
  if (*lambda) return cmd_lambda(opt);
  if (*simulate) return cmd_simulate(opt);
  return cmd_check(opt);
}
