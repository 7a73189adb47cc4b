// Benchmark harness for the adaptive rejection Metropolis samplers.
//
//   bench run --config cfg.txt [--runs R] [--n N] [--seed S]
//             [--samplers list] [--procedures list] [--out path]
//   bench dump-proposal --sampler X --procedure Y --at-iteration T
//
// Exit status: 0 on success, 1 when any cell fails, 2 on a config error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "arms/bench.hpp"
#include "arms/errors.hpp"

namespace {

constexpr int kCellFailure = 1;
constexpr int kConfigError = 2;

struct Flags {
  std::string config;
  std::optional<long> runs;
  std::optional<long> n;
  std::optional<long> seed;
  std::optional<std::string> samplers;
  std::optional<std::string> procedures;
  std::optional<std::string> out;
  std::optional<long> workers;
};

arms::bench::ExperimentConfig resolve(const Flags& f) {
  using arms::bench::set_field;
  arms::bench::ExperimentConfig cfg = f.config.empty() ? arms::bench::parse_config("") : arms::bench::load_config(f.config);
  if (f.runs) set_field(cfg, "runs", std::to_string(*f.runs));
  if (f.n) set_field(cfg, "N", std::to_string(*f.n));
  if (f.seed) set_field(cfg, "seed", std::to_string(*f.seed));
  if (f.samplers) set_field(cfg, "samplers", *f.samplers);
  if (f.procedures) set_field(cfg, "procedures", *f.procedures);
  if (f.out) set_field(cfg, "output_path", *f.out);
  if (f.workers) set_field(cfg, "workers", std::to_string(*f.workers));
  arms::bench::validate(cfg);
  return cfg;
}

void print_table(const arms::bench::ExperimentTable& table) {
  std::printf("%-7s %-4s %9s %9s %9s %9s %9s %9s %9s %5s\n", "sampler", "proc", "mean", "std", "corr", "support",
              "rs_rej", "2nd_ctrl", "D", "runs");
  for (const auto& c : table.cells) {
    std::printf("%-7s %-4s %9.4f %9.4f %9.4f %9.2f %9.2f %9.2f %9.4f %5ld%s\n",
                std::string(arms::to_string(c.sampler)).c_str(), std::string(arms::to_string(c.procedure)).c_str(),
                c.est_mean, c.std_est, c.lag1_corr, c.avg_support, c.avg_rs_rej, c.avg_second_ctrl, c.avg_D,
                c.runs_ok, c.failed() ? "  FAILED" : "");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive rejection Metropolis sampling benchmark"};
  app.require_subcommand(1);

  Flags flags;
  auto* run = app.add_subcommand("run", "Run the sampler x procedure experiment matrix");
  run->add_option("--config", flags.config, "key=value config file");
  run->add_option("--runs", flags.runs, "Independent runs per cell");
  run->add_option("--n", flags.n, "Chain length N");
  run->add_option("--seed", flags.seed, "Base seed; run i uses seed + i");
  run->add_option("--samplers", flags.samplers, "Comma-separated list: arms,a2rms,ia2rms,ars");
  run->add_option("--procedures", flags.procedures, "Comma-separated list: p1,p2,p3,p4,s,t");
  run->add_option("--out", flags.out, "Output CSV path");
  run->add_option("--workers", flags.workers, "Worker threads (0 = all cores)");

  std::string dump_sampler = "ia2rms";
  std::string dump_procedure = "p1";
  long dump_iteration = 0;
  std::optional<std::string> dump_out;
  auto* dump = app.add_subcommand("dump-proposal", "Write the proposal of one chain as CSV");
  dump->add_option("--config", flags.config, "key=value config file");
  dump->add_option("--seed", flags.seed, "Seed of the chain");
  dump->add_option("--sampler", dump_sampler, "Sampler kind")->required();
  dump->add_option("--procedure", dump_procedure, "Construction procedure")->required();
  dump->add_option("--at-iteration", dump_iteration, "Chain iteration to stop at")->required();
  dump->add_option("--out", dump_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  arms::bench::ExperimentConfig cfg;
  try {
    if (dump->parsed()) {
      Flags f;
      f.config = flags.config;
      f.seed = flags.seed;
      cfg = resolve(f);
    } else {
      cfg = resolve(flags);
    }
  } catch (const arms::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const arms::Error& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (dump->parsed()) {
      auto sampler = arms::parse_sampler(dump_sampler);
      auto proc = arms::parse_procedure(dump_procedure);
      if (!sampler || !proc) {
        std::cerr << "unknown sampler or procedure\n";
        return kConfigError;
      }
      if (dump_out) {
        std::ofstream out(*dump_out);
        if (!out) {
          std::cerr << "cannot open '" << *dump_out << "'\n";
          return kCellFailure;
        }
        arms::bench::dump_proposal(cfg, *sampler, *proc, dump_iteration, out);
      } else {
        arms::bench::dump_proposal(cfg, *sampler, *proc, dump_iteration, std::cout);
      }
      return 0;
    }

    const auto table = arms::bench::run_experiment(cfg);
    print_table(table);
    for (const auto& c : table.cells) {
      for (const auto& f : c.failures) {
        std::cerr << arms::to_string(c.sampler) << '/' << arms::to_string(c.procedure) << ' ' << f << '\n';
      }
    }
    arms::bench::emit_csv(table, cfg.output_path);
    return table.any_cell_failed() ? kCellFailure : 0;
  } catch (const arms::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCellFailure;
  }
}
