#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

namespace cli = dsample::cli;

int main(int argc, char** argv) {
  CLI::App app{"Distinct-count sketches over distributed bit streams"};
  app.require_subcommand(1);

  cli::GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a random bit stream with P(bit = 1) = gamma");
  gen_cmd->add_option("--n", gen.n, "Stream length in bits")->required();
  gen_cmd->add_option("--gamma", gen.gamma, "Probability of a 1 bit, in (0, 1)");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output file (MSB-first packed bits)")->required();

  cli::RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Estimate the union size of k stream files");
  run_cmd->add_option("--engine", run.engines, "scan, skip, or both")->delimiter(',');
  run_cmd->add_option("--streams", run.streams, "Comma-separated stream files")->delimiter(',')->required();
  run_cmd->add_option("--bits", run.bits, "Stream length in bits (default: sidecar or whole file)");
  run_cmd->add_option("--epsilon", run.epsilon, "Relative error target");
  run_cmd->add_option("--delta", run.delta, "Failure probability");
  run_cmd->add_option("--seed", run.seed, "Master seed for the hash ensemble");
  run_cmd->add_option("--capacity", run.capacity, "Override the per-sketch capacity");
  run_cmd->add_option("--threads", run.threads, "Worker threads (0 = hardware)");
  run_cmd->add_option("--csv", run.csv, "Append CSV rows to this file instead of stdout");

  cli::VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check next-hit against brute force");
  verify_cmd->add_option("--cases", verify.cases, "Random cases on top of the exhaustive sweep");
  verify_cmd->add_option("--pmax", verify.pmax, "Largest modulus for random cases");
  verify_cmd->add_option("--seed", verify.seed, "Seed for random cases");

  cli::BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Sweep sizes and epsilons on generated streams");
  bench_cmd->add_option("--sizes", bench.sizes, "Stream lengths")->delimiter(',');
  bench_cmd->add_option("--gamma", bench.gamma, "Probability of a 1 bit");
  bench_cmd->add_option("--epsilons", bench.epsilons, "Relative error targets")->delimiter(',');
  bench_cmd->add_option("--delta", bench.delta, "Failure probability");
  bench_cmd->add_option("--k", bench.k, "Number of streams");
  bench_cmd->add_option("--trials", bench.trials, "Trials per configuration");
  bench_cmd->add_option("--engines", bench.engines, "scan, skip, or both")->delimiter(',');
  bench_cmd->add_option("--seed", bench.seed, "Base seed");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = hardware)");
  bench_cmd->add_option("--csv", bench.csv, "Append CSV rows to this file instead of stdout");

  cli::SketchOptions sketch;
  auto* sketch_cmd = app.add_subcommand("sketch", "Sketch one stream file and write it in wire format");
  sketch_cmd->add_option("--stream", sketch.stream, "Stream file")->required();
  sketch_cmd->add_option("--bits", sketch.bits, "Stream length in bits");
  sketch_cmd->add_option("--n-bound", sketch.n_bound, "Shared upper bound on stream length");
  sketch_cmd->add_option("--engine", sketch.engine, "scan or skip");
  sketch_cmd->add_option("--epsilon", sketch.epsilon, "Relative error target");
  sketch_cmd->add_option("--seed", sketch.seed, "Shared master seed");
  sketch_cmd->add_option("--instance", sketch.instance, "Instance index within the ensemble");
  sketch_cmd->add_option("--capacity", sketch.capacity, "Override the sketch capacity");
  sketch_cmd->add_option("--out", sketch.out, "Output sketch file")->required();

  std::vector<std::filesystem::path> merge_files;
  auto* merge_cmd = app.add_subcommand("merge", "Merge sketch files that share a hash");
  merge_cmd->add_option("files", merge_files, "Sketch files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  if (*gen_cmd) return cli::cmd_gen(gen, std::cerr);
  if (*run_cmd) return cli::cmd_run(run, std::cout, std::cerr);
  if (*verify_cmd) return cli::cmd_verify(verify, std::cout, std::cerr);
  if (*bench_cmd) return cli::cmd_bench(bench, std::cout, std::cerr);
  if (*sketch_cmd) return cli::cmd_sketch(sketch, std::cerr);
  if (*merge_cmd) return cli::cmd_merge(merge_files, std::cout, std::cerr);
  return cli::kExitUsage;
}
