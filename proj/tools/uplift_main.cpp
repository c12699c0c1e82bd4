// Command-line front end: gen / bench / transform subcommands.

#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "uplift/cli.hpp"

namespace {

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* cap = std::getenv("UPLIFT_THREADS")) {
    const int n = std::atoi(cap);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"Profit uplift modeling benchmark: synthetic coupon-campaign "
               "generation, response transformations, and profit-Qini "
               "evaluation"};
  app.require_subcommand(1);

  uplift::GenOptions gen;
  std::uint64_t seed_value = 0;
  CLI::App* gen_cmd = app.add_subcommand(
      "gen", "Generate a synthetic discount-coupon campaign dataset");
  gen_cmd->add_option("--config", gen.config_path,
                      "JSON run configuration file");
  CLI::Option* gen_seed = gen_cmd->add_option(
      "--seed", seed_value, "Override every seed in the configuration");
  gen_cmd->add_option("--out", gen.out_path, "Output dataset CSV")
      ->required();
  gen_cmd->add_option("--truth", gen.truth_path,
                      "Also write the per-row ground-truth CSV here");

  uplift::BenchOptions bench;
  std::string methods_csv;
  double propensity_default = 0.0;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Cross-validated profit-Qini benchmark of uplift methods");
  bench_cmd->add_option("--data", bench.data_path, "Input dataset CSV")
      ->required();
  bench_cmd->add_option("--config", bench.config_path,
                        "JSON run configuration file");
  bench_cmd->add_option("--truth", bench.truth_path,
                        "Ground-truth CSV (enables the oracle method)");
  bench_cmd->add_option("--methods", methods_csv,
                        "Comma-separated method list (overrides config)");
  CLI::Option* bench_folds =
      bench_cmd->add_option("--folds", "Number of cross-validation folds");
  CLI::Option* bench_holdout = bench_cmd->add_option(
      "--holdout", "Single split with this test fraction, e.g. 0.3");
  bench_folds->excludes(bench_holdout);
  CLI::Option* bench_seed = bench_cmd->add_option(
      "--seed", seed_value, "Override every seed in the configuration");
  CLI::Option* bench_prop = bench_cmd->add_option(
      "--propensity", propensity_default,
      "Default propensity for CSVs without a propensity column");
  bench_cmd->add_option("--out", bench.out_path, "Output report JSON")
      ->required();
  bench_cmd->add_option("--curves", bench.curves_path,
                        "Write Qini curve CSVs with this path stem");

  uplift::TransformOptions transform;
  CLI::App* transform_cmd = app.add_subcommand(
      "transform", "Write a response-transformed training set as CSV");
  transform_cmd->add_option("--data", transform.data_path, "Input dataset CSV")
      ->required();
  transform_cmd
      ->add_option("--method", transform.method,
                   "Transformation: ipc, crvtw, or rdt")
      ->required();
  transform_cmd->add_option("--out", transform.out_path, "Output CSV")
      ->required();
  CLI::Option* transform_prop = transform_cmd->add_option(
      "--propensity", propensity_default,
      "Default propensity for CSVs without a propensity column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : uplift::kExitUsage;
  }

  if (gen_cmd->parsed()) {
    if (!gen_seed->empty()) gen.seed = seed_value;
    return uplift::cmd_gen(gen);
  }
  if (bench_cmd->parsed()) {
    if (!bench_seed->empty()) bench.seed = seed_value;
    if (!bench_folds->empty()) bench.folds_override = bench_folds->as<int>();
    if (!bench_holdout->empty())
      bench.holdout_override = bench_holdout->as<double>();
    if (!bench_prop->empty()) bench.default_propensity = propensity_default;
    if (!methods_csv.empty()) {
      std::string name;
      for (char c : methods_csv) {
        if (c == ',') {
          if (!name.empty()) bench.methods_override.push_back(name);
          name.clear();
        } else {
          name += c;
        }
      }
      if (!name.empty()) bench.methods_override.push_back(name);
    }
    return uplift::cmd_bench(bench);
  }
  if (!transform_prop->empty())
    transform.default_propensity = propensity_default;
  return uplift::cmd_transform(transform);
}
