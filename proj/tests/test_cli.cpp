#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "helpers.hpp"
#include "uplift/cli.hpp"
#include "uplift/dataset.hpp"

using namespace uplift;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::size_t count_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

const char* kTable1Csv =
    "feature_0,treatment,conversion,profit,propensity\n"
    "1,0,0,0,0.5\n"
    "1,0,0,0,0.5\n"
    "1,0,1,10,0.5\n"
    "1,1,0,0,0.5\n"
    "1,1,1,8,0.5\n"
    "1,1,1,8,0.5\n";

}  // namespace

TEST_CASE("cmd_gen writes the dataset and reports rates") {
  testutil::TempFile config("gen_config.json");
  config.write(R"({"campaign": {"n": 1000}, "seed": 5})");
  testutil::TempFile out("gen_data.csv");
  testutil::TempFile truth("gen_truth.csv");

  GenOptions options;
  options.config_path = config.str();
  options.out_path = out.str();
  options.truth_path = truth.str();
  CHECK(cmd_gen(options) == kExitOk);
  CHECK(count_lines(out.path()) == 1001);
  CHECK(count_lines(truth.path()) == 1001);

  // Same config and seed give a byte-identical file.
  testutil::TempFile out2("gen_data2.csv");
  GenOptions again = options;
  again.out_path = out2.str();
  again.truth_path.clear();
  CHECK(cmd_gen(again) == kExitOk);
  CHECK(slurp(out.path()) == slurp(out2.path()));

  // Seed override changes it.
  GenOptions reseeded = again;
  reseeded.seed = 6;
  CHECK(cmd_gen(reseeded) == kExitOk);
  CHECK(slurp(out.path()) != slurp(out2.path()));
}

TEST_CASE("cmd_gen with n = 0 writes a header-only file") {
  testutil::TempFile config("gen_zero.json");
  config.write(R"({"campaign": {"n": 0}})");
  testutil::TempFile out("gen_zero.csv");
  GenOptions options;
  options.config_path = config.str();
  options.out_path = out.str();
  CHECK(cmd_gen(options) == kExitOk);
  CHECK(count_lines(out.path()) == 1);
}

TEST_CASE("cmd_gen failures leave no partial file") {
  GenOptions options;
  options.out_path = "/nonexistent_dir/data.csv";
  CHECK(cmd_gen(options) != kExitOk);
  CHECK_FALSE(std::filesystem::exists("/nonexistent_dir/data.csv"));

  testutil::TempFile bad_config("bad.json");
  bad_config.write("{ not json");
  testutil::TempFile out("never.csv");
  GenOptions parse_fail;
  parse_fail.config_path = bad_config.str();
  parse_fail.out_path = out.str();
  CHECK(cmd_gen(parse_fail) == kExitUsage);
  CHECK_FALSE(std::filesystem::exists(out.path()));

  testutil::TempFile unknown_key("unknown.json");
  unknown_key.write(R"({"campaign": {"m": 3}})");
  GenOptions unknown;
  unknown.config_path = unknown_key.str();
  unknown.out_path = out.str();
  CHECK(cmd_gen(unknown) == kExitUsage);
}

TEST_CASE("cmd_transform reproduces the worked example") {
  testutil::TempFile data("t1.csv");
  data.write(kTable1Csv);

  testutil::TempFile out("t1_ipc.csv");
  TransformOptions options;
  options.data_path = data.str();
  options.method = "ipc";
  options.out_path = out.str();
  CHECK(cmd_transform(options) == kExitOk);
  const std::string text = slurp(out.path());
  CHECK(count_lines(out.path()) == 4);  // header + 3 rows
  CHECK(text.find("-20,2") != std::string::npos);
  CHECK(text.find("16,4") != std::string::npos);
  CHECK(text.find("16,5") != std::string::npos);

  options.method = "crvtw";
  CHECK(cmd_transform(options) == kExitOk);
  CHECK(count_lines(out.path()) == 7);

  options.method = "rdt";
  CHECK(cmd_transform(options) == kExitOk);
  CHECK(count_lines(out.path()) == 7);

  options.method = "bogus";
  CHECK(cmd_transform(options) == kExitUsage);
}

TEST_CASE("cmd_transform warns on empty output and validates data") {
  testutil::TempFile data("noconv.csv");
  data.write(
      "feature_0,treatment,conversion,profit,propensity\n"
      "1,0,0,0,0.5\n"
      "1,1,0,0,0.5\n");
  testutil::TempFile out("noconv_z.csv");
  TransformOptions options;
  options.data_path = data.str();
  options.method = "ipc";
  options.out_path = out.str();
  CHECK(cmd_transform(options) == kExitOk);
  CHECK(count_lines(out.path()) == 1);

  testutil::TempFile invalid("invalid.csv");
  invalid.write(
      "feature_0,treatment,conversion,profit,propensity\n"
      "1,0,0,5,0.5\n"
      "1,1,1,2,0.5\n");
  TransformOptions bad;
  bad.data_path = invalid.str();
  bad.method = "ipc";
  bad.out_path = out.str();
  CHECK(cmd_transform(bad) == kExitDataInvalid);
}

TEST_CASE("cmd_bench end to end on a small campaign") {
  testutil::TempFile config("bench_config.json");
  config.write(R"({
    "campaign": {"n": 3000},
    "gbm": {"max_iterations": 12},
    "methods": ["ipc", "tlearner"],
    "folds": 2,
    "seed": 9
  })");
  testutil::TempFile data("bench_data.csv");
  testutil::TempFile truth("bench_truth.csv");
  GenOptions gen;
  gen.config_path = config.str();
  gen.out_path = data.str();
  gen.truth_path = truth.str();
  REQUIRE(cmd_gen(gen) == kExitOk);

  testutil::TempFile report("bench_report.json");
  testutil::TempFile curves("bench_curves.csv");
  BenchOptions bench;
  bench.config_path = config.str();
  bench.data_path = data.str();
  bench.truth_path = truth.str();
  bench.out_path = report.str();
  bench.curves_path = curves.str();
  CHECK(cmd_bench(bench) == kExitOk);

  const nlohmann::json j = nlohmann::json::parse(slurp(report.path()));
  CHECK(j.at("schema") == "uplift-bench-report-v1");
  CHECK(j.at("split").at("mode") == "kfold");
  CHECK(j.at("split").at("folds") == 2);
  REQUIRE(j.at("methods").size() == 4);  // ipc, tlearner, random, oracle
  CHECK(j.at("methods")[0].at("method") == "ipc");
  CHECK(j.at("methods")[0].at("folds").size() == 2);
  CHECK(j.at("config").at("campaign").at("n") == 3000);

  // Per-fold curve files exist.
  std::filesystem::path fold0 = curves.path().parent_path() /
                                (curves.path().stem().string() + ".fold0" +
                                 curves.path().extension().string());
  CHECK(std::filesystem::exists(fold0));
  std::error_code ec;
  std::filesystem::remove(fold0, ec);
  std::filesystem::remove(
      curves.path().parent_path() /
          (curves.path().stem().string() + ".fold1" +
           curves.path().extension().string()),
      ec);

  // Holdout mode produces a single-file curve export.
  BenchOptions holdout = bench;
  holdout.holdout_override = 0.3;
  holdout.truth_path.clear();
  CHECK(cmd_bench(holdout) == kExitOk);
  const nlohmann::json h = nlohmann::json::parse(slurp(report.path()));
  CHECK(h.at("split").at("mode") == "holdout");
  CHECK(h.at("split").at("folds") == 1);
  CHECK(std::filesystem::exists(curves.path()));

  // Unknown methods are named.
  BenchOptions unknown = bench;
  unknown.methods_override = {"nope"};
  CHECK(cmd_bench(unknown) == kExitUsage);

  // Oracle without truth is a usage error.
  BenchOptions no_truth = bench;
  no_truth.truth_path.clear();
  no_truth.methods_override = {"oracle"};
  CHECK(cmd_bench(no_truth) == kExitUsage);
}

TEST_CASE("cmd_bench rejects invalid data with exit 2") {
  testutil::TempFile data("bad_data.csv");
  data.write(
      "feature_0,treatment,conversion,profit,propensity\n"
      "1,0,0,7,0.5\n"
      "1,1,1,2,0.5\n");
  testutil::TempFile report("bad_report.json");
  BenchOptions bench;
  bench.data_path = data.str();
  bench.out_path = report.str();
  CHECK(cmd_bench(bench) == kExitDataInvalid);
}

TEST_CASE("run config defaults, inheritance, and echo") {
  const RunConfig defaults = load_run_config("");
  CHECK(defaults.campaign.n == 200000);
  CHECK(defaults.gbm.max_iterations == 1000);
  CHECK(defaults.folds == 5);
  CHECK(defaults.campaign.seed == defaults.seed);

  testutil::TempFile config("seeds.json");
  config.write(R"({"seed": 77, "gbm": {"seed": 5}})");
  const RunConfig loaded = load_run_config(config.str());
  CHECK(loaded.seed == 77);
  CHECK(loaded.campaign.seed == 77);  // inherited
  CHECK(loaded.gbm.seed == 5);        // explicit

  const std::string echo = to_json(loaded);
  const nlohmann::json j = nlohmann::json::parse(echo);
  CHECK(j.at("campaign").at("seed") == 77);
  CHECK(j.at("gbm").at("seed") == 5);
  CHECK(j.at("campaign").at("revenue_feature_indices") ==
        nlohmann::json({0, 3}));
}
