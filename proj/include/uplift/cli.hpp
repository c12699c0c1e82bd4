#ifndef UPLIFT_CLI_HPP
#define UPLIFT_CLI_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uplift/gbm.hpp"
#include "uplift/synthetic.hpp"

namespace uplift {

// Exit status convention shared by all commands:
//   0 success, 1 usage/config error, 2 data-validation error,
//   3 runtime failure of all methods.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataInvalid = 2;
inline constexpr int kExitAllMethodsFailed = 3;

// Full experiment definition. Loading a config file materializes every
// default, so the echo embedded in reports is sufficient to rerun.
struct RunConfig {
  CampaignConfig campaign;
  GbmConfig gbm;
  std::vector<std::string> methods = {"ipc",  "retro",    "retro-full",
                                      "crvtw", "rdt",      "slearner",
                                      "tlearner", "xlearner"};
  int folds = 5;
  std::optional<double> holdout;  // set: single split of this test fraction
  std::uint64_t seed = 42;
};

// Parses a JSON config file; absent keys keep defaults, unknown keys are
// errors. An absent per-section seed inherits the top-level seed. An empty
// path yields the defaults. Throws std::runtime_error on parse errors.
RunConfig load_run_config(const std::string& path);

// JSON text with all defaults materialized.
std::string to_json(const RunConfig& config);

struct GenOptions {
  std::string config_path;              // optional
  std::optional<std::uint64_t> seed;    // overrides every config seed
  std::string out_path;                 // dataset CSV (required)
  std::string truth_path;               // optional ground-truth CSV
};
int cmd_gen(const GenOptions& options);

struct BenchOptions {
  std::string data_path;  // required
  std::string config_path;
  std::string truth_path;                       // enables the oracle method
  std::vector<std::string> methods_override;    // replaces config methods
  std::optional<int> folds_override;
  std::optional<double> holdout_override;
  std::optional<std::uint64_t> seed;
  std::optional<double> default_propensity;  // for CSVs without the column
  std::string out_path;                      // report JSON (required)
  std::string curves_path;                   // optional curve CSV stem
};
int cmd_bench(const BenchOptions& options);

struct TransformOptions {
  std::string data_path;
  std::string method;  // ipc | crvtw | rdt
  std::string out_path;
  std::optional<double> default_propensity;
};
int cmd_transform(const TransformOptions& options);

}  // namespace uplift

#endif  // UPLIFT_CLI_HPP
