#include "uplift/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "uplift/dataset.hpp"
#include "uplift/estimators.hpp"
#include "uplift/evaluation.hpp"
#include "uplift/transforms.hpp"

namespace uplift {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const char* where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return key == k;
        }) == allowed.end()) {
      throw std::runtime_error(std::string("config: unknown key '") + key +
                               "' in " + where);
    }
  }
}

void parse_campaign(const json& j, CampaignConfig& c, bool& seed_set) {
  reject_unknown_keys(j, "campaign",
                      {"n", "propensity", "control_conversion_rate",
                       "n_uplift_features", "n_informative_features",
                       "n_irrelevant_features", "revenue_feature_indices",
                       "noise_std_ratio", "discount", "uplift_strength",
                       "seed"});
  bool revenue_set = j.contains("revenue_feature_indices");
  if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
  if (j.contains("propensity")) c.propensity = j.at("propensity").get<double>();
  if (j.contains("control_conversion_rate"))
    c.control_conversion_rate = j.at("control_conversion_rate").get<double>();
  if (j.contains("n_uplift_features"))
    c.n_uplift_features = j.at("n_uplift_features").get<int>();
  if (j.contains("n_informative_features"))
    c.n_informative_features = j.at("n_informative_features").get<int>();
  if (j.contains("n_irrelevant_features"))
    c.n_irrelevant_features = j.at("n_irrelevant_features").get<int>();
  if (revenue_set) {
    c.revenue_feature_indices =
        j.at("revenue_feature_indices").get<std::vector<int>>();
  } else if (j.contains("n_uplift_features")) {
    // Keep the documented default shape: first uplift + first informative.
    c.revenue_feature_indices = {0, c.n_uplift_features};
  }
  if (j.contains("noise_std_ratio"))
    c.noise_std_ratio = j.at("noise_std_ratio").get<double>();
  if (j.contains("discount")) c.discount = j.at("discount").get<double>();
  if (j.contains("uplift_strength"))
    c.uplift_strength = j.at("uplift_strength").get<double>();
  if (j.contains("seed")) {
    c.seed = j.at("seed").get<std::uint64_t>();
    seed_set = true;
  }
}

void parse_gbm(const json& j, GbmConfig& g, bool& seed_set) {
  reject_unknown_keys(j, "gbm",
                      {"max_iterations", "learning_rate", "max_depth",
                       "min_samples_leaf", "validation_fraction", "patience",
                       "tol", "seed"});
  if (j.contains("max_iterations"))
    g.max_iterations = j.at("max_iterations").get<int>();
  if (j.contains("learning_rate"))
    g.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("max_depth")) g.max_depth = j.at("max_depth").get<int>();
  if (j.contains("min_samples_leaf"))
    g.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  if (j.contains("validation_fraction"))
    g.validation_fraction = j.at("validation_fraction").get<double>();
  if (j.contains("patience")) g.patience = j.at("patience").get<int>();
  if (j.contains("tol")) g.tol = j.at("tol").get<double>();
  if (j.contains("seed")) {
    g.seed = j.at("seed").get<std::uint64_t>();
    seed_set = true;
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  RunConfig config;
  bool campaign_seed_set = false;
  bool gbm_seed_set = false;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("cannot open config file: " + path);
    }
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw std::runtime_error("config parse error in " + path + ": " +
                               e.what());
    }
    reject_unknown_keys(j, "config root",
                        {"campaign", "gbm", "methods", "folds", "holdout",
                         "seed"});
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("campaign"))
      parse_campaign(j.at("campaign"), config.campaign, campaign_seed_set);
    if (j.contains("gbm")) parse_gbm(j.at("gbm"), config.gbm, gbm_seed_set);
    if (j.contains("methods"))
      config.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("folds")) config.folds = j.at("folds").get<int>();
    if (j.contains("holdout"))
      config.holdout = j.at("holdout").get<double>();
  }
  if (!campaign_seed_set) config.campaign.seed = config.seed;
  if (!gbm_seed_set) config.gbm.seed = config.seed;
  return config;
}

std::string to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["campaign"] = {
      {"n", c.campaign.n},
      {"propensity", c.campaign.propensity},
      {"control_conversion_rate", c.campaign.control_conversion_rate},
      {"n_uplift_features", c.campaign.n_uplift_features},
      {"n_informative_features", c.campaign.n_informative_features},
      {"n_irrelevant_features", c.campaign.n_irrelevant_features},
      {"revenue_feature_indices", c.campaign.revenue_feature_indices},
      {"noise_std_ratio", c.campaign.noise_std_ratio},
      {"discount", c.campaign.discount},
      {"uplift_strength", c.campaign.uplift_strength},
      {"seed", c.campaign.seed}};
  j["gbm"] = {{"max_iterations", c.gbm.max_iterations},
              {"learning_rate", c.gbm.learning_rate},
              {"max_depth", c.gbm.max_depth},
              {"min_samples_leaf", c.gbm.min_samples_leaf},
              {"validation_fraction", c.gbm.validation_fraction},
              {"patience", c.gbm.patience},
              {"tol", c.gbm.tol},
              {"seed", c.gbm.seed}};
  j["methods"] = c.methods;
  j["folds"] = c.folds;
  if (c.holdout.has_value()) j["holdout"] = *c.holdout;
  return j.dump(2) + "\n";
}

namespace {

// Writes through a temp file and renames, so failures never leave a
// partial target behind.
template <typename WriteFn>
void write_atomically(const std::filesystem::path& path, WriteFn&& write) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  try {
    write(tmp);
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open file for writing: " + path.string());
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

UpliftDataset load_validated(const std::string& data_path,
                             std::optional<double> default_propensity) {
  UpliftDataset dataset = load_csv(data_path, default_propensity);
  const std::vector<Violation> violations = validate(dataset);
  if (!violations.empty()) {
    std::fprintf(stderr, "%s: %zu validation violation(s)\n",
                 data_path.c_str(), violations.size());
    for (const Violation& v : violations) {
      std::fprintf(stderr, "  %s\n", to_string(v).c_str());
    }
    throw std::runtime_error("dataset failed validation");
  }
  return dataset;
}

}  // namespace

int cmd_gen(const GenOptions& options) {
  RunConfig config;
  try {
    config = load_run_config(options.config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  if (options.seed.has_value()) {
    config.seed = *options.seed;
    config.campaign.seed = *options.seed;
    config.gbm.seed = *options.seed;
  }
  try {
    check(config.campaign);
    auto [dataset, truth] = generate_campaign(config.campaign);
    write_atomically(options.out_path, [&](const std::filesystem::path& tmp) {
      save_csv(dataset, tmp);
    });
    if (!options.truth_path.empty()) {
      write_atomically(options.truth_path,
                       [&](const std::filesystem::path& tmp) {
                         save_truth_csv(truth, tmp);
                       });
    }
    if (dataset.size() == 0) {
      std::fprintf(stderr, "warning: n = 0, wrote a header-only file\n");
      return kExitOk;
    }
    std::size_t arm_n[2] = {0, 0};
    std::size_t arm_conv[2] = {0, 0};
    for (const UpliftRow& r : dataset.rows()) {
      const int arm = r.treatment == 1 ? 1 : 0;
      ++arm_n[arm];
      arm_conv[arm] += r.conversion == 1 ? 1 : 0;
    }
    std::printf("wrote %zu rows to %s\n", dataset.size(),
                options.out_path.c_str());
    for (int arm : {0, 1}) {
      const double rate =
          arm_n[arm] > 0 ? static_cast<double>(arm_conv[arm]) /
                               static_cast<double>(arm_n[arm])
                         : 0.0;
      std::printf("  %s arm: %zu rows, conversion rate %.4f\n",
                  arm == 0 ? "control" : "treated", arm_n[arm], rate);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}

int cmd_bench(const BenchOptions& options) {
  RunConfig config;
  try {
    config = load_run_config(options.config_path);
    if (options.seed.has_value()) {
      config.seed = *options.seed;
      config.campaign.seed = *options.seed;
      config.gbm.seed = *options.seed;
    }
    if (!options.methods_override.empty()) {
      config.methods = options.methods_override;
    }
    if (options.folds_override.has_value()) {
      config.folds = *options.folds_override;
      config.holdout.reset();
    }
    if (options.holdout_override.has_value()) {
      config.holdout = *options.holdout_override;
    }
    for (const std::string& m : config.methods) {
      if (m != "random" && m != "oracle" && !is_known_method(m)) {
        throw std::runtime_error("unknown method '" + m + "'");
      }
    }
    if (std::find(config.methods.begin(), config.methods.end(), "oracle") !=
            config.methods.end() &&
        options.truth_path.empty()) {
      throw std::runtime_error(
          "method 'oracle' requires --truth with a ground-truth CSV");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  UpliftDataset dataset;
  GroundTruth truth;
  bool has_truth = false;
  try {
    dataset = load_validated(options.data_path, options.default_propensity);
    if (!options.truth_path.empty()) {
      truth = load_truth_csv(options.truth_path);
      if (truth.size() != dataset.size()) {
        throw std::runtime_error(
            "ground truth row count does not match dataset");
      }
      has_truth = true;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDataInvalid;
  }

  try {
    BenchReport report =
        config.holdout.has_value()
            ? run_holdout(dataset, config.methods, *config.holdout,
                          config.seed, config.gbm,
                          has_truth ? &truth : nullptr)
            : run_benchmark(dataset, config.methods, config.folds, config.seed,
                            config.gbm, has_truth ? &truth : nullptr);
    report.config_echo = to_json(config);

    write_atomically(options.out_path, [&](const std::filesystem::path& tmp) {
      write_text_file(tmp, to_json_string(report));
    });
    if (!options.curves_path.empty()) {
      write_curves_csv(report, options.curves_path);
    }

    double ipc_mean_seconds = 0.0;
    for (const MethodBench& m : report.methods) {
      if (m.method == "ipc") ipc_mean_seconds = m.mean_seconds();
    }
    std::printf("%-12s %12s %12s %12s %14s\n", "method", "mean qini",
                "std qini", "seconds", "rel. runtime");
    std::size_t succeeded = 0;
    for (const MethodBench& m : report.methods) {
      std::size_t ok = 0;
      for (const FoldResult& f : m.folds) ok += f.failed ? 0 : 1;
      if (ok == 0) {
        std::printf("%-12s %12s %12s %12s %14s  (all folds failed: %s)\n",
                    m.method.c_str(), "-", "-", "-", "-",
                    m.folds.front().error.c_str());
        continue;
      }
      ++succeeded;
      if (ipc_mean_seconds > 0.0) {
        std::printf("%-12s %12.4f %12.4f %12.3f %13.1fx\n", m.method.c_str(),
                    m.mean_qini(), m.std_qini(), m.mean_seconds(),
                    m.mean_seconds() / ipc_mean_seconds);
      } else {
        std::printf("%-12s %12.4f %12.4f %12.3f %14s\n", m.method.c_str(),
                    m.mean_qini(), m.std_qini(), m.mean_seconds(), "-");
      }
    }
    if (succeeded == 0) {
      std::fprintf(stderr, "error: every method failed on every fold\n");
      return kExitAllMethodsFailed;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}

int cmd_transform(const TransformOptions& options) {
  if (options.method != "ipc" && options.method != "crvtw" &&
      options.method != "rdt") {
    std::fprintf(stderr,
                 "error: unknown transform '%s' (expected ipc, crvtw, rdt)\n",
                 options.method.c_str());
    return kExitUsage;
  }
  UpliftDataset dataset;
  try {
    dataset = load_validated(options.data_path, options.default_propensity);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDataInvalid;
  }
  try {
    TransformedSet transformed;
    if (options.method == "ipc") {
      transformed = ipc_transform(dataset);
    } else if (options.method == "crvtw") {
      transformed = crvtw_transform(dataset);
    } else {
      transformed = rdt_targets(dataset);
    }
    write_atomically(options.out_path, [&](const std::filesystem::path& tmp) {
      std::ofstream out(tmp);
      if (!out) {
        throw std::runtime_error("cannot open file for writing: " +
                                 tmp.string());
      }
      for (std::size_t j = 0; j < transformed.features.cols; ++j) {
        out << "feature_" << j << ",";
      }
      out << "z,source_row_index\n";
      std::string buf;
      for (std::size_t i = 0; i < transformed.targets.size(); ++i) {
        buf.clear();
        for (double f : transformed.features.row(i)) {
          char num[64];
          auto res = std::to_chars(num, num + sizeof(num), f);
          buf.append(num, res.ptr);
          buf += ',';
        }
        char num[64];
        auto res =
            std::to_chars(num, num + sizeof(num), transformed.targets[i]);
        buf.append(num, res.ptr);
        buf += ',';
        buf += std::to_string(transformed.source_row_index[i]);
        buf += '\n';
        out << buf;
      }
      if (!out) {
        throw std::runtime_error("write failed: " + tmp.string());
      }
    });
    if (transformed.targets.empty()) {
      std::fprintf(stderr, "warning: transform produced 0 rows\n");
    }
    std::printf("wrote %zu transformed rows to %s\n",
                transformed.targets.size(), options.out_path.c_str());
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDataInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}

}  // namespace uplift
