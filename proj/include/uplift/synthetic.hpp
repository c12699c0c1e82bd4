#ifndef UPLIFT_SYNTHETIC_HPP
#define UPLIFT_SYNTHETIC_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "uplift/dataset.hpp"

namespace uplift {

// Percentage-discount coupon campaign simulator.
//
// Features are independent standard normals ordered
// [uplift | informative | irrelevant]. Treatment is Bernoulli(propensity).
// Conversion is Bernoulli(logistic(b0 + sum(informative) + sum(uplift)
// + t * uplift_strength * sum(uplift))), with b0 calibrated so the marginal
// control conversion rate matches control_conversion_rate. Converted rows
// draw revenue R = exp(sum of the revenue-set features + eps) with
// eps ~ Normal(0, noise_std_ratio); profit is R for control conversions,
// R*(1-discount) for treated conversions, and 0 otherwise.
struct CampaignConfig {
  std::size_t n = 200000;
  double propensity = 0.5;
  double control_conversion_rate = 0.03;
  int n_uplift_features = 3;
  int n_informative_features = 5;
  int n_irrelevant_features = 5;
  // Indices into the feature vector; must name uplift or informative
  // features only. Default: the first uplift and the first informative one.
  std::vector<int> revenue_feature_indices = {0, 3};
  double noise_std_ratio = 0.9;  // revenue noise std, in feature-std units
  double discount = 0.10;        // d in [0, 1)
  double uplift_strength = 0.3;
  std::uint64_t seed = 0;

  int feature_count() const {
    return n_uplift_features + n_informative_features + n_irrelevant_features;
  }
};

// Throws std::invalid_argument on any broken invariant.
void check(const CampaignConfig& config);

// Per-row generating quantities, for oracle scoring and diagnostics.
struct GroundTruth {
  std::vector<double> p_control;         // Pr(C=1 | x, T=0)
  std::vector<double> p_treated;         // Pr(C=1 | x, T=1)
  std::vector<double> expected_revenue;  // E[R | x, C=1]
  std::vector<double> cate_profit;       // E[P|x,T=1] - E[P|x,T=0]
  std::vector<double> ipc;               // cate_profit / Pr(C=1 | x)

  std::size_t size() const { return ipc.size(); }
};

// Solves for the conversion intercept b0 such that the quadrature estimate
// of E[logistic(b0 + sum of informative+uplift features)] equals
// control_conversion_rate within 1e-4, by bisection on [-30, 30]. Throws
// std::runtime_error (reporting the achievable range) if the bracket fails.
double solve_intercept(const CampaignConfig& config);

// Deterministic in (config, seed): per-row random streams are counter-based,
// so generation order and parallelism never change the output.
std::pair<UpliftDataset, GroundTruth> generate_campaign(
    const CampaignConfig& config,
    std::optional<std::uint64_t> seed_override = {});

enum class OracleKind { profit_cate, ipc };

// The requested ground-truth quantity per row, usable as a ceiling scorer.
std::vector<double> oracle_scores(const GroundTruth& truth, OracleKind kind);

// CSV: p_conversion_control,p_conversion_treated,expected_revenue,
// cate_profit,ipc. Numbers at shortest round-trip precision.
void save_truth_csv(const GroundTruth& truth,
                    const std::filesystem::path& path);
GroundTruth load_truth_csv(const std::filesystem::path& path);

}  // namespace uplift

#endif  // UPLIFT_SYNTHETIC_HPP
