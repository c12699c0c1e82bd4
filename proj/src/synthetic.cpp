#include "uplift/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "uplift/rng.hpp"

namespace uplift {

void check(const CampaignConfig& c) {
  if (!(c.propensity > 0.0 && c.propensity < 1.0))
    throw std::invalid_argument("CampaignConfig: propensity must be in (0,1)");
  if (!(c.control_conversion_rate > 0.0 && c.control_conversion_rate < 1.0))
    throw std::invalid_argument(
        "CampaignConfig: control_conversion_rate must be in (0,1)");
  if (c.n_uplift_features < 0 || c.n_informative_features < 0 ||
      c.n_irrelevant_features < 0)
    throw std::invalid_argument("CampaignConfig: feature counts must be >= 0");
  if (!(c.discount >= 0.0 && c.discount < 1.0))
    throw std::invalid_argument("CampaignConfig: discount must be in [0,1)");
  if (!(c.uplift_strength >= 0.0))
    throw std::invalid_argument("CampaignConfig: uplift_strength must be >= 0");
  if (!(c.noise_std_ratio >= 0.0))
    throw std::invalid_argument("CampaignConfig: noise_std_ratio must be >= 0");
  const int informative_end = c.n_uplift_features + c.n_informative_features;
  std::set<int> seen;
  for (int idx : c.revenue_feature_indices) {
    if (idx < 0 || idx >= informative_end)
      throw std::invalid_argument(
          "CampaignConfig: revenue feature index " + std::to_string(idx) +
          " must name an uplift or informative feature (0.." +
          std::to_string(informative_end - 1) + ")");
    if (!seen.insert(idx).second)
      throw std::invalid_argument(
          "CampaignConfig: duplicate revenue feature index " +
          std::to_string(idx));
  }
}

namespace {

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// E[logistic(b0 + tau*Z)], Z standard normal, by composite Simpson over
// [-12, 12] standard deviations.
double marginal_rate(double b0, double tau) {
  if (tau == 0.0) return logistic(b0);
  constexpr int kIntervals = 4000;  // even
  constexpr double kSpan = 12.0;
  const double h = 2.0 * kSpan / kIntervals;
  const double inv_norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double z = -kSpan + h * i;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * logistic(b0 + tau * z) * inv_norm * std::exp(-0.5 * z * z);
  }
  return acc * h / 3.0;
}

// Stream layout for row-level draws: one stream per feature, then
// treatment, conversion, and revenue noise.
struct Streams {
  std::uint64_t treatment;
  std::uint64_t conversion;
  std::uint64_t noise;
};

Streams streams_for(int feature_count) {
  const std::uint64_t p = static_cast<std::uint64_t>(feature_count);
  return Streams{p, p + 1, p + 2};
}

}  // namespace

double solve_intercept(const CampaignConfig& config) {
  check(config);
  const double tau = std::sqrt(static_cast<double>(
      config.n_uplift_features + config.n_informative_features));
  const double target = config.control_conversion_rate;
  double lo = -30.0, hi = 30.0;
  const double rate_lo = marginal_rate(lo, tau);
  const double rate_hi = marginal_rate(hi, tau);
  if (!(rate_lo <= target && target <= rate_hi)) {
    std::ostringstream msg;
    msg << "solve_intercept: target rate " << target
        << " not bracketed on [-30, 30]; achievable range is [" << rate_lo
        << ", " << rate_hi << "]";
    throw std::runtime_error(msg.str());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (marginal_rate(mid, tau) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-13) break;
  }
  return 0.5 * (lo + hi);
}

std::pair<UpliftDataset, GroundTruth> generate_campaign(
    const CampaignConfig& config, std::optional<std::uint64_t> seed_override) {
  check(config);
  const std::uint64_t seed = seed_override.value_or(config.seed);
  const double b0 = solve_intercept(config);
  const int p = config.feature_count();
  const Streams streams = streams_for(p);
  const int uplift_end = config.n_uplift_features;
  const int informative_end = uplift_end + config.n_informative_features;
  const double noise_var = config.noise_std_ratio * config.noise_std_ratio;

  std::vector<UpliftRow> rows(config.n);
  GroundTruth truth;
  truth.p_control.resize(config.n);
  truth.p_treated.resize(config.n);
  truth.expected_revenue.resize(config.n);
  truth.cate_profit.resize(config.n);
  truth.ipc.resize(config.n);

#pragma omp parallel for schedule(static) if (config.n > 4096)
  for (std::size_t i = 0; i < config.n; ++i) {
    UpliftRow& r = rows[i];
    r.features.resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
      r.features[static_cast<std::size_t>(j)] =
          rng::normal(seed, i, static_cast<std::uint64_t>(j));
    }
    double informative_sum = 0.0;
    double uplift_sum = 0.0;
    for (int j = 0; j < informative_end; ++j) {
      informative_sum += r.features[static_cast<std::size_t>(j)];
      if (j < uplift_end) uplift_sum += r.features[static_cast<std::size_t>(j)];
    }
    double revenue_sum = 0.0;
    for (int j : config.revenue_feature_indices) {
      revenue_sum += r.features[static_cast<std::size_t>(j)];
    }

    r.treatment =
        rng::uniform01(seed, i, streams.treatment) < config.propensity ? 1 : 0;
    r.propensity = config.propensity;

    const double p0 = logistic(b0 + informative_sum);
    const double p1 = logistic(b0 + informative_sum +
                               config.uplift_strength * uplift_sum);
    const double p_conv = r.treatment == 1 ? p1 : p0;
    r.conversion = rng::uniform01(seed, i, streams.conversion) < p_conv ? 1 : 0;

    r.profit = 0.0;
    if (r.conversion == 1) {
      const double eps =
          config.noise_std_ratio * rng::normal(seed, i, streams.noise);
      const double revenue = std::exp(revenue_sum + eps);
      r.profit =
          r.treatment == 1 ? revenue * (1.0 - config.discount) : revenue;
    }

    const double expected_revenue = std::exp(revenue_sum + 0.5 * noise_var);
    const double p_conversion =
        config.propensity * p1 + (1.0 - config.propensity) * p0;
    truth.p_control[i] = p0;
    truth.p_treated[i] = p1;
    truth.expected_revenue[i] = expected_revenue;
    truth.cate_profit[i] =
        expected_revenue * (p1 * (1.0 - config.discount) - p0);
    truth.ipc[i] = truth.cate_profit[i] / p_conversion;
  }

  return {UpliftDataset(std::move(rows), static_cast<std::size_t>(p)),
          std::move(truth)};
}

std::vector<double> oracle_scores(const GroundTruth& truth, OracleKind kind) {
  return kind == OracleKind::profit_cate ? truth.cate_profit : truth.ipc;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_cell(const std::string& cell, std::size_t row,
                  const char* column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw std::runtime_error("truth csv row " + std::to_string(row) +
                             ", column " + column + ": malformed cell '" +
                             cell + "'");
  }
  return v;
}

}  // namespace

void save_truth_csv(const GroundTruth& truth,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open file for writing: " + path.string());
  }
  out << "p_conversion_control,p_conversion_treated,expected_revenue,"
         "cate_profit,ipc\n";
  std::string buf;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    buf.clear();
    append_number(buf, truth.p_control[i]);
    buf += ',';
    append_number(buf, truth.p_treated[i]);
    buf += ',';
    append_number(buf, truth.expected_revenue[i]);
    buf += ',';
    append_number(buf, truth.cate_profit[i]);
    buf += ',';
    append_number(buf, truth.ipc[i]);
    buf += '\n';
    out << buf;
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

GroundTruth load_truth_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("missing header row in " + path.string());
  }
  GroundTruth truth;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) {
      throw std::runtime_error("truth csv row " + std::to_string(row) +
                               ": expected 5 cells, got " +
                               std::to_string(cells.size()));
    }
    truth.p_control.push_back(parse_cell(cells[0], row, "p_conversion_control"));
    truth.p_treated.push_back(parse_cell(cells[1], row, "p_conversion_treated"));
    truth.expected_revenue.push_back(
        parse_cell(cells[2], row, "expected_revenue"));
    truth.cate_profit.push_back(parse_cell(cells[3], row, "cate_profit"));
    truth.ipc.push_back(parse_cell(cells[4], row, "ipc"));
  }
  return truth;
}

}  // namespace uplift
