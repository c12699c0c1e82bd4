#include "uplift/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "uplift/transforms.hpp"

namespace uplift {

std::vector<double> Scorer::score(const Matrix& features) const {
  if (features.cols != feature_count_) {
    throw std::invalid_argument(
        "Scorer::score: feature width " + std::to_string(features.cols) +
        " does not match fit width " + std::to_string(feature_count_));
  }
  return score_impl(features);
}

std::vector<double> score(const Scorer& scorer, const Matrix& features) {
  return scorer.score(features);
}

namespace {

double clip(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

class SingleModelScorer final : public Scorer {
 public:
  SingleModelScorer(std::string method, GbmModel model)
      : Scorer(std::move(method), model.feature_count()),
        model_(std::move(model)) {}

 private:
  std::vector<double> score_impl(const Matrix& features) const override {
    return model_.predict(features);
  }

  GbmModel model_;
};

class RetroScorer final : public Scorer {
 public:
  RetroScorer(GbmModel s_model, RetroMode mode, double pi0, double pi1,
              double prob_clip)
      : Scorer(mode == RetroMode::full ? "retro-full" : "retro",
               s_model.feature_count()),
        s_model_(std::move(s_model)), mode_(mode), pi0_(pi0), pi1_(pi1),
        prob_clip_(prob_clip) {}

 private:
  std::vector<double> score_impl(const Matrix& features) const override {
    std::vector<double> out = s_model_.predict(features);
    for (double& v : out) {
      const double s = clip(v, prob_clip_, 1.0 - prob_clip_);
      if (mode_ == RetroMode::simplified) {
        v = s;
      } else {
        double denom = (1.0 - s) * pi0_ - s * pi1_;
        if (std::abs(denom) < 1e-9) {
          denom = denom < 0.0 ? -1e-9 : 1e-9;
        }
        v = (2.0 * s - 1.0) / denom;
      }
    }
    return out;
  }

  GbmModel s_model_;
  RetroMode mode_;
  double pi0_;
  double pi1_;
  double prob_clip_;
};

class RdtScorer final : public Scorer {
 public:
  RdtScorer(GbmModel model, double prob_clip)
      : Scorer("rdt", model.feature_count()), model_(std::move(model)),
        prob_clip_(prob_clip) {}

 private:
  std::vector<double> score_impl(const Matrix& features) const override {
    std::vector<double> out = model_.predict(features);
    for (double& v : out) {
      v = 2.0 * clip(v, prob_clip_, 1.0 - prob_clip_) - 1.0;
    }
    return out;
  }

  GbmModel model_;
  double prob_clip_;
};

class SLearnerScorer final : public Scorer {
 public:
  explicit SLearnerScorer(GbmModel model)
      : Scorer("slearner", model.feature_count() - 1),
        model_(std::move(model)) {}

 private:
  std::vector<double> score_impl(const Matrix& features) const override {
    Matrix augmented(features.rows, features.cols + 1);
    for (std::size_t i = 0; i < features.rows; ++i) {
      auto src = features.row(i);
      std::copy(src.begin(), src.end(), augmented.row(i).begin());
      augmented.at(i, features.cols) = 1.0;
    }
    std::vector<double> treated = model_.predict(augmented);
    for (std::size_t i = 0; i < features.rows; ++i) {
      augmented.at(i, features.cols) = 0.0;
    }
    const std::vector<double> control = model_.predict(augmented);
    for (std::size_t i = 0; i < treated.size(); ++i) treated[i] -= control[i];
    return treated;
  }

  GbmModel model_;
};

class TLearnerScorer final : public Scorer {
 public:
  TLearnerScorer(GbmModel treated, GbmModel control)
      : Scorer("tlearner", treated.feature_count()),
        treated_(std::move(treated)), control_(std::move(control)) {}

 private:
  std::vector<double> score_impl(const Matrix& features) const override {
    std::vector<double> out = treated_.predict(features);
    const std::vector<double> base = control_.predict(features);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= base[i];
    return out;
  }

  GbmModel treated_;
  GbmModel control_;
};

class XLearnerScorer final : public Scorer {
 public:
  XLearnerScorer(GbmModel g_treated, GbmModel g_control, double propensity)
      : Scorer("xlearner", g_treated.feature_count()),
        g_treated_(std::move(g_treated)), g_control_(std::move(g_control)),
        propensity_(propensity) {}

 private:
  std::vector<double> score_impl(const Matrix& features) const override {
    std::vector<double> from_treated = g_treated_.predict(features);
    const std::vector<double> from_control = g_control_.predict(features);
    for (std::size_t i = 0; i < from_treated.size(); ++i) {
      from_treated[i] = propensity_ * from_control[i] +
                        (1.0 - propensity_) * from_treated[i];
    }
    return from_treated;
  }

  GbmModel g_treated_;  // fit on imputed effects of treated rows
  GbmModel g_control_;  // fit on imputed effects of control rows
  double propensity_;   // mean training propensity e
};

// Features and profits of the rows in one treatment arm.
std::pair<Matrix, std::vector<double>> arm_outcomes(
    const UpliftDataset& dataset, int arm) {
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.row(i).treatment == arm) indices.push_back(i);
  }
  Matrix features(indices.size(), dataset.feature_count());
  std::vector<double> profit(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const UpliftRow& r = dataset.row(indices[i]);
    std::copy(r.features.begin(), r.features.end(),
              features.row(i).begin());
    profit[i] = r.profit;
  }
  return {std::move(features), std::move(profit)};
}

}  // namespace

std::unique_ptr<Scorer> fit_ipc(const UpliftDataset& dataset,
                                const GbmConfig& config) {
  TransformedSet t = ipc_transform(dataset);
  if (t.targets.size() < 10) {
    throw std::invalid_argument("fit_ipc: needs >= 10 converted rows, got " +
                                std::to_string(t.targets.size()));
  }
  return std::make_unique<SingleModelScorer>(
      "ipc", fit_gbm(t.features, t.targets, config));
}

std::unique_ptr<Scorer> fit_retrospective(const UpliftDataset& dataset,
                                          const GbmConfig& config,
                                          RetroMode mode, double prob_clip) {
  // Reads conversion = 1 rows only.
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.row(i).conversion == 1) indices.push_back(i);
  }
  if (indices.size() < 10) {
    throw std::invalid_argument(
        "fit_retrospective: needs >= 10 converted rows, got " +
        std::to_string(indices.size()));
  }
  Matrix features(indices.size(), dataset.feature_count());
  std::vector<double> label(indices.size());
  double sum_profit[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const UpliftRow& r = dataset.row(indices[i]);
    std::copy(r.features.begin(), r.features.end(), features.row(i).begin());
    const int arm = r.treatment == 1 ? 1 : 0;
    label[i] = static_cast<double>(arm);
    sum_profit[arm] += r.profit;
    ++count[arm];
  }
  if (count[0] == 0 || count[1] == 0) {
    throw std::invalid_argument(
        "fit_retrospective: a treatment arm has no conversions");
  }
  const double pi0 = sum_profit[0] / static_cast<double>(count[0]);
  const double pi1 = sum_profit[1] / static_cast<double>(count[1]);
  return std::make_unique<RetroScorer>(fit_gbm(features, label, config), mode,
                                       pi0, pi1, prob_clip);
}

std::unique_ptr<Scorer> fit_crvtw(const UpliftDataset& dataset,
                                  const GbmConfig& config) {
  if (dataset.size() < 10) {
    throw std::invalid_argument("fit_crvtw: needs >= 10 rows, got " +
                                std::to_string(dataset.size()));
  }
  TransformedSet t = crvtw_transform(dataset);
  return std::make_unique<SingleModelScorer>(
      "crvtw", fit_gbm(t.features, t.targets, config));
}

std::unique_ptr<Scorer> fit_rdt(const UpliftDataset& dataset,
                                const GbmConfig& config, double prob_clip) {
  if (dataset.size() < 10) {
    throw std::invalid_argument("fit_rdt: needs >= 10 rows, got " +
                                std::to_string(dataset.size()));
  }
  TransformedSet t = rdt_targets(dataset);
  return std::make_unique<RdtScorer>(fit_gbm(t.features, t.targets, config),
                                     prob_clip);
}

std::unique_ptr<Scorer> fit_meta(const UpliftDataset& dataset,
                                 const GbmConfig& config, MetaKind kind) {
  const std::size_t p = dataset.feature_count();
  std::size_t arm_count[2] = {0, 0};
  for (const UpliftRow& r : dataset.rows()) {
    ++arm_count[r.treatment == 1 ? 1 : 0];
  }
  for (int arm : {0, 1}) {
    if (arm_count[arm] < 10) {
      throw std::invalid_argument(
          "fit_meta: treatment arm " + std::to_string(arm) + " has " +
          std::to_string(arm_count[arm]) + " rows, needs >= 10");
    }
  }

  if (kind == MetaKind::S) {
    Matrix augmented(dataset.size(), p + 1);
    std::vector<double> profit(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const UpliftRow& r = dataset.row(i);
      std::copy(r.features.begin(), r.features.end(),
                augmented.row(i).begin());
      augmented.at(i, p) = static_cast<double>(r.treatment);
      profit[i] = r.profit;
    }
    return std::make_unique<SLearnerScorer>(
        fit_gbm(augmented, profit, config));
  }

  auto [x1, y1] = arm_outcomes(dataset, 1);
  auto [x0, y0] = arm_outcomes(dataset, 0);
  GbmModel f1 = fit_gbm(x1, y1, config);
  GbmModel f0 = fit_gbm(x0, y0, config);
  if (kind == MetaKind::T) {
    return std::make_unique<TLearnerScorer>(std::move(f1), std::move(f0));
  }

  // X-learner: impute per-arm effects from the opposite arm's model.
  std::vector<double> d1 = f0.predict(x1);
  for (std::size_t i = 0; i < d1.size(); ++i) d1[i] = y1[i] - d1[i];
  std::vector<double> d0 = f1.predict(x0);
  for (std::size_t i = 0; i < d0.size(); ++i) d0[i] -= y0[i];
  GbmModel g1 = fit_gbm(x1, d1, config);
  GbmModel g0 = fit_gbm(x0, d0, config);
  double e = 0.0;
  for (const UpliftRow& r : dataset.rows()) e += r.propensity;
  e /= static_cast<double>(dataset.size());
  return std::make_unique<XLearnerScorer>(std::move(g1), std::move(g0), e);
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "ipc",      "retro",    "retro-full", "crvtw",
      "rdt",      "slearner", "tlearner",   "xlearner"};
  return names;
}

bool is_known_method(std::string_view name) {
  const auto& names = method_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::unique_ptr<Scorer> fit_method(std::string_view name,
                                   const UpliftDataset& dataset,
                                   const GbmConfig& config) {
  if (name == "ipc") return fit_ipc(dataset, config);
  if (name == "retro")
    return fit_retrospective(dataset, config, RetroMode::simplified);
  if (name == "retro-full")
    return fit_retrospective(dataset, config, RetroMode::full);
  if (name == "crvtw") return fit_crvtw(dataset, config);
  if (name == "rdt") return fit_rdt(dataset, config);
  if (name == "slearner") return fit_meta(dataset, config, MetaKind::S);
  if (name == "tlearner") return fit_meta(dataset, config, MetaKind::T);
  if (name == "xlearner") return fit_meta(dataset, config, MetaKind::X);
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

}  // namespace uplift
