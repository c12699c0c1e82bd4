#ifndef UPLIFT_ESTIMATORS_HPP
#define UPLIFT_ESTIMATORS_HPP

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "uplift/dataset.hpp"
#include "uplift/gbm.hpp"
#include "uplift/matrix.hpp"

namespace uplift {

// A fitted targeting model. Scores are pure, deterministic, and thread-safe;
// higher score means "treat earlier".
class Scorer {
 public:
  virtual ~Scorer() = default;

  // Throws std::invalid_argument if features.cols != feature_count().
  std::vector<double> score(const Matrix& features) const;

  const std::string& method() const { return method_; }
  std::size_t feature_count() const { return feature_count_; }

 protected:
  Scorer(std::string method, std::size_t feature_count)
      : method_(std::move(method)), feature_count_(feature_count) {}

 private:
  virtual std::vector<double> score_impl(const Matrix& features) const = 0;

  std::string method_;
  std::size_t feature_count_;
};

// Free-function form of Scorer::score.
std::vector<double> score(const Scorer& scorer, const Matrix& features);

enum class RetroMode { simplified, full };
enum class MetaKind { S, T, X };

// One regression on the transformed converted rows; the score is the
// estimated incremental profit per conversion, in currency units.
// Requires >= 10 converted rows.
std::unique_ptr<Scorer> fit_ipc(const UpliftDataset& dataset,
                                const GbmConfig& config);

// Fits S(x) = Pr(T=1 | x, C=1) on converted rows (least squares on the
// treatment label, predictions clipped to [prob_clip, 1-prob_clip]).
// simplified: score = S(x). full: score = (2S-1) / ((1-S)*pi0 - S*pi1)
// with pi_t the mean converted profit per arm; denominators with magnitude
// below 1e-9 are floored at +/-1e-9 preserving sign. Requires >= 10
// converted rows and conversions in both arms.
std::unique_ptr<Scorer> fit_retrospective(const UpliftDataset& dataset,
                                          const GbmConfig& config,
                                          RetroMode mode = RetroMode::simplified,
                                          double prob_clip = 0.001);

// One regression on the all-rows transformation (non-converted rows keep
// target 0). Requires >= 10 rows.
std::unique_ptr<Scorer> fit_crvtw(const UpliftDataset& dataset,
                                  const GbmConfig& config);

// Binary class transformation; score = 2*clip(prediction) - 1.
// Requires >= 10 rows and constant 0.5 propensity.
std::unique_ptr<Scorer> fit_rdt(const UpliftDataset& dataset,
                                const GbmConfig& config,
                                double prob_clip = 0.001);

// Meta-learners on profit over all rows. S: one model on features plus a
// treatment column, score = f(x,1) - f(x,0). T: per-arm models, score =
// f1(x) - f0(x). X: T stage, then models on the imputed effects, combined
// with the mean training propensity. Requires >= 10 rows per arm.
std::unique_ptr<Scorer> fit_meta(const UpliftDataset& dataset,
                                 const GbmConfig& config, MetaKind kind);

// CLI roster: ipc, retro, retro-full, crvtw, rdt, slearner, tlearner,
// xlearner.
const std::vector<std::string>& method_names();
bool is_known_method(std::string_view name);
std::unique_ptr<Scorer> fit_method(std::string_view name,
                                   const UpliftDataset& dataset,
                                   const GbmConfig& config);

}  // namespace uplift

#endif  // UPLIFT_ESTIMATORS_HPP
