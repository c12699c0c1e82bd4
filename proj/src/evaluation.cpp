#include "uplift/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "uplift/estimators.hpp"
#include "uplift/rng.hpp"

namespace uplift {

QiniCurve qini_curve(const std::vector<double>& scores,
                     const std::vector<int>& treatment,
                     const std::vector<double>& profit) {
  const std::size_t n = scores.size();
  if (treatment.size() != n || profit.size() != n) {
    throw std::invalid_argument("qini_curve: input lengths differ");
  }
  if (n < 2) {
    throw std::invalid_argument("qini_curve: needs at least 2 rows");
  }
  std::size_t n_treated = 0;
  for (int t : treatment) n_treated += t == 1 ? 1 : 0;
  const std::size_t n_control = n - n_treated;
  if (n_treated == 0 || n_control == 0) {
    throw std::invalid_argument(
        "qini_curve: both treatment arms must be present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scores[a] > scores[b];  // ties keep input order
  });

  const double arm_ratio =
      static_cast<double>(n_treated) / static_cast<double>(n_control);
  const std::size_t stride = n > 10000 ? (n + 999) / 1000 : 1;

  QiniCurve curve;
  curve.n_test = n;
  curve.points.push_back({0.0, 0.0, 0.0});

  double treated_sum = 0.0;
  double control_sum = 0.0;
  double prev_v = 0.0;
  double area = 0.0;
  const double step = 1.0 / static_cast<double>(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t r = order[k - 1];
    if (treatment[r] == 1) {
      treated_sum += profit[r];
    } else {
      control_sum += profit[r];
    }
    const double v = treated_sum - arm_ratio * control_sum;
    area += step * 0.5 * (prev_v + v);
    prev_v = v;
    if (k % stride == 0 || k == n) {
      curve.points.push_back(
          {static_cast<double>(k) / static_cast<double>(n), v, v});
    }
  }
  curve.endpoint_value = prev_v;
  curve.area = area;
  curve.degenerate_endpoint = curve.endpoint_value == 0.0;
  if (!curve.degenerate_endpoint) {
    const double scale = std::abs(curve.endpoint_value);
    for (QiniPoint& pt : curve.points) pt.normalized = pt.value / scale;
  }
  return curve;
}

double qini_coefficient(const QiniCurve& curve) {
  const double above_chord = curve.area - 0.5 * curve.endpoint_value;
  if (curve.degenerate_endpoint) return above_chord;
  return above_chord / std::abs(curve.endpoint_value);
}

double MethodBench::mean_qini() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const FoldResult& f : folds) {
    if (!f.failed) {
      sum += f.qini;
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

double MethodBench::std_qini() const {
  const double mean = mean_qini();
  double sum = 0.0;
  std::size_t n = 0;
  for (const FoldResult& f : folds) {
    if (!f.failed) {
      sum += (f.qini - mean) * (f.qini - mean);
      ++n;
    }
  }
  return n > 1 ? std::sqrt(sum / static_cast<double>(n - 1)) : 0.0;
}

double MethodBench::mean_seconds() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const FoldResult& f : folds) {
    if (!f.failed) {
      sum += f.seconds;
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

namespace {

constexpr std::uint64_t kRandomScorerStream = 0x72616e646f6dULL;  // "random"

std::vector<std::string> effective_methods(
    const std::vector<std::string>& methods, bool has_truth) {
  if (methods.empty()) {
    throw std::invalid_argument("run_benchmark: method list is empty");
  }
  std::vector<std::string> out;
  for (const std::string& m : methods) {
    if (m != "random" && m != "oracle" && !is_known_method(m)) {
      throw std::invalid_argument("unknown method '" + m + "'");
    }
    if (m == "oracle" && !has_truth) {
      throw std::invalid_argument(
          "method 'oracle' requires ground truth to be supplied");
    }
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (std::find(out.begin(), out.end(), "random") == out.end()) {
    out.emplace_back("random");
  }
  if (has_truth &&
      std::find(out.begin(), out.end(), "oracle") == out.end()) {
    out.emplace_back("oracle");
  }
  return out;
}

struct FoldData {
  UpliftDataset train;
  Matrix test_features;
  std::vector<int> test_treatment;
  std::vector<double> test_profit;
  std::vector<std::size_t> test_rows;  // positions in the full dataset
};

FoldData build_fold(const UpliftDataset& dataset,
                    const std::vector<std::size_t>& train_rows,
                    const std::vector<std::size_t>& test_rows) {
  FoldData fold;
  fold.train = subset(dataset, train_rows);
  fold.test_rows = test_rows;
  fold.test_features = Matrix(test_rows.size(), dataset.feature_count());
  fold.test_treatment.resize(test_rows.size());
  fold.test_profit.resize(test_rows.size());
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    const UpliftRow& r = dataset.row(test_rows[i]);
    std::copy(r.features.begin(), r.features.end(),
              fold.test_features.row(i).begin());
    fold.test_treatment[i] = r.treatment;
    fold.test_profit[i] = r.profit;
  }
  return fold;
}

BenchReport run_on_folds(const UpliftDataset& dataset,
                         const std::vector<std::string>& methods,
                         const std::vector<FoldData>& fold_data,
                         std::uint64_t seed, const GbmConfig& config,
                         const GroundTruth* truth) {
  if (truth != nullptr && truth->size() != dataset.size()) {
    throw std::invalid_argument(
        "run_benchmark: ground truth row count does not match dataset");
  }
  const std::vector<std::string> roster =
      effective_methods(methods, truth != nullptr);

  BenchReport report;
  report.folds = static_cast<int>(fold_data.size());
  report.seed = seed;
  report.gbm = config;
  report.dataset_fingerprint = fingerprint(dataset);
  report.n_rows = dataset.size();
  report.n_features = dataset.feature_count();
#ifdef _OPENMP
  report.parallelism = omp_get_max_threads();
#else
  report.parallelism = 1;
#endif

  for (const std::string& name : roster) {
    MethodBench bench;
    bench.method = name;
    for (std::size_t f = 0; f < fold_data.size(); ++f) {
      const FoldData& fold = fold_data[f];
      FoldResult result;
      QiniCurve curve;
      try {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> scores;
        if (name == "random") {
          scores.resize(fold.test_rows.size());
          for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] = rng::uniform01(seed ^ kRandomScorerStream, f, i);
          }
        } else if (name == "oracle") {
          scores.resize(fold.test_rows.size());
          for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] = truth->ipc[fold.test_rows[i]];
          }
        } else {
          const std::unique_ptr<Scorer> scorer =
              fit_method(name, fold.train, config);
          scores = scorer->score(fold.test_features);
        }
        const auto t1 = std::chrono::steady_clock::now();
        result.seconds = std::chrono::duration<double>(t1 - t0).count();
        curve = qini_curve(scores, fold.test_treatment, fold.test_profit);
        result.qini = qini_coefficient(curve);
      } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
        curve = QiniCurve{};
      }
      bench.folds.push_back(std::move(result));
      bench.curves.push_back(std::move(curve));
    }
    report.methods.push_back(std::move(bench));
  }
  return report;
}

}  // namespace

BenchReport run_benchmark(const UpliftDataset& dataset,
                          const std::vector<std::string>& methods, int k,
                          std::uint64_t seed, const GbmConfig& config,
                          const GroundTruth* truth) {
  const FoldAssignment folds = make_folds(dataset, k, seed);
  std::vector<FoldData> fold_data;
  fold_data.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (folds.fold_of_row[i] == f ? test_rows : train_rows).push_back(i);
    }
    fold_data.push_back(build_fold(dataset, train_rows, test_rows));
  }
  BenchReport report =
      run_on_folds(dataset, methods, fold_data, seed, config, truth);
  report.split_mode = "kfold";
  return report;
}

BenchReport run_holdout(const UpliftDataset& dataset,
                        const std::vector<std::string>& methods,
                        double test_fraction, std::uint64_t seed,
                        const GbmConfig& config, const GroundTruth* truth) {
  const HoldoutSplit split = make_holdout(dataset, test_fraction, seed);
  std::vector<FoldData> fold_data;
  fold_data.push_back(build_fold(dataset, split.train, split.test));
  BenchReport report =
      run_on_folds(dataset, methods, fold_data, seed, config, truth);
  report.split_mode = "holdout";
  report.holdout_fraction = test_fraction;
  return report;
}

std::string to_json_string(const BenchReport& report) {
  nlohmann::json j;
  j["schema"] = "uplift-bench-report-v1";
  j["dataset"] = {{"rows", report.n_rows},
                  {"features", report.n_features},
                  {"fingerprint", report.dataset_fingerprint}};
  nlohmann::json split = {{"mode", report.split_mode},
                          {"folds", report.folds},
                          {"seed", report.seed}};
  if (report.split_mode == "holdout") {
    split["holdout_fraction"] = report.holdout_fraction;
  }
  j["split"] = split;
  j["gbm"] = {{"max_iterations", report.gbm.max_iterations},
              {"learning_rate", report.gbm.learning_rate},
              {"max_depth", report.gbm.max_depth},
              {"min_samples_leaf", report.gbm.min_samples_leaf},
              {"validation_fraction", report.gbm.validation_fraction},
              {"patience", report.gbm.patience},
              {"tol", report.gbm.tol},
              {"seed", report.gbm.seed}};
  j["parallelism"] = report.parallelism;
  if (!report.config_echo.empty()) {
    j["config"] = nlohmann::json::parse(report.config_echo);
  }
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodBench& m : report.methods) {
    nlohmann::json folds = nlohmann::json::array();
    for (const FoldResult& f : m.folds) {
      nlohmann::json fold = {{"qini", f.qini}, {"seconds", f.seconds}};
      if (f.failed) {
        fold["failed"] = true;
        fold["error"] = f.error;
      }
      folds.push_back(fold);
    }
    methods.push_back({{"method", m.method},
                       {"folds", folds},
                       {"mean_qini", m.mean_qini()},
                       {"std_qini", m.std_qini()},
                       {"mean_seconds", m.mean_seconds()}});
  }
  j["methods"] = methods;
  return j.dump(2) + "\n";
}

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::vector<std::filesystem::path> write_curves_csv(
    const BenchReport& report, const std::filesystem::path& path) {
  std::vector<std::filesystem::path> written;
  for (int f = 0; f < report.folds; ++f) {
    std::filesystem::path target = path;
    if (report.folds > 1) {
      std::filesystem::path stem = path.stem();
      stem += ".fold" + std::to_string(f);
      stem += path.extension();
      target = path.parent_path() / stem;
    }
    std::ofstream out(target);
    if (!out) {
      throw std::runtime_error("cannot open file for writing: " +
                               target.string());
    }
    out << "method,fraction,v,v_normalized\n";
    std::string buf;
    for (const MethodBench& m : report.methods) {
      const QiniCurve& curve = m.curves[static_cast<std::size_t>(f)];
      for (const QiniPoint& pt : curve.points) {
        buf.clear();
        buf += m.method;
        buf += ',';
        append_number(buf, pt.fraction);
        buf += ',';
        append_number(buf, pt.value);
        buf += ',';
        append_number(buf, pt.normalized);
        buf += '\n';
        out << buf;
      }
    }
    if (!out) {
      throw std::runtime_error("write failed: " + target.string());
    }
    written.push_back(target);
  }
  return written;
}

}  // namespace uplift
