#ifndef UPLIFT_EVALUATION_HPP
#define UPLIFT_EVALUATION_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uplift/dataset.hpp"
#include "uplift/gbm.hpp"
#include "uplift/synthetic.hpp"

namespace uplift {

struct QiniPoint {
  double fraction = 0.0;    // share of rows targeted, in [0, 1]
  double value = 0.0;       // cumulative adjusted incremental profit V
  double normalized = 0.0;  // V / |V(1)| when V(1) != 0, else V
};

// Profit Qini curve. Rows are ranked by score (descending, stable). With
// N_T and N_C the arm sizes of the whole evaluation set, the value after
// targeting the top k rows is
//   V(k) = sum of treated profits in the top k
//          - (N_T / N_C) * sum of control profits in the top k.
// Points are emitted at every row for n <= 10000, else at every
// ceil(n/1000)-th row, always including the endpoint and a leading (0, 0).
// `area` is the trapezoidal area of the full-resolution curve regardless of
// the point stride.
struct QiniCurve {
  std::vector<QiniPoint> points;
  std::size_t n_test = 0;
  double endpoint_value = 0.0;  // V at fraction 1
  double area = 0.0;            // full-resolution area under V vs fraction
  bool degenerate_endpoint = false;  // V(1) == 0; values left unnormalized
};

// Throws std::invalid_argument on mismatched lengths, fewer than 2 rows, or
// a single-arm input.
QiniCurve qini_curve(const std::vector<double>& scores,
                     const std::vector<int>& treatment,
                     const std::vector<double>& profit);

// Area between the curve and the straight chord from (0,0) to (1, V(1)),
// divided by |V(1)|; returned unnormalized when the curve is flagged
// degenerate (V(1) == 0).
double qini_coefficient(const QiniCurve& curve);

struct FoldResult {
  double qini = 0.0;
  double seconds = 0.0;  // wall-clock fit + score
  bool failed = false;
  std::string error;
};

struct MethodBench {
  std::string method;
  std::vector<FoldResult> folds;
  std::vector<QiniCurve> curves;  // parallel to folds; empty when failed

  double mean_qini() const;
  double std_qini() const;  // sample std over succeeded folds
  double mean_seconds() const;
};

struct BenchReport {
  std::vector<MethodBench> methods;
  std::string split_mode;  // "kfold" or "holdout"
  int folds = 0;
  double holdout_fraction = 0.0;  // meaningful in holdout mode only
  std::uint64_t seed = 0;
  GbmConfig gbm;
  std::string dataset_fingerprint;
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  int parallelism = 1;
  std::string config_echo;  // full resolved run configuration (JSON text)
};

// Cross-validated benchmark: for every fold, fits each method on the
// training rows, scores the held-out rows, and records the Qini coefficient
// and the wall-clock fit+score seconds. A seeded `random` control is always
// recorded, and a ground-truth `oracle` scorer (true IPC) when truth is
// supplied. A method failure is recorded per fold, not fatal. Coefficients
// are deterministic in (dataset, methods, k, seed, config); runtimes are
// not. Throws std::invalid_argument on an empty or unknown method list, or
// if `oracle` is requested without truth.
BenchReport run_benchmark(const UpliftDataset& dataset,
                          const std::vector<std::string>& methods, int k,
                          std::uint64_t seed, const GbmConfig& config,
                          const GroundTruth* truth = nullptr);

// Single stratified train/test split (e.g. 0.3 for a 70%-30% protocol);
// produces a one-fold report.
BenchReport run_holdout(const UpliftDataset& dataset,
                        const std::vector<std::string>& methods,
                        double test_fraction, std::uint64_t seed,
                        const GbmConfig& config,
                        const GroundTruth* truth = nullptr);

// Structured text form of the report (JSON; timing fields are the only
// run-to-run varying content).
std::string to_json_string(const BenchReport& report);

// Curve CSV with columns method,fraction,v,v_normalized. One file per fold:
// the fold index is inserted before the extension when the report has more
// than one fold. Returns the written paths.
std::vector<std::filesystem::path> write_curves_csv(
    const BenchReport& report, const std::filesystem::path& path);

}  // namespace uplift

#endif  // UPLIFT_EVALUATION_HPP
