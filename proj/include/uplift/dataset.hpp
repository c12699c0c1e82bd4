#ifndef UPLIFT_DATASET_HPP
#define UPLIFT_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uplift/matrix.hpp"

namespace uplift {

// One experiment unit of a randomized campaign.
//
// Invariants (checked by validate(), not by construction):
//   - treatment and conversion are exactly 0 or 1
//   - conversion == 0 implies profit == 0 (response-dependent costs)
//   - 0 < propensity < 1, where propensity = Pr(T=1 | x)
struct UpliftRow {
  std::vector<double> features;
  int treatment = 0;
  int conversion = 0;
  double profit = 0.0;      // revenue - cost, currency units
  double propensity = 0.5;  // Pr(T=1 | x)
};

// Immutable ordered collection of rows with a fixed feature width.
// Safe to read from multiple threads concurrently.
class UpliftDataset {
 public:
  UpliftDataset() = default;
  // Throws std::invalid_argument if any row's feature width differs from
  // feature_count.
  UpliftDataset(std::vector<UpliftRow> rows, std::size_t feature_count);

  std::size_t size() const { return rows_.size(); }
  std::size_t feature_count() const { return feature_count_; }
  const UpliftRow& row(std::size_t i) const { return rows_[i]; }
  const std::vector<UpliftRow>& rows() const { return rows_; }

 private:
  std::vector<UpliftRow> rows_;
  std::size_t feature_count_ = 0;
};

// A broken row invariant. `row` is the 0-based dataset position.
struct Violation {
  std::size_t row = 0;
  std::string rule;
};

// "row <i>: <rule>"
std::string to_string(const Violation& v);

// Empty result iff every UpliftRow invariant holds.
std::vector<Violation> validate(const UpliftDataset& dataset);

// Rows with conversion == 1, original relative order preserved.
UpliftDataset converted_subset(const UpliftDataset& dataset);

// Rows at the given positions, in the given order.
UpliftDataset subset(const UpliftDataset& dataset,
                     const std::vector<std::size_t>& indices);

// k-fold assignment stratified on (treatment x conversion): within each
// stratum the fold sizes differ by at most one.
struct FoldAssignment {
  std::vector<int> fold_of_row;
  int k = 0;
  std::uint64_t seed = 0;
};

// Deterministic in (row strata, k, seed). Throws std::invalid_argument if
// k < 2 or any non-empty stratum has fewer than k rows.
FoldAssignment make_folds(const UpliftDataset& dataset, int k,
                          std::uint64_t seed);

// Single train/test split, stratified like make_folds.
struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument if test_fraction is outside (0, 1) or a
// non-empty stratum has fewer than 2 rows.
HoldoutSplit make_holdout(const UpliftDataset& dataset, double test_fraction,
                          std::uint64_t seed);

// Column views (copies).
Matrix feature_matrix(const UpliftDataset& dataset);
std::vector<int> treatments(const UpliftDataset& dataset);
std::vector<double> profits(const UpliftDataset& dataset);
std::vector<double> propensities(const UpliftDataset& dataset);

// CSV schema: header feature_0..feature_{p-1},treatment,conversion,profit,
// propensity. The propensity column may be absent, in which case
// default_propensity is required. Numeric cells use '.'-separated decimal
// text written at shortest round-trip precision, so save/load is bit-exact.
//
// load_csv errors (std::runtime_error): missing file, malformed numeric
// cell (named by 1-based data row and column), inconsistent cell count,
// missing propensity column with no default supplied.
UpliftDataset load_csv(const std::filesystem::path& path,
                       std::optional<double> default_propensity = {});
void save_csv(const UpliftDataset& dataset,
              const std::filesystem::path& path);

// Position-sensitive 64-bit FNV-1a over all row payloads, as 16 hex digits.
std::string fingerprint(const UpliftDataset& dataset);

}  // namespace uplift

#endif  // UPLIFT_DATASET_HPP
