#ifndef UPLIFT_TESTS_HELPERS_HPP
#define UPLIFT_TESTS_HELPERS_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "uplift/dataset.hpp"

namespace testutil {

// The worked promotion-campaign A/B example: 6 rows, one context feature
// x = 1, propensity 0.5. Control: two non-converters and one conversion
// with profit 10; treated: one non-converter and two conversions with
// profit 8 each.
inline uplift::UpliftDataset table1() {
  std::vector<uplift::UpliftRow> rows = {
      {{1.0}, 0, 0, 0.0, 0.5}, {{1.0}, 0, 0, 0.0, 0.5},
      {{1.0}, 0, 1, 10.0, 0.5}, {{1.0}, 1, 0, 0.0, 0.5},
      {{1.0}, 1, 1, 8.0, 0.5}, {{1.0}, 1, 1, 8.0, 0.5},
  };
  return uplift::UpliftDataset(std::move(rows), 1);
}

inline uplift::UpliftDataset replicate(const uplift::UpliftDataset& dataset,
                                       std::size_t times) {
  std::vector<uplift::UpliftRow> rows;
  rows.reserve(dataset.size() * times);
  for (std::size_t t = 0; t < times; ++t) {
    for (const uplift::UpliftRow& r : dataset.rows()) rows.push_back(r);
  }
  return uplift::UpliftDataset(std::move(rows), dataset.feature_count());
}

// Unique temp file path; removed on destruction.
class TempFile {
 public:
  explicit TempFile(const std::string& name) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("uplift_test_" + std::to_string(++counter) + "_" + name);
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

  void write(const std::string& text) const {
    std::ofstream out(path_);
    out << text;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil

#endif  // UPLIFT_TESTS_HELPERS_HPP
