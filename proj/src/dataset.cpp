#include "uplift/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "uplift/rng.hpp"

namespace uplift {

UpliftDataset::UpliftDataset(std::vector<UpliftRow> rows,
                             std::size_t feature_count)
    : rows_(std::move(rows)), feature_count_(feature_count) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].features.size() != feature_count_) {
      throw std::invalid_argument(
          "UpliftDataset: row " + std::to_string(i) + " has " +
          std::to_string(rows_[i].features.size()) + " features, expected " +
          std::to_string(feature_count_));
    }
  }
}

std::string to_string(const Violation& v) {
  return "row " + std::to_string(v.row) + ": " + v.rule;
}

std::vector<Violation> validate(const UpliftDataset& dataset) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const UpliftRow& r = dataset.row(i);
    if (r.treatment != 0 && r.treatment != 1) {
      out.push_back({i, "treatment must be 0 or 1, got " +
                            std::to_string(r.treatment)});
    }
    if (r.conversion != 0 && r.conversion != 1) {
      out.push_back({i, "conversion must be 0 or 1, got " +
                            std::to_string(r.conversion)});
    }
    if (r.conversion == 0 && r.profit != 0.0) {
      out.push_back(
          {i, "conversion = 0 requires profit = 0 (response-dependent costs)"});
    }
    if (!(r.propensity > 0.0 && r.propensity < 1.0)) {
      out.push_back({i, "propensity must lie in the open interval (0, 1)"});
    }
  }
  return out;
}

UpliftDataset converted_subset(const UpliftDataset& dataset) {
  std::vector<UpliftRow> rows;
  for (const UpliftRow& r : dataset.rows()) {
    if (r.conversion == 1) rows.push_back(r);
  }
  return UpliftDataset(std::move(rows), dataset.feature_count());
}

UpliftDataset subset(const UpliftDataset& dataset,
                     const std::vector<std::size_t>& indices) {
  std::vector<UpliftRow> rows;
  rows.reserve(indices.size());
  for (std::size_t i : indices) rows.push_back(dataset.row(i));
  return UpliftDataset(std::move(rows), dataset.feature_count());
}

namespace {

// Stratum key on the raw (treatment, conversion) pair; tolerant of values
// outside {0,1} so folding never depends on validate() having run.
std::map<std::pair<int, int>, std::vector<std::size_t>> strata_of(
    const UpliftDataset& dataset) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const UpliftRow& r = dataset.row(i);
    strata[{r.treatment, r.conversion}].push_back(i);
  }
  return strata;
}

}  // namespace

FoldAssignment make_folds(const UpliftDataset& dataset, int k,
                          std::uint64_t seed) {
  if (k < 2) {
    throw std::invalid_argument("make_folds: k must be >= 2, got " +
                                std::to_string(k));
  }
  FoldAssignment fa;
  fa.fold_of_row.assign(dataset.size(), 0);
  fa.k = k;
  fa.seed = seed;

  std::uint64_t stratum_id = 0;
  for (auto& [key, indices] : strata_of(dataset)) {
    if (indices.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument(
          "make_folds: stratum (treatment=" + std::to_string(key.first) +
          ", conversion=" + std::to_string(key.second) + ") has " +
          std::to_string(indices.size()) + " rows, fewer than k=" +
          std::to_string(k));
    }
    rng::shuffle(indices, seed, stratum_id++);
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
      fa.fold_of_row[indices[pos]] = static_cast<int>(pos % k);
    }
  }
  return fa;
}

HoldoutSplit make_holdout(const UpliftDataset& dataset, double test_fraction,
                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument(
        "make_holdout: test_fraction must lie in (0, 1)");
  }
  HoldoutSplit split;
  split.test_fraction = test_fraction;
  split.seed = seed;

  std::vector<char> is_test(dataset.size(), 0);
  std::uint64_t stratum_id = 0;
  for (auto& [key, indices] : strata_of(dataset)) {
    if (indices.size() < 2) {
      throw std::invalid_argument(
          "make_holdout: stratum (treatment=" + std::to_string(key.first) +
          ", conversion=" + std::to_string(key.second) +
          ") has fewer than 2 rows");
    }
    rng::shuffle(indices, seed, stratum_id++);
    std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(indices.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, indices.size() - 1);
    for (std::size_t pos = 0; pos < n_test; ++pos) is_test[indices[pos]] = 1;
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (is_test[i] ? split.test : split.train).push_back(i);
  }
  return split;
}

Matrix feature_matrix(const UpliftDataset& dataset) {
  Matrix m(dataset.size(), dataset.feature_count());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& f = dataset.row(i).features;
    std::copy(f.begin(), f.end(), m.row(i).begin());
  }
  return m;
}

std::vector<int> treatments(const UpliftDataset& dataset) {
  std::vector<int> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    out[i] = dataset.row(i).treatment;
  return out;
}

std::vector<double> profits(const UpliftDataset& dataset) {
  std::vector<double> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    out[i] = dataset.row(i).profit;
  return out;
}

std::vector<double> propensities(const UpliftDataset& dataset) {
  std::vector<double> out(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    out[i] = dataset.row(i).propensity;
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double_cell(const std::string& cell, std::size_t data_row,
                         const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw std::runtime_error("row " + std::to_string(data_row) + ", column " +
                             column + ": malformed numeric cell '" + cell +
                             "'");
  }
  return v;
}

int parse_int_cell(const std::string& cell, std::size_t data_row,
                   const std::string& column) {
  int v = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw std::runtime_error("row " + std::to_string(data_row) + ", column " +
                             column + ": malformed numeric cell '" + cell +
                             "'");
  }
  return v;
}

void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

UpliftDataset load_csv(const std::filesystem::path& path,
                       std::optional<double> default_propensity) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("missing header row in " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  int treatment_col = -1, conversion_col = -1, profit_col = -1,
      propensity_col = -1;
  std::map<std::size_t, std::size_t> feature_cols;  // feature index -> column
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "treatment") {
      treatment_col = static_cast<int>(c);
    } else if (name == "conversion") {
      conversion_col = static_cast<int>(c);
    } else if (name == "profit") {
      profit_col = static_cast<int>(c);
    } else if (name == "propensity") {
      propensity_col = static_cast<int>(c);
    } else if (name.rfind("feature_", 0) == 0) {
      const std::string suffix = name.substr(8);
      std::size_t idx = 0;
      auto [ptr, ec] =
          std::from_chars(suffix.data(), suffix.data() + suffix.size(), idx);
      if (ec != std::errc() || ptr != suffix.data() + suffix.size()) {
        throw std::runtime_error("unrecognized column '" + name + "'");
      }
      if (feature_cols.count(idx)) {
        throw std::runtime_error("duplicate column '" + name + "'");
      }
      feature_cols[idx] = c;
    } else {
      throw std::runtime_error("unrecognized column '" + name + "'");
    }
  }
  for (const char* required : {"treatment", "conversion", "profit"}) {
    const int col = std::string(required) == "treatment"   ? treatment_col
                    : std::string(required) == "conversion" ? conversion_col
                                                             : profit_col;
    if (col < 0) {
      throw std::runtime_error("missing required column '" +
                               std::string(required) + "'");
    }
  }
  if (propensity_col < 0 && !default_propensity.has_value()) {
    throw std::runtime_error(
        "missing propensity column and no default propensity supplied");
  }
  const std::size_t p = feature_cols.size();
  for (std::size_t j = 0; j < p; ++j) {
    if (!feature_cols.count(j)) {
      throw std::runtime_error("feature columns must be contiguous: missing "
                               "'feature_" +
                               std::to_string(j) + "'");
    }
  }

  std::vector<UpliftRow> rows;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++data_row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("row " + std::to_string(data_row) +
                               ": expected " + std::to_string(header.size()) +
                               " cells, got " + std::to_string(cells.size()));
    }
    UpliftRow r;
    r.features.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      r.features[j] = parse_double_cell(cells[feature_cols[j]], data_row,
                                        "feature_" + std::to_string(j));
    }
    r.treatment = parse_int_cell(cells[treatment_col], data_row, "treatment");
    r.conversion =
        parse_int_cell(cells[conversion_col], data_row, "conversion");
    r.profit = parse_double_cell(cells[profit_col], data_row, "profit");
    r.propensity = propensity_col >= 0
                       ? parse_double_cell(cells[propensity_col], data_row,
                                           "propensity")
                       : *default_propensity;
    rows.push_back(std::move(r));
  }
  return UpliftDataset(std::move(rows), p);
}

void save_csv(const UpliftDataset& dataset,
              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open file for writing: " + path.string());
  }
  std::string buf;
  for (std::size_t j = 0; j < dataset.feature_count(); ++j) {
    buf += "feature_" + std::to_string(j) + ",";
  }
  buf += "treatment,conversion,profit,propensity\n";
  out << buf;
  for (const UpliftRow& r : dataset.rows()) {
    buf.clear();
    for (double f : r.features) {
      append_number(buf, f);
      buf += ',';
    }
    buf += std::to_string(r.treatment);
    buf += ',';
    buf += std::to_string(r.conversion);
    buf += ',';
    append_number(buf, r.profit);
    buf += ',';
    append_number(buf, r.propensity);
    buf += '\n';
    out << buf;
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::string fingerprint(const UpliftDataset& dataset) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV offset basis
  auto eat = [&h](std::uint64_t bits) {
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;  // FNV prime
    }
  };
  eat(dataset.size());
  eat(dataset.feature_count());
  for (const UpliftRow& r : dataset.rows()) {
    for (double f : r.features) eat(std::bit_cast<std::uint64_t>(f));
    eat(static_cast<std::uint64_t>(r.treatment));
    eat(static_cast<std::uint64_t>(r.conversion));
    eat(std::bit_cast<std::uint64_t>(r.profit));
    eat(std::bit_cast<std::uint64_t>(r.propensity));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace uplift
