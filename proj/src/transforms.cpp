#include "uplift/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uplift {

namespace {

TransformedSet gather(const UpliftDataset& dataset,
                      const std::vector<std::size_t>& indices,
                      std::vector<double> targets) {
  TransformedSet out;
  out.features = Matrix(indices.size(), dataset.feature_count());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& f = dataset.row(indices[i]).features;
    std::copy(f.begin(), f.end(), out.features.row(i).begin());
  }
  out.targets = std::move(targets);
  out.source_row_index = indices;
  return out;
}

double ipc_target(const UpliftRow& r) {
  return r.treatment == 1 ? r.profit / r.propensity
                          : -r.profit / (1.0 - r.propensity);
}

}  // namespace

TransformedSet ipc_transform(const UpliftDataset& dataset) {
  std::vector<std::size_t> indices;
  std::vector<double> targets;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const UpliftRow& r = dataset.row(i);
    if (r.conversion != 1) continue;
    indices.push_back(i);
    targets.push_back(ipc_target(r));
  }
  return gather(dataset, indices, std::move(targets));
}

TransformedSet crvtw_transform(const UpliftDataset& dataset) {
  std::vector<std::size_t> indices(dataset.size());
  std::vector<double> targets(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const UpliftRow& r = dataset.row(i);
    indices[i] = i;
    targets[i] = r.conversion == 1 ? ipc_target(r) : 0.0;
  }
  return gather(dataset, indices, std::move(targets));
}

TransformedSet rdt_targets(const UpliftDataset& dataset) {
  std::vector<std::size_t> indices(dataset.size());
  std::vector<double> targets(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const UpliftRow& r = dataset.row(i);
    if (std::abs(r.propensity - 0.5) > 1e-9) {
      throw std::invalid_argument(
          "rdt_targets: row " + std::to_string(i) + " has propensity " +
          std::to_string(r.propensity) +
          "; this class transformation requires constant 0.5 propensity");
    }
    indices[i] = i;
    const bool positive = r.treatment == 1 ? r.profit > 0.0 : r.profit <= 0.0;
    targets[i] = positive ? 1.0 : 0.0;
  }
  return gather(dataset, indices, std::move(targets));
}

}  // namespace uplift
