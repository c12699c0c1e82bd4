#ifndef UPLIFT_TRANSFORMS_HPP
#define UPLIFT_TRANSFORMS_HPP

#include <cstddef>
#include <vector>

#include "uplift/dataset.hpp"
#include "uplift/matrix.hpp"

namespace uplift {

// Regression-ready (features, target) pairs produced by a response
// transformation, with a map back to the originating dataset rows.
struct TransformedSet {
  Matrix features;
  std::vector<double> targets;
  std::vector<std::size_t> source_row_index;  // strictly increasing
};

// Converted rows only: z = +profit / Pr(T=1|x) for treated rows,
// z = -profit / Pr(T=0|x) for control rows. Never reads the features or
// profits of conversion = 0 rows.
TransformedSet ipc_transform(const UpliftDataset& dataset);

// All rows: converted rows transformed as in ipc_transform, non-converted
// rows kept with z = 0.
TransformedSet crvtw_transform(const UpliftDataset& dataset);

// All rows, binary class transformation at balanced assignment:
// z = 1 if (treated and profit > 0) or (control and profit <= 0), else 0.
// Throws std::invalid_argument on any row whose propensity is not 0.5.
TransformedSet rdt_targets(const UpliftDataset& dataset);

}  // namespace uplift

#endif  // UPLIFT_TRANSFORMS_HPP
