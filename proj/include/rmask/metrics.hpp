#pragma once

#include <optional>
#include <vector>

#include "rmask/graph.hpp"

namespace rmask {

struct SmoothnessResult {
  double gsl = 0.0;
  std::optional<std::vector<double>> per_node_nsl;
};

// Mean cosine similarity of row i against every other row. Rows with zero
// norm contribute cosine 0.
double nsl(const FeatureMatrix& x, NodeId i);

// Graph smoothness level: the mean of NSL over all rows, computed in
// O(N d) from s = sum of unit-normalized nonzero rows:
//   GSL = (|s|^2 - Z) / (N (N - 1)),  Z = number of nonzero rows.
// Blocks of rows are reduced in a fixed order, so the result does not depend
// on the worker count.
SmoothnessResult gsl(const FeatureMatrix& x, bool per_node = false, std::size_t workers = 1);

// O(N^2 d) reference: averages nsl() over every row.
double gsl_pairwise(const FeatureMatrix& x);

}  // namespace rmask
