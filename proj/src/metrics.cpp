#include "rmask/metrics.hpp"

#include <cmath>

#include "rmask/error.hpp"
#include "rmask/parallel.hpp"

namespace rmask {

namespace {
constexpr const char* kModule = "metrics";
constexpr std::size_t kBlock = 512;

void require_two_rows(const FeatureMatrix& x) {
  if (x.rows() < 2) throw ParameterError(kModule, "smoothness needs at least two rows");
}
}  // namespace

double nsl(const FeatureMatrix& x, NodeId i) {
  require_two_rows(x);
  if (i >= static_cast<std::size_t>(x.rows())) throw RangeError(kModule, "row index outside the matrix");
  const double ni = x.row(i).norm();
  if (ni == 0.0) return 0.0;
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (j == static_cast<Eigen::Index>(i)) continue;
    const double nj = x.row(j).norm();
    if (nj == 0.0) continue;
    total += x.row(i).dot(x.row(j)) / (ni * nj);
  }
  return total / static_cast<double>(x.rows() - 1);
}

SmoothnessResult gsl(const FeatureMatrix& x, bool per_node, std::size_t workers) {
  require_two_rows(x);
  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<Eigen::RowVectorXd> partial(blocks, Eigen::RowVectorXd::Zero(x.cols()));
  std::vector<std::size_t> nonzero(blocks, 0);
  std::vector<double> norms(n, 0.0);

  parallel_for(blocks, workers, 1, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t b = begin; b < end; ++b) {
      for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) {
        const double norm = x.row(static_cast<Eigen::Index>(i)).norm();
        norms[i] = norm;
        if (norm == 0.0) continue;
        partial[b] += x.row(static_cast<Eigen::Index>(i)) / norm;
        ++nonzero[b];
      }
    }
  });

  Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(x.cols());
  std::size_t z = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    s += partial[b];
    z += nonzero[b];
  }

  SmoothnessResult result;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  result.gsl = (s.squaredNorm() - static_cast<double>(z)) / pairs;
  if (per_node) {
    std::vector<double> values(n, 0.0);
    parallel_for(n, workers, kBlock, [&](std::size_t begin, std::size_t end, std::size_t) {
      for (std::size_t i = begin; i < end; ++i) {
        if (norms[i] == 0.0) continue;
        values[i] = (x.row(static_cast<Eigen::Index>(i)).dot(s) / norms[i] - 1.0) / static_cast<double>(n - 1);
      }
    });
    result.per_node_nsl = std::move(values);
  }
  return result;
}

double gsl_pairwise(const FeatureMatrix& x) {
  require_two_rows(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) total += nsl(x, static_cast<NodeId>(i));
  return total / static_cast<double>(x.rows());
}

}  // namespace rmask
