#include <algorithm>
#include <cmath>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("train config: " + what); };
  if (code_length < 1 || code_length > kMaxBits) fail("code length must be in [1, 512]");
  if (iterations < 0) fail("iterations must be >= 0");
  if (!(isotropy_tolerance > 0.0)) fail("isotropy tolerance must be positive");
  if (dsh_groups < 0 || dsh_neighbours < 1) fail("DSH groups/neighbours out of range");
  if (!(dsh_min_balance >= 0.0 && dsh_min_balance < 0.5)) fail("DSH min balance must be in [0, 0.5)");
  if (kmeans_iterations < 1) fail("k-means iterations must be >= 1");
  if (!(sph_balance_tolerance > 0.0) || !(sph_overlap_tolerance > 0.0)) fail("SpH tolerances must be positive");
  if (klsh_anchors < 1 || klsh_subsample < 1) fail("KLSH anchors/subsample must be >= 1");
  if (klsh_bandwidth < 0.0) fail("KLSH bandwidth must be >= 0");
  if (!(eta > 0.0) || !(lambda > 0.0)) fail("eta and lambda must be positive");
  if (!(correction_step >= 0.0)) fail("correction step must be >= 0");
  if (tree_depth < 1 || tree_depth > 16) fail("tree depth must be in [1, 16]");
  if (trees_per_bit < 1) fail("trees per bit must be >= 1");
  if (inference_sweeps < 1) fail("inference sweeps must be >= 1");
}

PreparedData prepare(const LabeledDataset& data, const TrainConfig& config, std::string_view method,
                     int min_rows) {
  config.validate();
  data.validate();
  const std::string name(method);
  if (static_cast<int>(data.size()) < min_rows) {
    throw InvalidArgument(name + ": needs at least " + std::to_string(min_rows) + " training descriptors, got " +
                          std::to_string(data.size()));
  }
  PreparedData out;
  out.preprocessing.mapping = config.mapping;
  Preprocessing mapping_only{config.mapping, {}};
  Matrix raw = mapping_only.apply_all(data);
  if (config.center) {
    auto c = mean_center(raw);
    out.x = std::move(c.data);
    out.preprocessing.mean = std::move(c.mean);
  } else {
    out.x = std::move(raw);
  }
  const Vector spread = out.x.colwise().maxCoeff() - out.x.colwise().minCoeff();
  if (spread.maxCoeff() <= 0.0) throw TrainingError(name + ": training data has zero variance");
  return out;
}

Pca pca(const Matrix& centered, int k, std::string_view method) {
  const std::string name(method);
  if (k > centered.cols()) {
    throw InvalidArgument(name + ": code length " + std::to_string(k) + " exceeds input dimension " +
                          std::to_string(centered.cols()));
  }
  const auto eig = sym_eig(covariance(centered));
  if (!(eig.values[0] > 1e-12)) throw TrainingError(name + ": training data has zero variance");
  Pca out;
  out.components = eig.vectors.leftCols(k);
  out.variances = eig.values.head(k).cwiseMax(0.0);
  return out;
}

double median_pairwise_distance(const Matrix& rows) {
  const Matrix d2 = squared_distances(rows, rows);
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(rows.rows() * (rows.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j) d.push_back(std::sqrt(d2(i, j)));
  }
  if (d.empty()) return 0.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  if (d.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(d.begin(), mid);
  return 0.5 * (lo + hi);
}

void record_bit_balance(HashModel& model, const LabeledDataset& data) {
  model.diagnostics.bit_balance = bit_balance(encode_all(model, data));
}

}  // namespace hashlab
