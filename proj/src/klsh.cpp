#include <algorithm>
#include <cmath>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

namespace {

Matrix kernel_matrix(const Matrix& anchors, const KernelSpec& kernel) {
  Matrix k = squared_distances(anchors, anchors);
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) k(i, j) = kernel(i == j ? 0.0 : k(i, j));
  }
  return 0.5 * (k + k.transpose());
}

}  // namespace

Matrix centered_kernel_matrix(const Matrix& anchors, const KernelSpec& kernel) {
  const Matrix k = kernel_matrix(anchors, kernel);
  const auto t = k.rows();
  const Matrix h = Matrix::Identity(t, t) - Matrix::Constant(t, t, 1.0 / static_cast<double>(t));
  const Matrix c = h * k * h;
  return 0.5 * (c + c.transpose());
}

HashModel train_klsh(const LabeledDataset& data, const TrainConfig& config) {
  const int K = config.code_length;
  const int T = config.klsh_anchors;
  auto prep = prepare(data, config, "klsh", K + 1);
  const Matrix& x = prep.x;
  if (T > x.rows()) {
    throw InvalidArgument("klsh: " + std::to_string(T) + " anchors requested but only " + std::to_string(x.rows()) +
                          " training descriptors");
  }
  if (T < 2) throw TrainingError("klsh: centred kernel matrix of a single anchor is not invertible");
  const int t = std::min(config.klsh_subsample, T);

  Rng rng(config.seed);
  const auto picks = rng.sample_without_replacement(static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(T));
  Matrix anchors(T, x.cols());
  for (int i = 0; i < T; ++i) anchors.row(i) = x.row(static_cast<Eigen::Index>(picks[static_cast<std::size_t>(i)]));

  KernelSpec kernel;
  kernel.bandwidth = config.klsh_bandwidth > 0.0 ? config.klsh_bandwidth : median_pairwise_distance(anchors);
  if (!(kernel.bandwidth > 0.0)) throw TrainingError("klsh: anchors coincide, kernel bandwidth is zero");

  const Matrix gram = kernel_matrix(anchors, kernel);
  const Vector row_mean = gram.rowwise().mean();
  const double total_mean = gram.mean();
  const SymEig eig = sym_eig(centered_kernel_matrix(anchors, kernel));
  const double scale = std::max(1.0, eig.values[0]);
  if (eig.values[T - 1] < -1e-9 * scale) {
    throw TrainingError("klsh: centred kernel matrix is not positive semidefinite (min eigenvalue " +
                        std::to_string(eig.values[T - 1]) + ")");
  }
  if (!(eig.values[0] > 1e-10)) throw TrainingError("klsh: centred kernel matrix is not invertible");
  const Vector inv_sqrt = eig.values.unaryExpr([](double v) { return 1.0 / std::sqrt(std::max(v, 1e-10)); });
  const Matrix whiten = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();

  KernelFunctions f;
  f.kernel = kernel;
  f.weights.resize(K, T);
  f.bias.resize(K);
  for (int k = 0; k < K; ++k) {
    // Centred subset indicator: sums to zero, so the null direction of the centred Gram drops out.
    Vector z = Vector::Constant(T, -1.0 / T);
    for (auto s : rng.sample_without_replacement(static_cast<std::size_t>(T), static_cast<std::size_t>(t))) {
      z[static_cast<Eigen::Index>(s)] += 1.0 / t;
    }
    const Vector w = whiten * z;
    // Fold the anchor-statistics centring of k(x) into the weights and bias.
    f.weights.row(k) = (w.array() - w.sum() / T).matrix().transpose();
    f.bias[k] = w.dot(Vector::Constant(T, total_mean) - row_mean);
  }
  f.anchors = std::move(anchors);

  HashModel m;
  m.method = Method::Klsh;
  m.input_dim = static_cast<int>(x.cols());
  m.code_length = K;
  m.preprocessing = std::move(prep.preprocessing);
  m.functions = std::move(f);
  m.validate();
  record_bit_balance(m, data);
  return m;
}

}  // namespace hashlab
