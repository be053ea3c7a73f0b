#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "hashlab/errors.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

HashModel train_lsh(const LabeledDataset& data, const TrainConfig& config) {
  auto prep = prepare(data, config, "lsh", config.code_length + 1);
  const int K = config.code_length;
  const auto D = prep.x.cols();

  Rng rng(config.seed);
  LinearFunctions f;
  f.weights.resize(K, D);
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index d = 0; d < D; ++d) f.weights(k, d) = rng.normal();
  }
  f.bias = Vector::Zero(K);

  HashModel m;
  m.method = Method::Lsh;
  m.input_dim = static_cast<int>(D);
  m.code_length = K;
  m.preprocessing = std::move(prep.preprocessing);
  m.functions = std::move(f);
  m.validate();
  record_bit_balance(m, data);
  return m;
}

SpectralFunctions fit_spectral(const Matrix& centered, int code_length) {
  const int P = std::min<int>(code_length, static_cast<int>(centered.cols()));
  const auto eig = sym_eig(covariance(centered));
  if (!(eig.values[0] > 1e-12)) throw TrainingError("sh: training data has zero variance");

  SpectralFunctions f;
  f.directions = eig.vectors.leftCols(P).transpose();
  const Matrix proj = centered * eig.vectors.leftCols(P);

  std::vector<double> mins(static_cast<std::size_t>(P)), ranges(static_cast<std::size_t>(P));
  double widest = 0.0;
  for (int p = 0; p < P; ++p) {
    mins[static_cast<std::size_t>(p)] = proj.col(p).minCoeff();
    ranges[static_cast<std::size_t>(p)] = proj.col(p).maxCoeff() - mins[static_cast<std::size_t>(p)];
    widest = std::max(widest, ranges[static_cast<std::size_t>(p)]);
  }

  // (eigenvalue, direction, frequency); eigenvalue of mode k along a direction of
  // extent r is (k pi / r)², so ordering by k / r is equivalent.
  std::vector<std::tuple<double, int, int>> modes;
  const int max_frequency = 2 * code_length;
  for (int p = 0; p < P; ++p) {
    const double r = ranges[static_cast<std::size_t>(p)];
    if (!(r > 1e-9 * widest) || eig.values[p] <= 1e-12 * eig.values[0]) continue;
    for (int k = 1; k <= max_frequency; ++k) {
      const double w = k * std::numbers::pi / r;
      modes.emplace_back(w * w, p, k);
    }
  }
  if (modes.empty()) throw TrainingError("sh: every principal direction has zero extent");
  std::sort(modes.begin(), modes.end());
  modes.resize(static_cast<std::size_t>(code_length));

  for (const auto& [_, p, k] : modes) {
    f.modes.push_back({p, k, mins[static_cast<std::size_t>(p)], ranges[static_cast<std::size_t>(p)]});
  }
  return f;
}

HashModel train_sh(const LabeledDataset& data, const TrainConfig& config) {
  auto prep = prepare(data, config, "sh", config.code_length + 1);
  if (config.code_length > prep.x.cols()) {
    throw InvalidArgument("sh: code length " + std::to_string(config.code_length) + " exceeds input dimension " +
                          std::to_string(prep.x.cols()));
  }
  HashModel m;
  m.method = Method::Sh;
  m.input_dim = static_cast<int>(prep.x.cols());
  m.code_length = config.code_length;
  m.functions = fit_spectral(prep.x, config.code_length);
  m.preprocessing = std::move(prep.preprocessing);
  m.validate();
  record_bit_balance(m, data);
  return m;
}

}  // namespace hashlab
