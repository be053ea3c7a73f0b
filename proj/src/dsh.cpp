#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

namespace {

struct Candidate {
  Vector w;
  double b = 0.0;
  double entropy = 0.0;
  int first = 0;  // centroid pair, for a stable order among equal entropies
  int second = 0;
};

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

}  // namespace

HashModel train_dsh(const LabeledDataset& data, const TrainConfig& config) {
  const int K = config.code_length;
  const int groups = config.dsh_groups > 0 ? config.dsh_groups : std::max(2, (3 * K + 1) / 2);
  auto prep = prepare(data, config, "dsh", std::max(K + 1, groups));
  const Matrix& x = prep.x;
  const auto n = static_cast<double>(x.rows());

  Rng rng(config.seed);
  const KMeansResult km = kmeans(x, groups, config.kmeans_iterations, rng);
  const Matrix cd = squared_distances(km.centroids, km.centroids);

  // Pairs (i, j), i < j, where either centroid is among the other's r nearest.
  const int r = std::min(config.dsh_neighbours, groups - 1);
  std::vector<std::vector<bool>> adjacent(static_cast<std::size_t>(groups),
                                          std::vector<bool>(static_cast<std::size_t>(groups), false));
  for (int i = 0; i < groups; ++i) {
    std::vector<int> others;
    for (int j = 0; j < groups; ++j) {
      if (j != i) others.push_back(j);
    }
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) { return cd(i, a) < cd(i, b); });
    for (int t = 0; t < r; ++t) {
      const int j = others[static_cast<std::size_t>(t)];
      adjacent[static_cast<std::size_t>(std::min(i, j))][static_cast<std::size_t>(std::max(i, j))] = true;
    }
  }

  std::vector<Candidate> pool;
  for (int i = 0; i < groups; ++i) {
    for (int j = i + 1; j < groups; ++j) {
      if (!adjacent[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
      Candidate c;
      c.w = km.centroids.row(j) - km.centroids.row(i);
      if (c.w.squaredNorm() <= 1e-18) continue;
      const Vector mid = 0.5 * (km.centroids.row(i) + km.centroids.row(j)).transpose();
      c.b = -c.w.dot(mid);
      const Vector proj = x * c.w;
      const double ones = static_cast<double>((proj.array() + c.b > 0.0).count());
      const double frac = ones / n;
      if (std::min(frac, 1.0 - frac) < config.dsh_min_balance) continue;
      c.entropy = binary_entropy(frac);
      c.first = i;
      c.second = j;
      pool.push_back(std::move(c));
    }
  }
  if (static_cast<int>(pool.size()) < K) {
    throw TrainingError("dsh: only " + std::to_string(pool.size()) + " balanced candidate hyperplanes for " +
                        std::to_string(K) + " bits; lower the code length or raise the group count");
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    if (a.entropy != b.entropy) return a.entropy > b.entropy;
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });

  LinearFunctions f;
  f.weights.resize(K, x.cols());
  f.bias.resize(K);
  for (int k = 0; k < K; ++k) {
    f.weights.row(k) = pool[static_cast<std::size_t>(k)].w.transpose();
    f.bias[k] = pool[static_cast<std::size_t>(k)].b;
  }

  HashModel m;
  m.method = Method::Dsh;
  m.input_dim = static_cast<int>(x.cols());
  m.code_length = K;
  m.preprocessing = std::move(prep.preprocessing);
  m.functions = std::move(f);
  m.diagnostics.iterations = km.iterations;
  m.diagnostics.converged = km.converged;
  m.validate();
  record_bit_balance(m, data);
  return m;
}

}  // namespace hashlab
