#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

namespace {

constexpr double kPivotJitter = 1e-3;

// Radius halfway between the two middle distances, so that half of the points
// (exactly, when n is even and those distances differ) fall inside.
double median_radius(std::vector<double> d) {
  const auto n = d.size();
  const auto upper = d.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(d.begin(), upper, d.end());
  if (n % 2 == 1) return *upper;
  const double lo = *std::max_element(d.begin(), upper);
  return 0.5 * (lo + *upper);
}

struct Spheres {
  Vector radii;
  std::vector<std::vector<std::uint64_t>> inside;  // membership bitset per sphere
};

Spheres fit_radii(const Matrix& x, const Matrix& pivots) {
  const Matrix d2 = squared_distances(x, pivots);
  const auto n = x.rows();
  const auto k = pivots.rows();
  const auto words = static_cast<std::size_t>((n + 63) / 64);
  Spheres s;
  s.radii.resize(k);
  s.inside.assign(static_cast<std::size_t>(k), std::vector<std::uint64_t>(words, 0));
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = std::sqrt(d2(i, j));
    s.radii[j] = median_radius(d);
    const double r2 = s.radii[j] * s.radii[j];
    auto& bits = s.inside[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2(i, j) <= r2) bits[static_cast<std::size_t>(i) >> 6] |= std::uint64_t{1} << (i & 63);
    }
  }
  return s;
}

}  // namespace

HashModel train_sph(const LabeledDataset& data, const TrainConfig& config) {
  const int K = config.code_length;
  auto prep = prepare(data, config, "sph", K + 1);
  const Matrix& x = prep.x;
  const auto n = x.rows();
  const double quarter = static_cast<double>(n) / 4.0;

  Rng rng(config.seed);
  Matrix pivots(K, x.cols());
  const auto picks = rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) pivots.row(k) = x.row(static_cast<Eigen::Index>(picks[static_cast<std::size_t>(k)]));
  // Distances from a lattice point to binary data are lattice-valued and tie in
  // large blocks at the median; a small jitter makes the median radius split exactly.
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) pivots(k, d) += kPivotJitter * rng.normal();
  }

  const int max_iters = config.iterations > 0 ? config.iterations : kDefaultSphIterations;
  bool converged = K == 1;
  int iters = 0;
  double mean_gap = 0.0;
  Spheres s = fit_radii(x, pivots);
  while (!converged) {
    Matrix overlap(K, K);
    double gap_sum = 0.0;
    for (int i = 0; i < K; ++i) {
      for (int j = i + 1; j < K; ++j) {
        const auto& a = s.inside[static_cast<std::size_t>(i)];
        const auto& b = s.inside[static_cast<std::size_t>(j)];
        int count = 0;
        for (std::size_t w = 0; w < a.size(); ++w) count += std::popcount(a[w] & b[w]);
        overlap(i, j) = overlap(j, i) = count;
        gap_sum += std::abs(count - quarter);
      }
    }
    mean_gap = gap_sum / (0.5 * K * (K - 1));
    if (mean_gap <= config.sph_overlap_tolerance * quarter) {
      converged = true;
      break;
    }
    if (iters == max_iters) break;
    Matrix moved = pivots;
    for (int i = 0; i < K; ++i) {
      Vector force = Vector::Zero(x.cols());
      for (int j = 0; j < K; ++j) {
        if (j == i) continue;
        const double push = 0.5 * (overlap(i, j) - quarter) / quarter;
        force += push * (pivots.row(i) - pivots.row(j)).transpose();
      }
      moved.row(i) += force.transpose() / K;
    }
    pivots = std::move(moved);
    s = fit_radii(x, pivots);
    ++iters;
  }

  HashModel m;
  m.method = Method::Sph;
  m.input_dim = static_cast<int>(x.cols());
  m.code_length = K;
  m.preprocessing = std::move(prep.preprocessing);
  m.functions = SphericalFunctions{pivots, s.radii};
  m.diagnostics.iterations = iters;
  m.diagnostics.converged = converged;
  if (!converged) {
    m.diagnostics.warnings.push_back("sph: mean overlap gap " + std::to_string(mean_gap / quarter) +
                                     " of n/4 after " + std::to_string(iters) + " iterations");
  }
  m.validate();
  record_bit_balance(m, data);
  return m;
}

}  // namespace hashlab
