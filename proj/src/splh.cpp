#include <algorithm>
#include <cmath>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/supervised.hpp"
#include "hashlab/unsupervised.hpp"

namespace hashlab {

namespace {

double relation_sign(Relation r) { return r == Relation::Similar ? 1.0 : -1.0; }

void check_pairs(const SimilarityPairs& pairs, std::size_t n, const char* method) {
  for (const auto& p : pairs.pairs) {
    if (p.i == p.j || p.i >= n || p.j >= n) {
      throw InvalidArgument(std::string(method) + ": pair (" + std::to_string(p.i) + ", " + std::to_string(p.j) +
                            ") is out of range for " + std::to_string(n) + " records");
    }
  }
}

enum class Correction { LatestBit, AllBits };

HashModel sequential_projections(const LabeledDataset& data, const SimilarityPairs& pairs, const TrainConfig& config,
                                 Method method, double unsupervised_weight, Correction correction) {
  const std::string name(method_name(method));
  auto prep = prepare(data, config, name, config.code_length + 1);
  const int K = config.code_length;
  const Matrix& x = prep.x;
  const auto D = x.cols();
  if (K > D) {
    throw InvalidArgument(name + ": code length " + std::to_string(K) + " exceeds input dimension " +
                          std::to_string(D));
  }
  check_pairs(pairs, data.size(), name.c_str());

  // Records that take part in a pair, and the pairs in their local numbering.
  std::vector<long> local(data.size(), -1);
  std::vector<std::size_t> rows;
  for (const auto& p : pairs.pairs) {
    for (auto r : {p.i, p.j}) {
      if (local[r] < 0) {
        local[r] = static_cast<long>(rows.size());
        rows.push_back(r);
      }
    }
  }
  Matrix xl(static_cast<Eigen::Index>(rows.size()), D);
  for (std::size_t r = 0; r < rows.size(); ++r) xl.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));

  Matrix c = x.transpose() * x;
  std::vector<double> weight(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) weight[p] = relation_sign(pairs.pairs[p].relation);
  std::vector<std::vector<std::uint8_t>> bits;  // per learned bit, per record (labelled records only)

  Matrix directions(K, D);
  for (int k = 0; k < K; ++k) {
    if (correction == Correction::AllBits) weight = btsplh_pair_weights(pairs, bits, config.correction_step);

    Matrix m = c;
    if (!pairs.empty()) {
      Matrix y = Matrix::Zero(xl.rows(), D);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto a = local[pairs.pairs[p].i];
        const auto b = local[pairs.pairs[p].j];
        y.row(a) += weight[p] * xl.row(b);
        y.row(b) += weight[p] * xl.row(a);
      }
      const Matrix s = xl.transpose() * y;
      m += (0.5 / unsupervised_weight) * (s + s.transpose());
    }
    // Deflation leaves earlier directions in the null space of m; push them below the
    // rest of the spectrum (the Frobenius norm bounds every eigenvalue) so a
    // negative-definite supervised term cannot pick one of them again.
    if (k > 0) {
      const double shift = 1.0 + m.norm();
      m -= shift * directions.topRows(k).transpose() * directions.topRows(k);
    }
    const SymEig e = sym_eig(0.5 * (m + m.transpose()));
    const Vector w = e.vectors.col(0);
    directions.row(k) = w.transpose();

    const Vector pl = xl * w;
    if (correction == Correction::LatestBit && !pairs.empty()) {
      const double scale = pl.squaredNorm() / static_cast<double>(pl.size());
      if (scale > 0.0) {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          const double prod = pl[local[pairs.pairs[p].i]] * pl[local[pairs.pairs[p].j]];
          if (prod * relation_sign(pairs.pairs[p].relation) < 0.0) weight[p] -= config.correction_step * prod / scale;
        }
      }
    }
    if (correction == Correction::AllBits) {
      std::vector<std::uint8_t> b(data.size(), 0);
      for (std::size_t r = 0; r < rows.size(); ++r) b[rows[r]] = pl[static_cast<Eigen::Index>(r)] > 0.0 ? 1 : 0;
      bits.push_back(std::move(b));
    }

    // Deflate along w: X <- X (I - w wᵀ), so C <- (I - w wᵀ) C (I - w wᵀ).
    xl -= pl * w.transpose();
    const Vector u = c * w;
    const double wu = w.dot(u);
    c -= u * w.transpose() + w * u.transpose();
    c += wu * (w * w.transpose());
  }

  HashModel model;
  model.method = method;
  model.input_dim = static_cast<int>(D);
  model.code_length = K;
  model.preprocessing = std::move(prep.preprocessing);
  LinearFunctions f;
  f.weights = std::move(directions);
  f.bias = Vector::Zero(K);
  model.functions = std::move(f);
  model.diagnostics.iterations = K;
  model.validate();
  record_bit_balance(model, data);
  return model;
}

}  // namespace

std::vector<double> btsplh_pair_weights(const SimilarityPairs& pairs,
                                        const std::vector<std::vector<std::uint8_t>>& bits, double step) {
  std::vector<double> out(pairs.size());
  const auto m = static_cast<double>(bits.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double r = relation_sign(pairs.pairs[p].relation);
    if (bits.empty()) {
      out[p] = r;
      continue;
    }
    int d = 0;
    for (const auto& b : bits) d += b[pairs.pairs[p].i] != b[pairs.pairs[p].j] ? 1 : 0;
    const double agreement = 1.0 - 2.0 * d / m;
    const double contradiction = std::max(0.0, -r * agreement);
    out[p] = r * (1.0 + step * contradiction);
  }
  return out;
}

HashModel train_splh(const LabeledDataset& data, const SimilarityPairs& pairs, const TrainConfig& config) {
  return sequential_projections(data, pairs, config, Method::Splh, config.eta, Correction::LatestBit);
}

HashModel train_btsplh(const LabeledDataset& data, const SimilarityPairs& pairs, const TrainConfig& config) {
  return sequential_projections(data, pairs, config, Method::Btsplh, config.lambda, Correction::AllBits);
}

}  // namespace hashlab
