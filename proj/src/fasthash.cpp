#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "hashlab/errors.hpp"
#include "hashlab/supervised.hpp"

namespace hashlab {

namespace {

struct Edge {
  std::uint32_t pair;
  std::uint32_t other;  // local record index
};

double gini(double pos, double neg) {
  const double w = pos + neg;
  return w > 0.0 ? w - (pos * pos + neg * neg) / w : 0.0;
}

// Weighted Gini tree on raw bits; `members` are local record indices.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<const BinaryCode*>& x, const std::vector<int>& y, const std::vector<double>& w,
              int features, int max_depth)
      : x_(x), y_(y), w_(w), features_(features), max_depth_(max_depth) {}

  DecisionTree build(std::vector<std::uint32_t> members) {
    tree_ = {};
    grow(std::move(members), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::uint32_t> members, int depth) {
    double pos = 0.0, neg = 0.0;
    for (auto r : members) (y_[r] > 0 ? pos : neg) += w_[r];
    const auto at = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[static_cast<std::size_t>(at)].leaf = pos > neg ? 1 : -1;
    if (depth >= max_depth_ || pos == 0.0 || neg == 0.0) return at;

    // Weight of each class and record count on the bit-1 side, per feature.
    std::fill(pos1_.begin(), pos1_.end(), 0.0);
    std::fill(neg1_.begin(), neg1_.end(), 0.0);
    std::fill(count1_.begin(), count1_.end(), 0u);
    for (auto r : members) {
      auto& side = y_[r] > 0 ? pos1_ : neg1_;
      const double wr = w_[r];
      const auto words = x_[r]->words();
      for (std::size_t k = 0; k < words.size(); ++k) {
        for (std::uint64_t bits = words[k]; bits != 0; bits &= bits - 1) {
          const auto f = k * 64 + static_cast<std::size_t>(std::countr_zero(bits));
          side[f] += wr;
          ++count1_[f];
        }
      }
    }
    const double parent = gini(pos, neg);
    int best = -1;
    double best_impurity = parent;
    for (int f = 0; f < features_; ++f) {
      const auto fi = static_cast<std::size_t>(f);
      if (count1_[fi] == 0 || count1_[fi] == members.size()) continue;
      const double impurity = gini(pos1_[fi], neg1_[fi]) + gini(pos - pos1_[fi], neg - neg1_[fi]);
      if (impurity < best_impurity - 1e-12 * (pos + neg)) {
        best_impurity = impurity;
        best = f;
      }
    }
    if (best < 0) return at;

    std::vector<std::uint32_t> left, right;
    for (auto r : members) (x_[r]->bit(best) ? right : left).push_back(r);
    members = {};
    const auto l = grow(std::move(left), depth + 1);
    const auto rgt = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(at)];
    node.feature = static_cast<std::int16_t>(best);
    node.left = l;
    node.right = rgt;
    return at;
  }

  const std::vector<const BinaryCode*>& x_;
  const std::vector<int>& y_;
  const std::vector<double>& w_;
  int features_;
  int max_depth_;
  DecisionTree tree_;
  std::array<double, kMaxBits> pos1_{};
  std::array<double, kMaxBits> neg1_{};
  std::array<std::size_t, kMaxBits> count1_{};
};

}  // namespace

HashModel train_fasthash(const LabeledDataset& data, const SimilarityPairs& pairs, const TrainConfig& config) {
  config.validate();
  data.validate();
  const int K = config.code_length;
  if (pairs.empty()) throw InvalidArgument("fasthash: needs similarity pairs (supervised only)");
  if (static_cast<int>(data.size()) < K + 1) {
    throw InvalidArgument("fasthash: needs at least " + std::to_string(K + 1) + " training descriptors, got " +
                          std::to_string(data.size()));
  }

  // Local numbering of the records that appear in a pair, ascending.
  std::vector<long> local(data.size(), -1);
  for (const auto& p : pairs.pairs) {
    if (p.i == p.j || p.i >= data.size() || p.j >= data.size()) {
      throw InvalidArgument("fasthash: pair (" + std::to_string(p.i) + ", " + std::to_string(p.j) + ") out of range");
    }
    local[p.i] = local[p.j] = 0;
  }
  std::vector<const BinaryCode*> x;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (local[r] < 0) continue;
    local[r] = static_cast<long>(x.size());
    x.push_back(&data.descriptors[r]);
  }
  const std::size_t n = x.size();

  std::vector<std::vector<Edge>> adj(n);
  std::vector<double> relation(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto a = static_cast<std::uint32_t>(local[pairs.pairs[p].i]);
    const auto b = static_cast<std::uint32_t>(local[pairs.pairs[p].j]);
    adj[a].push_back({static_cast<std::uint32_t>(p), b});
    adj[b].push_back({static_cast<std::uint32_t>(p), a});
    relation[p] = pairs.pairs[p].relation == Relation::Similar ? 1.0 : -1.0;
  }

  Rng rng(config.seed);
  // Running sum over learned bits of h(i) h(j) per pair.
  std::vector<double> agreement(pairs.size(), 0.0);
  std::vector<double> weight(pairs.size());
  std::vector<int> target(n), predicted(n);
  std::vector<double> boost(n), score(n);
  std::vector<std::uint32_t> everyone(n);
  for (std::size_t i = 0; i < n; ++i) everyone[i] = static_cast<std::uint32_t>(i);

  TreeFunctions functions;
  TrainDiagnostics diag;
  auto pair_loss = [&]() {
    double loss = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto a = local[pairs.pairs[p].i], b = local[pairs.pairs[p].j];
      loss -= weight[p] * target[static_cast<std::size_t>(a)] * target[static_cast<std::size_t>(b)];
    }
    return loss;
  };

  for (int k = 0; k < K; ++k) {
    // Step 1: target bits minimising -sum_p weight_p b_i b_j, the bit-k part of
    // sum_p (K r_p - sum_m h_m(i) h_m(j))².
    for (std::size_t p = 0; p < pairs.size(); ++p) weight[p] = K * relation[p] - agreement[p];
    for (std::size_t i = 0; i < n; ++i) target[i] = (rng.next_u64() >> 63) != 0 ? 1 : -1;
    diag.loss_trace.push_back(pair_loss());
    for (int sweep = 0; sweep < config.inference_sweeps; ++sweep) {
      for (std::size_t i = 0; i < n; ++i) {
        double g = 0.0;
        for (const auto& e : adj[i]) g += weight[e.pair] * target[e.other];
        if (target[i] * g < 0.0) target[i] = -target[i];
      }
      diag.loss_trace.push_back(pair_loss());
    }

    // Step 2: AdaBoost over depth-limited trees predicting the target bit.
    TreeEnsemble ensemble;
    std::fill(boost.begin(), boost.end(), 1.0 / static_cast<double>(n));
    std::fill(score.begin(), score.end(), 0.0);
    TreeBuilder builder(x, target, boost, data.code_length(), config.tree_depth);
    for (int t = 0; t < config.trees_per_bit; ++t) {
      DecisionTree tree = builder.build(everyone);
      double err = 0.0, total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        predicted[i] = tree.predict(*x[i]);
        total += boost[i];
        if (predicted[i] != target[i]) err += boost[i];
      }
      err /= total;
      if (err >= 0.5 && !ensemble.trees.empty()) break;
      const double clamped = std::clamp(err, 1e-10, 0.5);
      const double alpha = 0.5 * std::log((1.0 - clamped) / clamped);
      ensemble.trees.push_back(std::move(tree));
      ensemble.alphas.push_back(alpha);
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        score[i] += alpha * predicted[i];
        boost[i] *= std::exp(-alpha * predicted[i] * target[i]);
        norm += boost[i];
      }
      for (auto& b : boost) b /= norm;
      if (err <= 0.0 || err >= 0.5) break;
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int h = score[i] > 0.0 ? 1 : -1;
      correct += h == target[i] ? 1 : 0;
      predicted[i] = h;
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      agreement[p] += predicted[static_cast<std::size_t>(local[pairs.pairs[p].i])] *
                      predicted[static_cast<std::size_t>(local[pairs.pairs[p].j])];
    }
    diag.bit_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
    functions.bits.push_back(std::move(ensemble));
  }

  HashModel m;
  m.method = Method::FastHash;
  m.input_dim = data.code_length();
  m.code_length = K;
  m.preprocessing = Preprocessing{BitMapping::ZeroOne, {}};
  m.functions = std::move(functions);
  diag.iterations = config.inference_sweeps;
  m.diagnostics = std::move(diag);
  m.validate();
  m.diagnostics.bit_balance = bit_balance(encode_all(m, data));
  return m;
}

}  // namespace hashlab
