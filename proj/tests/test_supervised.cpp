#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "hashlab/errors.hpp"
#include "hashlab/evaluation.hpp"
#include "hashlab/supervised.hpp"
#include "hashlab/trainers.hpp"
#include "support.hpp"

using namespace hashlab;
using testing::naive_hamming;

namespace {

using PairKey = std::pair<std::uint32_t, std::uint32_t>;

std::set<PairKey> keys(const SimilarityPairs& p) {
  std::set<PairKey> out;
  for (const auto& x : p.pairs) out.emplace(x.i, x.j);
  return out;
}

PairKey ordered(std::size_t a, std::size_t b) {
  return {static_cast<std::uint32_t>(std::min(a, b)), static_cast<std::uint32_t>(std::max(a, b))};
}

// Brute-force k nearest other records, lower index first on ties.
std::vector<std::size_t> brute_knn(const LabeledDataset& d, std::size_t q, std::size_t k) {
  std::vector<std::pair<int, std::size_t>> all;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (j != q) all.emplace_back(naive_hamming(d.descriptors[q], d.descriptors[j]), j);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

LabeledDataset synthetic(int landmarks, int per, double flip, std::uint64_t seed, int length = 512) {
  SyntheticConfig c;
  c.n_landmarks = landmarks;
  c.min_per_landmark = c.max_per_landmark = per;
  c.base_flip_prob = flip;
  c.descriptor_length = length;
  c.seed = seed;
  return generate_synthetic(c);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("scheme None yields no pairs", "[supervised][pairs]") {
  const auto d = synthetic(10, 3, 0.1, 1, 64);
  const auto p = encode_similarity(d, EncodingScheme::none(), 0);
  CHECK(p.empty());
}

TEST_CASE("hard triplets on a 4-element toy set", "[supervised][pairs]") {
  LabeledDataset d;
  d.descriptors = {pack(std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0, 0}),
                   pack(std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 1, 1}),
                   pack(std::vector<std::uint8_t>{1, 1, 1, 1, 0, 0, 0, 0}),
                   pack(std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1, 0, 0})};
  d.labels = {1, 1, 2, 2};
  // By hand: each record's mate is its closest same-label record; closest other-label:
  //   r0 -> r2 (4 vs 6), r1 -> r2 (6 vs 8), r2 -> r0 (4 vs 6), r3 -> r0 (6 vs 8).
  const auto p = encode_similarity(d, EncodingScheme::hard_triplets(), 0);
  const std::vector<Pair> expected{{0, 1, Relation::Similar},
                                   {0, 2, Relation::Dissimilar},
                                   {0, 3, Relation::Dissimilar},
                                   {1, 2, Relation::Dissimilar},
                                   {2, 3, Relation::Similar}};
  CHECK(p.pairs == expected);
  CHECK(p.duplicates == 3);  // 8 candidates, 5 distinct
  CHECK(p.skipped_singletons == 0);
}

TEST_CASE("hard triplets match a brute-force oracle and skip singletons", "[supervised][pairs]") {
  std::mt19937_64 gen(2);
  auto d = testing::random_dataset(gen, 120, 40, 32);
  d.labels[5] = 1000;  // singleton
  const auto p = encode_similarity(d, EncodingScheme::hard_triplets(), 0);

  std::set<PairKey> expected;
  std::size_t singletons = 0;
  for (std::size_t q = 0; q < d.size(); ++q) {
    std::size_t same = d.size(), other = d.size();
    int ds = 1 << 30, dother = 1 << 30;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (j == q) continue;
      const int h = naive_hamming(d.descriptors[q], d.descriptors[j]);
      if (d.labels[j] == d.labels[q]) {
        if (h < ds) ds = h, same = j;
      } else if (h < dother) {
        dother = h, other = j;
      }
    }
    if (same == d.size()) {
      ++singletons;
      continue;
    }
    expected.insert(ordered(q, same));
    expected.insert(ordered(q, other));
  }
  CHECK(keys(p) == expected);
  CHECK(p.skipped_singletons == singletons);
  CHECK(p.skipped_singletons >= 1);
}

TEST_CASE("knn pairs match a brute-force oracle", "[supervised][pairs]") {
  std::mt19937_64 gen(3);
  auto d = testing::random_dataset(gen, 150, 30, 16);  // short codes: many ties
  for (int k : {1, 5, 20}) {
    const auto p = encode_similarity(d, EncodingScheme::nearest(k), 0);
    std::set<PairKey> expected;
    for (std::size_t q = 0; q < d.size(); ++q) {
      for (auto j : brute_knn(d, q, static_cast<std::size_t>(k))) expected.insert(ordered(q, j));
    }
    CHECK(keys(p) == expected);
    CHECK(p.size() <= d.size() * static_cast<std::size_t>(k));
    CHECK(p.size() + p.duplicates == d.size() * static_cast<std::size_t>(k));
  }
}

TEST_CASE("every pair's relation equals label agreement", "[supervised][pairs][property]") {
  const auto d = synthetic(40, 4, 0.15, 4, 128);
  for (const auto& scheme : {EncodingScheme::hard_triplets(), EncodingScheme::nearest(10),
                             EncodingScheme::fasthash(5, 8)}) {
    const auto p = encode_similarity(d, scheme, 9);
    REQUIRE_FALSE(p.empty());
    for (std::size_t t = 0; t < p.size(); ++t) {
      const auto& x = p.pairs[t];
      REQUIRE(x.i < x.j);
      REQUIRE(x.j < d.size());
      REQUIRE((x.relation == Relation::Similar) == (d.labels[x.i] == d.labels[x.j]));
      if (t > 0) REQUIRE(std::make_pair(p.pairs[t - 1].i, p.pairs[t - 1].j) < std::make_pair(x.i, x.j));
    }
  }
}

TEST_CASE("fasthash budget: knn, every same-label pair and random others", "[supervised][pairs]") {
  const auto d = synthetic(60, 5, 0.15, 5, 128);
  const int k = 4, budget = 6;
  const auto p = encode_similarity(d, EncodingScheme::fasthash(k, budget), 3);
  const auto got = keys(p);

  std::size_t same_label_pairs = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      if (d.labels[i] == d.labels[j]) {
        ++same_label_pairs;
        CHECK(got.count(ordered(i, j)) == 1);
      }
    }
    for (auto j : brute_knn(d, i, k)) CHECK(got.count(ordered(i, j)) == 1);
  }
  std::vector<int> dissimilar(d.size(), 0);
  for (const auto& x : p.pairs) {
    if (x.relation == Relation::Dissimilar) ++dissimilar[x.i], ++dissimilar[x.j];
  }
  for (int c : dissimilar) CHECK(c >= budget);
  CHECK(p.size() <= d.size() * static_cast<std::size_t>(k + budget) + same_label_pairs);

  CHECK(encode_similarity(d, EncodingScheme::fasthash(k, budget), 3).pairs == p.pairs);
  CHECK_FALSE(encode_similarity(d, EncodingScheme::fasthash(k, budget), 4).pairs == p.pairs);
}

TEST_CASE("pair cap is enforced", "[supervised][pairs]") {
  const auto d = synthetic(30, 4, 0.1, 6, 64);
  auto scheme = EncodingScheme::nearest(10);
  scheme.max_pairs = 50;
  CHECK_THROWS_AS(encode_similarity(d, scheme, 0), InvalidArgument);
}

TEST_CASE("scheme names round trip through the parser", "[supervised][pairs]") {
  for (const auto& s : {EncodingScheme::none(), EncodingScheme::hard_triplets(), EncodingScheme::nearest(7),
                        EncodingScheme::fasthash(3, 9)}) {
    const auto back = parse_scheme(s.name());
    REQUIRE(back.has_value());
    CHECK(back->name() == s.name());
  }
  CHECK(parse_scheme("20nn")->knn == 20);
  CHECK(parse_scheme("knn")->kind == EncodingScheme::Kind::Knn);
  CHECK(parse_scheme("fasthash:5")->dissimilar_budget == 100);
  CHECK_FALSE(parse_scheme("bogus").has_value());
  CHECK_FALSE(parse_scheme("knn:0").has_value());
  CHECK_FALSE(parse_scheme("knn:x").has_value());
}

TEST_CASE("pairs CSV", "[supervised][pairs]") {
  SimilarityPairs p;
  p.pairs = {{0, 3, Relation::Similar}, {1, 2, Relation::Dissimilar}};
  std::ostringstream out;
  write_pairs_csv(p, out);
  CHECK(out.str() == "i,j,relation\n0,3,similar\n1,2,dissimilar\n");
}

TEST_CASE("SPLH and BTSPLH without pairs are invariant to the unsupervised weight", "[supervised][splh]") {
  const auto d = synthetic(80, 4, 0.1, 7, 256);
  TrainConfig cfg;
  cfg.code_length = 24;
  cfg.seed = 3;
  const SimilarityPairs none;
  cfg.eta = 1.0;
  const auto a = encode_all(train_splh(d, none, cfg), d);
  cfg.eta = 100.0;
  CHECK(encode_all(train_splh(d, none, cfg), d) == a);

  cfg.lambda = 1.0;
  const auto b = encode_all(train_btsplh(d, none, cfg), d);
  cfg.lambda = 10.0;
  CHECK(encode_all(train_btsplh(d, none, cfg), d) == b);
  CHECK(b == a);
}

TEST_CASE("SPLH directions are orthonormal and deterministic", "[supervised][splh]") {
  const auto d = synthetic(80, 4, 0.1, 8, 128);
  const auto pairs = encode_similarity(d, EncodingScheme::nearest(5), 1);
  TrainConfig cfg;
  cfg.code_length = 16;
  for (auto method : {Method::Splh, Method::Btsplh}) {
    const auto m = train_method(method, d, cfg, &pairs);
    const auto& w = std::get<LinearFunctions>(m.functions).weights;
    CHECK((w * w.transpose() - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(encode_all(train_method(method, d, cfg, &pairs), d) == encode_all(m, d));
  }
}

TEST_CASE("SPLH toy: the chosen direction maximizes the objective and splits the dissimilar pair",
          "[supervised][splh]") {
  // Two similar identical records and an antipodal dissimilar pair in 2-D.
  LabeledDataset d;
  d.descriptors = {pack(std::vector<std::uint8_t>{1, 1}), pack(std::vector<std::uint8_t>{1, 1}),
                   pack(std::vector<std::uint8_t>{1, 0}), pack(std::vector<std::uint8_t>{0, 1})};
  d.labels = {0, 0, 1, 2};
  SimilarityPairs pairs;
  pairs.pairs = {{0, 1, Relation::Similar}, {2, 3, Relation::Dissimilar}};
  TrainConfig cfg;
  cfg.code_length = 1;
  const auto m = train_splh(d, pairs, cfg);
  const auto& w = std::get<LinearFunctions>(m.functions).weights;

  // Brute force over unit directions: sum of squared projections plus
  // (2 / eta) * sum over pairs of relation * p_i * p_j, on centred +-1 data.
  const Matrix x = m.preprocessing.apply_all(d);
  double best = -1e300, best_theta = 0.0;
  for (int s = 0; s < 100000; ++s) {
    const double th = std::numbers::pi * s / 100000.0;
    const Vector u = (Vector(2) << std::cos(th), std::sin(th)).finished();
    const Vector p = x * u;
    const double j = p.squaredNorm() + 2.0 / cfg.eta * (p(0) * p(1) - p(2) * p(3));
    if (j > best) best = j, best_theta = th;
  }
  const double angle = std::atan2(w(0, 1), w(0, 0));
  const double folded = std::fmod(angle + 2 * std::numbers::pi, std::numbers::pi);
  CHECK(folded == Catch::Approx(best_theta).margin(1e-4));

  const auto codes = encode_all(m, d);
  CHECK(codes.descriptors[2].bit(0) != codes.descriptors[3].bit(0));
  CHECK(codes.descriptors[0].bit(0) == codes.descriptors[1].bit(0));
}

TEST_CASE("BTSPLH pair weights after two bits match hand-computed disagreements", "[supervised][btsplh]") {
  SimilarityPairs pairs;
  pairs.pairs = {{0, 1, Relation::Similar},
                 {0, 2, Relation::Dissimilar},
                 {0, 3, Relation::Dissimilar},
                 {1, 3, Relation::Dissimilar},
                 {2, 3, Relation::Similar}};
  const std::vector<std::vector<std::uint8_t>> bits{{1, 0, 1, 1}, {1, 0, 0, 1}};
  // Distances over the two bits: (0,1)=2, (0,2)=1, (0,3)=0, (1,3)=2, (2,3)=1.
  // Only the similar pair at distance 2 and the dissimilar pair at distance 0 contradict.
  const auto w = btsplh_pair_weights(pairs, bits, 0.1);
  const std::vector<double> expected{1.1, -1.0, -1.1, -1.0, 1.0};
  REQUIRE(w.size() == expected.size());
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == Catch::Approx(expected[i]));

  const auto first = btsplh_pair_weights(pairs, {}, 0.1);
  CHECK(first == std::vector<double>{1, -1, -1, -1, 1});
}

TEST_CASE("SPLH rejects out-of-range pairs", "[supervised][splh]") {
  const auto d = synthetic(10, 3, 0.1, 9, 64);
  SimilarityPairs bad;
  bad.pairs = {{0, 1000, Relation::Similar}};
  TrainConfig cfg;
  cfg.code_length = 4;
  CHECK_THROWS_AS(train_splh(d, bad, cfg), InvalidArgument);
}

TEST_CASE("FastHash separates two clean landmarks", "[supervised][fasthash]") {
  const auto d = synthetic(2, 20, 0.05, 10, 64);
  const auto pairs = encode_similarity(d, EncodingScheme::fasthash(), 1);
  TrainConfig cfg;
  cfg.code_length = 8;
  cfg.tree_depth = 2;
  cfg.seed = 2;
  const auto m = train_fasthash(d, pairs, cfg);
  const auto codes = encode_all(m, d);
  const auto queries = all_indices(d.size());
  CHECK(precision_at_1(codes, queries) == 1.0);
  for (double acc : m.diagnostics.bit_accuracy) CHECK(acc == 1.0);
}

TEST_CASE("FastHash step-1 loss never increases and boosting beats chance", "[supervised][fasthash][property]") {
  const auto d = synthetic(50, 4, 0.15, 11, 128);
  const auto pairs = encode_similarity(d, EncodingScheme::nearest(10), 1);
  TrainConfig cfg;
  cfg.code_length = 12;
  cfg.inference_sweeps = 4;
  cfg.trees_per_bit = 3;
  const auto m = train_fasthash(d, pairs, cfg);
  const auto& trace = m.diagnostics.loss_trace;
  const std::size_t per_bit = static_cast<std::size_t>(cfg.inference_sweeps) + 1;
  REQUIRE(trace.size() == per_bit * 12);
  for (std::size_t b = 0; b < 12; ++b) {
    for (std::size_t s = 1; s < per_bit; ++s) CHECK(trace[b * per_bit + s] <= trace[b * per_bit + s - 1] + 1e-9);
  }
  REQUIRE(m.diagnostics.bit_accuracy.size() == 12);
  for (double acc : m.diagnostics.bit_accuracy) CHECK(acc >= 0.5);
  for (const auto& e : std::get<TreeFunctions>(m.functions).bits) {
    CHECK(!e.trees.empty());
    CHECK(e.trees.size() <= 3);
    for (const auto& t : e.trees) CHECK(t.depth() <= cfg.tree_depth);
    for (double a : e.alphas) CHECK(a >= 0.0);
  }
}

TEST_CASE("FastHash requires pairs and is deterministic", "[supervised][fasthash]") {
  const auto d = synthetic(20, 3, 0.1, 12, 64);
  TrainConfig cfg;
  cfg.code_length = 4;
  CHECK_THROWS_AS(train_fasthash(d, SimilarityPairs{}, cfg), InvalidArgument);
  const auto pairs = encode_similarity(d, EncodingScheme::fasthash(5, 5), 1);
  CHECK(encode_all(train_fasthash(d, pairs, cfg), d) == encode_all(train_fasthash(d, pairs, cfg), d));
}

TEST_CASE("FastHash deeper trees overfit more", "[supervised][fasthash]") {
  const auto all = synthetic(300, 4, 0.2, 13, 512);
  const auto [train, test] = split_by_landmark(all, 0.5, 1);
  const auto pairs = encode_similarity(train, EncodingScheme::fasthash(), 1);
  const auto train_q = sample_queries(train, train.size(), true, 1);
  const auto test_q = sample_queries(test, test.size(), true, 1);
  auto gap = [&](int depth) {
    TrainConfig cfg;
    cfg.code_length = 32;
    cfg.tree_depth = depth;
    cfg.seed = 5;
    const auto m = train_fasthash(train, pairs, cfg);
    return precision_at_1(encode_all(m, train), train_q) - precision_at_1(encode_all(m, test), test_q);
  };
  const double shallow = gap(1), deep = gap(6);
  INFO("gap depth 1 = " << shallow << ", depth 6 = " << deep);
  CHECK(deep > shallow);
}

TEST_CASE("SPLH trains with fewer records than input dimensions", "[supervised][splh]") {
  const auto all = synthetic(50, 4, 0.08, 1, 512);
  const auto [train, test] = split_by_landmark(all, 0.5, 0);
  REQUIRE(train.size() < 512);
  TrainConfig cfg;
  cfg.code_length = 32;
  for (auto method : {Method::Splh, Method::Btsplh}) {
    const auto m = train_method(method, train, cfg);
    const auto& w = std::get<LinearFunctions>(m.functions).weights;
    CHECK((w * w.transpose() - Matrix::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-8);
  }
}
