#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hashlab/dataset.hpp"
#include "hashlab/hash_model.hpp"
#include "hashlab/train_config.hpp"

namespace hashlab {

enum class Relation : std::uint8_t { Similar = 0, Dissimilar = 1 };

/// Unordered pair stored with i < j.
struct Pair {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  Relation relation = Relation::Similar;

  friend bool operator==(const Pair&, const Pair&) = default;
};

struct SimilarityPairs {
  std::vector<Pair> pairs;  // sorted by (i, j), no duplicates
  std::size_t duplicates = 0;          // candidate pairs dropped as repeats
  std::size_t skipped_singletons = 0;  // hard-triplet anchors without a same-label mate

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
};

struct EncodingScheme {
  enum class Kind { None, HardTriplets, Knn, FastHashBudget };
  Kind kind = Kind::None;
  int knn = 20;
  int dissimilar_budget = 100;
  std::size_t max_pairs = 20'000'000;

  static EncodingScheme none() { return {}; }
  static EncodingScheme hard_triplets() { return {Kind::HardTriplets}; }
  static EncodingScheme nearest(int k = 20) { return {Kind::Knn, k}; }
  static EncodingScheme fasthash(int k = 20, int budget = 100) { return {Kind::FastHashBudget, k, budget}; }

  /// Round-trips through parse_scheme: none, hard, knn:20, fasthash:20:100.
  std::string name() const;
  void validate() const;
};

/// Accepts none | hard | knn[:k] | fasthash[:k[:budget]].
std::optional<EncodingScheme> parse_scheme(std::string_view text);

/**
 * Similarity constraints from landmark labels, with Hamming distances on the raw
 * descriptors and lower-index tie breaking:
 *  - HardTriplets: per record, its closest same-label and closest other-label record.
 *  - Knn(k): per record, its k nearest records; Similar iff the labels match.
 *  - FastHashBudget(k, b): per record, its k nearest records, every same-label record
 *    and b random other-label records.
 * Throws InvalidArgument once more than scheme.max_pairs distinct pairs would be stored.
 */
SimilarityPairs encode_similarity(const LabeledDataset& data, const EncodingScheme& scheme, std::uint64_t seed);

/// `i,j,relation` rows with relation `similar` / `dissimilar`.
void write_pairs_csv(const SimilarityPairs& pairs, std::ostream& out);
void save_pairs_csv(const SimilarityPairs& pairs, const std::filesystem::path& path);

/**
 * Sequential projection learning. Bit k is the top eigenvector of
 * Xᵀ S_k X / eta + Xᵀ X over the residual data; afterwards pairs the bit splits the
 * wrong way get their weight pushed further by correction_step, and X is deflated
 * along the chosen direction. Empty pairs reduce it to sequential PCA.
 */
HashModel train_splh(const LabeledDataset& data, const SimilarityPairs& pairs, const TrainConfig& config);

/**
 * Same skeleton as SPLH with `lambda` as the weight ratio, but the pair weights for
 * every bit are recomputed from the agreement of all previous bits (see
 * btsplh_pair_weights).
 */
HashModel train_btsplh(const LabeledDataset& data, const SimilarityPairs& pairs, const TrainConfig& config);

/**
 * Pair weights BTSPLH uses for its next bit. `bits[b][r]` is bit b (0/1) of record r.
 * With m previous bits and d the pair's Hamming distance over them, the agreement
 * is a = 1 - 2d/m and the contradiction c = max(0, -r a) where r = +1 for Similar and
 * -1 for Dissimilar; the weight is r (1 + step * c). With no previous bits it is r.
 */
std::vector<double> btsplh_pair_weights(const SimilarityPairs& pairs,
                                        const std::vector<std::vector<std::uint8_t>>& bits, double step);

/**
 * Two-step supervised hashing on the raw bits. Step 1 infers target bits for every
 * record that appears in a pair with greedy flips on the pairwise code loss;
 * step 2 fits a boosted ensemble of depth-limited trees per bit. The diagnostics
 * hold, per bit, the step-1 loss before and after every sweep
 * (inference_sweeps + 1 values) and the training accuracy of the ensemble.
 * Throws InvalidArgument on empty pairs.
 */
HashModel train_fasthash(const LabeledDataset& data, const SimilarityPairs& pairs, const TrainConfig& config);

}  // namespace hashlab
