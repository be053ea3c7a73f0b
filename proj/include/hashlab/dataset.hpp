#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "hashlab/bits.hpp"

namespace hashlab {

using Label = std::uint64_t;

/// Descriptors tagged with landmark ids. All descriptors share one length.
struct LabeledDataset {
  std::vector<BinaryCode> descriptors;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return descriptors.size(); }
  int code_length() const noexcept { return descriptors.empty() ? 0 : descriptors.front().length(); }

  /// Throws InvalidArgument if counts differ, the set is empty or lengths are mixed.
  void validate() const;

  /// Subset in the order given by `indices`.
  LabeledDataset select(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Landmarks with random centroids; each descriptor flips bit i of its centroid with
/// probability min(0.49, base_flip_prob + flip_prob_slope * i).
struct SyntheticConfig {
  int n_landmarks = 1000;
  int min_per_landmark = 8;
  int max_per_landmark = 8;
  double base_flip_prob = 0.08;
  double flip_prob_slope = 0.0;
  int descriptor_length = kMaxBits;
  std::uint64_t seed = 0;

  void validate() const;
  double flip_probability(int bit) const;
};

LabeledDataset generate_synthetic(const SyntheticConfig& config);

// BHDS file format, little-endian:
//   "BHDS" | version u16 | bit length u16 | record count u64
//   then per record: label u64 | ceil(length / 8) descriptor bytes (MSB-first)
inline constexpr std::uint16_t kDatasetVersion = 1;

void write_dataset(const LabeledDataset& dataset, std::ostream& out);
LabeledDataset read_dataset(std::istream& in);
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// One `label,hex_descriptor` row per record.
void export_csv(const LabeledDataset& dataset, std::ostream& out);

/**
 * Splits by landmark: the distinct labels are shuffled with `seed` and assigned to
 * the train side until it holds at least `train_fraction` of the descriptors.
 * Both sides keep the input order of their records.
 */
std::pair<LabeledDataset, LabeledDataset> split_by_landmark(const LabeledDataset& dataset,
                                                            double train_fraction,
                                                            std::uint64_t seed);

/**
 * Up to `n` distinct indices drawn uniformly, returned in ascending order. With
 * `require_mate`, only records whose label occurs at least twice are eligible.
 */
std::vector<std::size_t> sample_queries(const LabeledDataset& dataset, std::size_t n,
                                        bool require_mate, std::uint64_t seed);

/// FNV-1a over labels and descriptor words; identifies a dataset in reports.
std::uint64_t fingerprint(const LabeledDataset& dataset);

struct DatasetSummary {
  std::size_t records = 0;
  std::size_t distinct_labels = 0;
  double mean_intra_distance = 0.0;  // over all same-label pairs
  double mean_inter_distance = 0.0;  // over sampled different-label pairs
};

DatasetSummary summarize(const LabeledDataset& dataset, std::uint64_t seed = 0);

/// True if any label appears on both sides.
bool labels_overlap(const LabeledDataset& a, const LabeledDataset& b);

}  // namespace hashlab
