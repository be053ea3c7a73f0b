#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hashlab/bits.hpp"
#include "hashlab/dataset.hpp"

// Hamming linear-scan kernels. Every kernel has a serial reference version and an
// OpenMP version that partitions the queries; both write results by query slot, so
// the output is identical for any thread count.

namespace hashlab {

/// Codes stored row-major as `words` uint64 per record for cache-friendly scans.
class PackedCodes {
 public:
  PackedCodes() = default;
  explicit PackedCodes(const std::vector<BinaryCode>& codes);

  std::size_t size() const noexcept { return size_; }
  int length() const noexcept { return length_; }
  int words() const noexcept { return words_; }
  const std::uint64_t* row(std::size_t i) const noexcept { return data_.data() + i * static_cast<std::size_t>(words_); }

 private:
  std::vector<std::uint64_t> data_;
  std::size_t size_ = 0;
  int length_ = 0;
  int words_ = 0;
};

/// Nearest other record of one query; `index` is the lowest index at the minimum distance.
struct NeighbourHit {
  std::size_t index = 0;
  int distance = 0;
  bool any_tie_same_label = false;  // some record at the minimum distance shares the query label
};

/// Closest same-label and closest different-label record (lowest index on ties);
/// `npos` when no such record exists.
struct LabelledNeighbours {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t same = npos;
  std::size_t other = npos;
};

namespace serial {

std::vector<NeighbourHit> nearest(const PackedCodes& codes, std::span<const Label> labels,
                                  std::span<const std::size_t> queries);

/// k nearest other records per query, ordered by (distance, index).
std::vector<std::vector<std::size_t>> knn(const PackedCodes& codes, std::span<const std::size_t> queries,
                                          std::size_t k);

std::vector<LabelledNeighbours> closest_by_label(const PackedCodes& codes, std::span<const Label> labels,
                                                 std::span<const std::size_t> queries);

}  // namespace serial

namespace parallel {

std::vector<NeighbourHit> nearest(const PackedCodes& codes, std::span<const Label> labels,
                                  std::span<const std::size_t> queries);

std::vector<std::vector<std::size_t>> knn(const PackedCodes& codes, std::span<const std::size_t> queries,
                                          std::size_t k);

std::vector<LabelledNeighbours> closest_by_label(const PackedCodes& codes, std::span<const Label> labels,
                                                 std::span<const std::size_t> queries);

}  // namespace parallel

/// Worker count used by the parallel kernels (OpenMP max threads, 1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace hashlab
