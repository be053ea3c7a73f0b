#include "hashlab/scan.hpp"

#include <array>
#include <bit>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hashlab/errors.hpp"

namespace hashlab {

PackedCodes::PackedCodes(const std::vector<BinaryCode>& codes) {
  size_ = codes.size();
  if (size_ == 0) return;
  length_ = codes.front().length();
  words_ = words_for_bits(length_);
  data_.resize(size_ * static_cast<std::size_t>(words_));
  for (std::size_t i = 0; i < size_; ++i) {
    if (codes[i].length() != length_) throw InvalidArgument("PackedCodes: mixed code lengths");
    const auto w = codes[i].words();
    std::copy(w.begin(), w.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(words_)));
  }
}

namespace {

template <int W>
inline int dist_fixed(const std::uint64_t* a, const std::uint64_t* b) noexcept {
  int d = 0;
  for (int w = 0; w < W; ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

// Calls fn.template operator()<W>() with W == words, giving the distance loop a
// compile-time trip count.
template <class Fn>
decltype(auto) dispatch_words(int words, Fn&& fn) {
  switch (words) {
    case 1: return fn.template operator()<1>();
    case 2: return fn.template operator()<2>();
    case 3: return fn.template operator()<3>();
    case 4: return fn.template operator()<4>();
    case 5: return fn.template operator()<5>();
    case 6: return fn.template operator()<6>();
    case 7: return fn.template operator()<7>();
    default: return fn.template operator()<8>();
  }
}

template <int W>
NeighbourHit nearest_one(const PackedCodes& codes, std::span<const Label> labels, std::size_t q) {
  const std::uint64_t* qa = codes.row(q);
  const Label ql = labels[q];
  NeighbourHit hit;
  int best = std::numeric_limits<int>::max();
  for (std::size_t j = 0; j < codes.size(); ++j) {
    if (j == q) continue;
    const int d = dist_fixed<W>(qa, codes.row(j));
    if (d < best) {
      best = d;
      hit.index = j;
      hit.any_tie_same_label = labels[j] == ql;
    } else if (d == best && labels[j] == ql) {
      hit.any_tie_same_label = true;
    }
  }
  hit.distance = best;
  return hit;
}

template <int W>
std::vector<std::size_t> knn_one(const PackedCodes& codes, std::size_t q, std::size_t k,
                                 std::vector<int>& dist) {
  const std::size_t n = codes.size();
  const std::uint64_t* qa = codes.row(q);
  std::array<std::size_t, kMaxBits + 1> hist{};
  for (std::size_t j = 0; j < n; ++j) {
    if (j == q) {
      dist[j] = -1;
      continue;
    }
    const int d = dist_fixed<W>(qa, codes.row(j));
    dist[j] = d;
    ++hist[static_cast<std::size_t>(d)];
  }
  k = std::min(k, n - 1);
  // Smallest radius holding at least k records; fill by (distance, index).
  std::size_t cum = 0;
  int radius = 0;
  for (; radius <= kMaxBits; ++radius) {
    if (cum + hist[static_cast<std::size_t>(radius)] >= k) break;
    cum += hist[static_cast<std::size_t>(radius)];
  }
  std::array<std::size_t, kMaxBits + 2> start{};
  std::size_t pos = 0;
  for (int d = 0; d < radius; ++d) {
    start[static_cast<std::size_t>(d)] = pos;
    pos += hist[static_cast<std::size_t>(d)];
  }
  std::vector<std::size_t> out(k);
  std::size_t at_radius = k - cum;
  for (std::size_t j = 0; j < n; ++j) {
    const int d = dist[j];
    if (d < 0 || d > radius) continue;
    if (d < radius) {
      out[start[static_cast<std::size_t>(d)]++] = j;
    } else if (at_radius > 0) {
      out[k - at_radius] = j;
      --at_radius;
    }
  }
  return out;
}

template <int W>
LabelledNeighbours closest_one(const PackedCodes& codes, std::span<const Label> labels, std::size_t q) {
  const std::uint64_t* qa = codes.row(q);
  const Label ql = labels[q];
  LabelledNeighbours out;
  int best_same = std::numeric_limits<int>::max();
  int best_other = std::numeric_limits<int>::max();
  for (std::size_t j = 0; j < codes.size(); ++j) {
    if (j == q) continue;
    const int d = dist_fixed<W>(qa, codes.row(j));
    if (labels[j] == ql) {
      if (d < best_same) {
        best_same = d;
        out.same = j;
      }
    } else if (d < best_other) {
      best_other = d;
      out.other = j;
    }
  }
  return out;
}

void check_inputs(const PackedCodes& codes, std::size_t labels, std::span<const std::size_t> queries) {
  if (labels != codes.size()) throw InvalidArgument("scan: label count does not match code count");
  if (codes.size() < 2) throw InvalidArgument("scan: need at least two records");
  for (auto q : queries) {
    if (q >= codes.size()) throw InvalidArgument("scan: query index out of range");
  }
}

}  // namespace

namespace serial {

std::vector<NeighbourHit> nearest(const PackedCodes& codes, std::span<const Label> labels,
                                  std::span<const std::size_t> queries) {
  check_inputs(codes, labels.size(), queries);
  std::vector<NeighbourHit> out(queries.size());
  dispatch_words(codes.words(), [&]<int W>() {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = nearest_one<W>(codes, labels, queries[i]);
  });
  return out;
}

std::vector<std::vector<std::size_t>> knn(const PackedCodes& codes, std::span<const std::size_t> queries,
                                          std::size_t k) {
  check_inputs(codes, codes.size(), queries);
  std::vector<std::vector<std::size_t>> out(queries.size());
  std::vector<int> dist(codes.size());
  dispatch_words(codes.words(), [&]<int W>() {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = knn_one<W>(codes, queries[i], k, dist);
  });
  return out;
}

std::vector<LabelledNeighbours> closest_by_label(const PackedCodes& codes, std::span<const Label> labels,
                                                 std::span<const std::size_t> queries) {
  check_inputs(codes, labels.size(), queries);
  std::vector<LabelledNeighbours> out(queries.size());
  dispatch_words(codes.words(), [&]<int W>() {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = closest_one<W>(codes, labels, queries[i]);
  });
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<NeighbourHit> nearest(const PackedCodes& codes, std::span<const Label> labels,
                                  std::span<const std::size_t> queries) {
  check_inputs(codes, labels.size(), queries);
  std::vector<NeighbourHit> out(queries.size());
  const auto nq = static_cast<std::ptrdiff_t>(queries.size());
  dispatch_words(codes.words(), [&]<int W>() {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < nq; ++i) {
      out[static_cast<std::size_t>(i)] = nearest_one<W>(codes, labels, queries[static_cast<std::size_t>(i)]);
    }
  });
  return out;
}

std::vector<std::vector<std::size_t>> knn(const PackedCodes& codes, std::span<const std::size_t> queries,
                                          std::size_t k) {
  check_inputs(codes, codes.size(), queries);
  std::vector<std::vector<std::size_t>> out(queries.size());
  const auto nq = static_cast<std::ptrdiff_t>(queries.size());
  dispatch_words(codes.words(), [&]<int W>() {
#pragma omp parallel
    {
      std::vector<int> dist(codes.size());
#pragma omp for schedule(dynamic, 16)
      for (std::ptrdiff_t i = 0; i < nq; ++i) {
        out[static_cast<std::size_t>(i)] = knn_one<W>(codes, queries[static_cast<std::size_t>(i)], k, dist);
      }
    }
  });
  return out;
}

std::vector<LabelledNeighbours> closest_by_label(const PackedCodes& codes, std::span<const Label> labels,
                                                 std::span<const std::size_t> queries) {
  check_inputs(codes, labels.size(), queries);
  std::vector<LabelledNeighbours> out(queries.size());
  const auto nq = static_cast<std::ptrdiff_t>(queries.size());
  dispatch_words(codes.words(), [&]<int W>() {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < nq; ++i) {
      out[static_cast<std::size_t>(i)] = closest_one<W>(codes, labels, queries[static_cast<std::size_t>(i)]);
    }
  });
  return out;
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n >= 1) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace hashlab
