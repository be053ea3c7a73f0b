#pragma once

#include <cstdint>

#include "hashlab/bits.hpp"

namespace hashlab {

/// Parameters shared by every trainer plus the method-specific knobs.
/// A zero iteration count selects the method default.
struct TrainConfig {
  int code_length = 64;
  std::uint64_t seed = 0;
  BitMapping mapping = BitMapping::PlusMinusOne;
  bool center = true;
  int iterations = 0;  // ITQ 50, IsoH 100, SpH 100

  // IsoH
  double isotropy_tolerance = 1e-5;

  // DSH
  int dsh_groups = 0;  // 0 -> ceil(1.5 K)
  int dsh_neighbours = 3;
  double dsh_min_balance = 0.05;
  int kmeans_iterations = 20;

  // SpH
  double sph_balance_tolerance = 0.02;
  double sph_overlap_tolerance = 0.15;

  // KLSH
  int klsh_anchors = 300;
  int klsh_subsample = 30;
  double klsh_bandwidth = 0.0;  // 0 -> median pairwise anchor distance

  // SPLH / BTSPLH
  double eta = 1.0;     // SPLH weight of the unsupervised term
  double lambda = 1.0;  // BTSPLH weight of the unsupervised term
  double correction_step = 0.1;

  // FastHash
  int tree_depth = 4;
  int trees_per_bit = 4;
  int inference_sweeps = 3;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
};

inline constexpr int kDefaultItqIterations = 50;
inline constexpr int kDefaultIsoHIterations = 100;
inline constexpr int kDefaultSphIterations = 100;

}  // namespace hashlab
