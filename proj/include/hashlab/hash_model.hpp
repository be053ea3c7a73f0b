#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hashlab/bits.hpp"
#include "hashlab/dataset.hpp"
#include "hashlab/numeric.hpp"

namespace hashlab {

enum class Method : std::uint8_t {
  Truncation = 0,
  Lsh = 1,
  Sh = 2,
  Itq = 3,
  IsoH = 4,
  Dsh = 5,
  Sph = 6,
  Klsh = 7,
  Splh = 8,
  Btsplh = 9,
  FastHash = 10,
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
std::vector<Method> all_methods();

/// Binary-to-real bridge applied before every real-valued hash function.
struct Preprocessing {
  BitMapping mapping = BitMapping::PlusMinusOne;
  Vector mean;  // subtracted after mapping; empty means no centring

  void apply(const BinaryCode& code, std::span<double> out) const;
  /// One row per record.
  Matrix apply_all(const LabeledDataset& data) const;
};

/// bit k = [ w_k · x + b_k > 0 ]; row k of `weights` is w_k.
struct LinearFunctions {
  Matrix weights;
  Vector bias;
};

/// One analytic eigenfunction: sin(pi/2 + frequency * pi * (proj - min) / range) along
/// principal direction `direction`.
struct SpectralMode {
  int direction = 0;
  int frequency = 1;
  double min = 0.0;
  double range = 1.0;
};

struct SpectralFunctions {
  Matrix directions;  // P × D, one principal direction per row
  std::vector<SpectralMode> modes;
};

struct KernelSpec {
  enum class Kind : std::uint8_t { Gaussian = 0 };
  Kind kind = Kind::Gaussian;
  double bandwidth = 1.0;

  double operator()(double squared_distance) const;
};

/// bit k = [ sum_t weights(k, t) * K(anchor_t, x) + bias_k > 0 ], anchors shared by all bits.
struct KernelFunctions {
  Matrix anchors;  // T × D
  KernelSpec kernel;
  Matrix weights;  // K × T
  Vector bias;
};

/// bit k = [ ||x - pivot_k|| <= radius_k ].
struct SphericalFunctions {
  Matrix pivots;  // K × D
  Vector radii;
};

/// Depth-limited binary tree over raw descriptor bits.
struct DecisionTree {
  struct Node {
    std::int16_t feature = -1;  // -1 marks a leaf
    std::int32_t left = -1;     // taken when the feature bit is 0
    std::int32_t right = -1;    // taken when the feature bit is 1
    std::int8_t leaf = 1;       // +1 / -1 at leaves
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  int predict(const BinaryCode& x) const;
  int depth() const;
};

/// bit = [ sum_t alpha_t * tree_t(x) > 0 ].
struct TreeEnsemble {
  std::vector<DecisionTree> trees;
  std::vector<double> alphas;

  double score(const BinaryCode& x) const;
};

struct TreeFunctions {
  std::vector<TreeEnsemble> bits;
};

/// Code = first K bits of the descriptor.
struct TruncationFunctions {};

using HashFunctions = std::variant<TruncationFunctions, LinearFunctions, SpectralFunctions, KernelFunctions,
                                   SphericalFunctions, TreeFunctions>;

/// What training observed. `iterations`, `converged`, `warnings` and `bit_balance`
/// are persisted with the model; the rest only lives in memory.
struct TrainDiagnostics {
  int iterations = 0;
  bool converged = true;
  std::vector<std::string> warnings;
  std::vector<double> bit_balance;  // fraction of ones per bit on the training set

  std::vector<double> loss_trace;
  Matrix rotation;
  std::vector<double> bit_accuracy;
};

/// Trained compound hash function H = [h_1, ..., h_K]. Treat as immutable once built.
struct HashModel {
  Method method = Method::Truncation;
  int input_dim = 0;
  int code_length = 0;
  Preprocessing preprocessing;
  HashFunctions functions;
  TrainDiagnostics diagnostics;

  /// Throws InvalidArgument when shapes disagree with input_dim / code_length.
  void validate() const;
};

HashModel make_truncation_model(int input_dim, int code_length);

/// Throws InvalidArgument if descriptor.length() != model.input_dim.
BinaryCode encode(const HashModel& model, const BinaryCode& descriptor);

/// Hash bits of an already preprocessed real vector (not defined for tree or
/// truncation models, which read raw bits).
BinaryCode encode_real(const HashModel& model, std::span<const double> x);

/// Real-valued outputs before thresholding, one per bit (same path as encode_real).
std::vector<double> hash_values(const HashModel& model, std::span<const double> x);

/// Encodes every record; same labels and order. Records are split across OpenMP
/// workers, each running the single-record path.
LabeledDataset encode_all(const HashModel& model, const LabeledDataset& data);
LabeledDataset encode_all_serial(const HashModel& model, const LabeledDataset& data);

/// Fraction of ones per bit position.
std::vector<double> bit_balance(const LabeledDataset& codes);

// BHMO model container, little-endian:
//   "BHMO" | version u16 | method u8 | input_dim u16 | code_length u16
//   | mapping u8 | mean count u16 | mean f64[count]
//   | family u8 | family payload | diagnostics
// Payloads are documented in README.md.
inline constexpr std::uint16_t kModelVersion = 1;

void write_model(const HashModel& model, std::ostream& out);
HashModel read_model(std::istream& in);
void save_model(const HashModel& model, const std::filesystem::path& path);
HashModel load_model(const std::filesystem::path& path);

}  // namespace hashlab
