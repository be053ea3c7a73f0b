#include "hashlab/hash_model.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "hashlab/errors.hpp"

namespace hashlab {

namespace {

constexpr std::array<std::string_view, 11> kMethodNames = {
    "truncation", "lsh", "sh", "itq", "isoh", "dsh", "sph", "klsh", "splh", "btsplh", "fasthash"};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double dot_row(const Matrix& m, Eigen::Index row, std::span<const double> x) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < m.cols(); ++d) s += m(row, d) * x[static_cast<std::size_t>(d)];
  return s;
}

double squared_distance_row(const Matrix& m, Eigen::Index row, std::span<const double> x) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < m.cols(); ++d) {
    const double diff = m(row, d) - x[static_cast<std::size_t>(d)];
    s += diff * diff;
  }
  return s;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("invalid model: " + what);
}

}  // namespace

std::string_view method_name(Method m) { return kMethodNames.at(static_cast<std::size_t>(m)); }

std::optional<Method> parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  }
  return std::nullopt;
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) out.push_back(static_cast<Method>(i));
  return out;
}

void Preprocessing::apply(const BinaryCode& code, std::span<double> out) const {
  to_real(code, mapping, out);
  if (mean.size() > 0) {
    for (Eigen::Index d = 0; d < mean.size(); ++d) out[static_cast<std::size_t>(d)] -= mean[d];
  }
}

Matrix Preprocessing::apply_all(const LabeledDataset& data) const {
  const int dim = data.code_length();
  Matrix m(static_cast<Eigen::Index>(data.size()), dim);
  std::vector<double> row(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < data.size(); ++i) {
    apply(data.descriptors[i], row);
    for (int d = 0; d < dim; ++d) m(static_cast<Eigen::Index>(i), d) = row[static_cast<std::size_t>(d)];
  }
  return m;
}

double KernelSpec::operator()(double squared_distance) const {
  return std::exp(-squared_distance / (2.0 * bandwidth * bandwidth));
}

int DecisionTree::predict(const BinaryCode& x) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    const auto& n = nodes[at];
    at = static_cast<std::size_t>(x.bit(n.feature) ? n.right : n.left);
  }
  return nodes[at].leaf;
}

int DecisionTree::depth() const {
  // Children are always appended after their parent, so one forward pass suffices.
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

double TreeEnsemble::score(const BinaryCode& x) const {
  double s = 0.0;
  for (std::size_t t = 0; t < trees.size(); ++t) s += alphas[t] * trees[t].predict(x);
  return s;
}

void HashModel::validate() const {
  require(input_dim >= 1 && input_dim <= kMaxBits, "input_dim outside [1, 512]");
  require(code_length >= 1 && code_length <= kMaxBits, "code_length outside [1, 512]");
  require(preprocessing.mean.size() == 0 || preprocessing.mean.size() == input_dim, "mean has wrong size");
  const auto K = static_cast<Eigen::Index>(code_length);
  const auto D = static_cast<Eigen::Index>(input_dim);
  std::visit(
      Overloaded{
          [&](const TruncationFunctions&) { require(code_length <= input_dim, "truncation longer than input"); },
          [&](const LinearFunctions& f) {
            require(f.weights.rows() == K && f.weights.cols() == D, "linear weights shape");
            require(f.bias.size() == K, "linear bias size");
          },
          [&](const SpectralFunctions& f) {
            require(f.directions.cols() == D && f.directions.rows() >= 1, "spectral directions shape");
            require(static_cast<Eigen::Index>(f.modes.size()) == K, "spectral mode count");
            for (const auto& m : f.modes) {
              require(m.direction >= 0 && m.direction < f.directions.rows(), "spectral mode direction");
              require(m.range > 0.0 && m.frequency >= 1, "spectral mode range/frequency");
            }
          },
          [&](const KernelFunctions& f) {
            require(f.anchors.rows() >= 1 && f.anchors.cols() == D, "kernel anchors shape");
            require(f.weights.rows() == K && f.weights.cols() == f.anchors.rows(), "kernel weights shape");
            require(f.bias.size() == K, "kernel bias size");
            require(f.kernel.bandwidth > 0.0, "kernel bandwidth must be positive");
          },
          [&](const SphericalFunctions& f) {
            require(f.pivots.rows() == K && f.pivots.cols() == D, "spherical pivots shape");
            require(f.radii.size() == K, "spherical radii size");
            require((f.radii.array() > 0.0).all(), "spherical radii must be positive");
          },
          [&](const TreeFunctions& f) {
            require(static_cast<Eigen::Index>(f.bits.size()) == K, "tree ensemble count");
            for (const auto& e : f.bits) {
              require(e.trees.size() == e.alphas.size() && !e.trees.empty(), "tree ensemble shape");
              for (const auto& t : e.trees) {
                require(!t.nodes.empty(), "empty tree");
                for (std::size_t i = 0; i < t.nodes.size(); ++i) {
                  const auto& n = t.nodes[i];
                  if (n.feature < 0) {
                    require(n.leaf == 1 || n.leaf == -1, "tree leaf must be +1 or -1");
                    continue;
                  }
                  require(n.feature < input_dim, "tree feature out of range");
                  // Children after their parent keeps every path finite.
                  require(static_cast<std::size_t>(n.left) > i && static_cast<std::size_t>(n.right) > i &&
                              static_cast<std::size_t>(n.left) < t.nodes.size() &&
                              static_cast<std::size_t>(n.right) < t.nodes.size(),
                          "tree child out of range");
                }
              }
            }
          },
      },
      functions);
}

HashModel make_truncation_model(int input_dim, int code_length) {
  HashModel m;
  m.method = Method::Truncation;
  m.input_dim = input_dim;
  m.code_length = code_length;
  m.functions = TruncationFunctions{};
  m.validate();
  return m;
}

std::vector<double> hash_values(const HashModel& model, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(model.code_length));
  std::visit(
      Overloaded{
          [&](const TruncationFunctions&) { throw InvalidArgument("truncation models read raw bits"); },
          [&](const TreeFunctions&) { throw InvalidArgument("tree models read raw bits"); },
          [&](const LinearFunctions& f) {
            for (Eigen::Index k = 0; k < f.weights.rows(); ++k) {
              out[static_cast<std::size_t>(k)] = dot_row(f.weights, k, x) + f.bias[k];
            }
          },
          [&](const SpectralFunctions& f) {
            std::vector<double> proj(static_cast<std::size_t>(f.directions.rows()));
            for (Eigen::Index p = 0; p < f.directions.rows(); ++p) {
              proj[static_cast<std::size_t>(p)] = dot_row(f.directions, p, x);
            }
            for (std::size_t k = 0; k < f.modes.size(); ++k) {
              const auto& m = f.modes[k];
              const double t = (proj[static_cast<std::size_t>(m.direction)] - m.min) / m.range;
              out[k] = std::sin(std::numbers::pi / 2 + m.frequency * std::numbers::pi * t);
            }
          },
          [&](const KernelFunctions& f) {
            std::vector<double> kv(static_cast<std::size_t>(f.anchors.rows()));
            for (Eigen::Index t = 0; t < f.anchors.rows(); ++t) {
              kv[static_cast<std::size_t>(t)] = f.kernel(squared_distance_row(f.anchors, t, x));
            }
            for (Eigen::Index k = 0; k < f.weights.rows(); ++k) {
              out[static_cast<std::size_t>(k)] = dot_row(f.weights, k, kv) + f.bias[k];
            }
          },
          [&](const SphericalFunctions& f) {
            for (Eigen::Index k = 0; k < f.pivots.rows(); ++k) {
              // Points on the sphere count as inside.
              const double r = f.radii[k];
              const double d2 = squared_distance_row(f.pivots, k, x);
              out[static_cast<std::size_t>(k)] = d2 <= r * r ? 1.0 : -1.0;
            }
          },
      },
      model.functions);
  return out;
}

BinaryCode encode_real(const HashModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.input_dim) {
    throw InvalidArgument("encode_real: vector has " + std::to_string(x.size()) + " entries, model expects " +
                          std::to_string(model.input_dim));
  }
  return sign_threshold(hash_values(model, x));
}

namespace {

BinaryCode encode_with_buffer(const HashModel& model, const BinaryCode& descriptor, std::vector<double>& buf) {
  if (descriptor.length() != model.input_dim) {
    throw InvalidArgument("encode: descriptor has " + std::to_string(descriptor.length()) +
                          " bits, model expects " + std::to_string(model.input_dim));
  }
  if (std::holds_alternative<TruncationFunctions>(model.functions)) {
    return truncate(descriptor, model.code_length);
  }
  if (const auto* trees = std::get_if<TreeFunctions>(&model.functions)) {
    BinaryCode code(model.code_length);
    for (std::size_t k = 0; k < trees->bits.size(); ++k) {
      if (trees->bits[k].score(descriptor) > 0.0) code.set_bit(static_cast<int>(k), true);
    }
    return code;
  }
  model.preprocessing.apply(descriptor, buf);
  return sign_threshold(hash_values(model, buf));
}

}  // namespace

BinaryCode encode(const HashModel& model, const BinaryCode& descriptor) {
  std::vector<double> buf(static_cast<std::size_t>(model.input_dim));
  return encode_with_buffer(model, descriptor, buf);
}

LabeledDataset encode_all_serial(const HashModel& model, const LabeledDataset& data) {
  data.validate();
  LabeledDataset out;
  out.labels = data.labels;
  out.descriptors.reserve(data.size());
  std::vector<double> buf(static_cast<std::size_t>(model.input_dim));
  for (const auto& d : data.descriptors) out.descriptors.push_back(encode_with_buffer(model, d, buf));
  return out;
}

LabeledDataset encode_all(const HashModel& model, const LabeledDataset& data) {
  data.validate();
  if (data.code_length() != model.input_dim) {
    throw InvalidArgument("encode_all: dataset has " + std::to_string(data.code_length()) +
                          "-bit descriptors, model expects " + std::to_string(model.input_dim));
  }
  LabeledDataset out;
  out.labels = data.labels;
  out.descriptors.resize(data.size());
  const auto n = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel
  {
    std::vector<double> buf(static_cast<std::size_t>(model.input_dim));
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      out.descriptors[ui] = encode_with_buffer(model, data.descriptors[ui], buf);
    }
  }
  return out;
}

std::vector<double> bit_balance(const LabeledDataset& codes) {
  codes.validate();
  const int len = codes.code_length();
  std::vector<double> ones(static_cast<std::size_t>(len), 0.0);
  for (const auto& c : codes.descriptors) {
    for (int i = 0; i < len; ++i) ones[static_cast<std::size_t>(i)] += c.bit(i) ? 1.0 : 0.0;
  }
  for (auto& v : ones) v /= static_cast<double>(codes.size());
  return ones;
}

}  // namespace hashlab
