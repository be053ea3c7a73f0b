#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "hashlab/errors.hpp"
#include "hashlab/hash_model.hpp"
#include "hashlab/io.hpp"

namespace hashlab {

namespace {

using namespace binio;
using Kind = FormatError::Kind;

enum class Family : std::uint8_t { Truncation = 0, Linear = 1, Spectral = 2, Kernel = 3, Spherical = 4, Trees = 5 };

void put_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
}

Matrix get_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64(in);
  }
  return m;
}

void put_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

Vector get_vector(std::istream& in, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = get_f64(in);
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get_u32(in);
  if (n > (1u << 20)) throw FormatError(Kind::Inconsistent, "BHMO string too long");
  std::string s(n, '\0');
  get_bytes(in, s.data(), n);
  return s;
}

// Guards allocations driven by header fields.
void check_count(std::uint64_t n, std::uint64_t limit, const char* what) {
  if (n > limit) throw FormatError(Kind::Inconsistent, std::string("BHMO ") + what + " count out of range");
}

}  // namespace

void write_model(const HashModel& model, std::ostream& out) {
  model.validate();
  out.write("BHMO", 4);
  put_u16(out, kModelVersion);
  put_u8(out, static_cast<std::uint8_t>(model.method));
  put_u16(out, static_cast<std::uint16_t>(model.input_dim));
  put_u16(out, static_cast<std::uint16_t>(model.code_length));
  put_u8(out, static_cast<std::uint8_t>(model.preprocessing.mapping));
  put_u16(out, static_cast<std::uint16_t>(model.preprocessing.mean.size()));
  put_vector(out, model.preprocessing.mean);

  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TruncationFunctions>) {
          put_u8(out, static_cast<std::uint8_t>(Family::Truncation));
        } else if constexpr (std::is_same_v<T, LinearFunctions>) {
          put_u8(out, static_cast<std::uint8_t>(Family::Linear));
          put_matrix(out, f.weights);
          put_vector(out, f.bias);
        } else if constexpr (std::is_same_v<T, SpectralFunctions>) {
          put_u8(out, static_cast<std::uint8_t>(Family::Spectral));
          put_u16(out, static_cast<std::uint16_t>(f.directions.rows()));
          put_matrix(out, f.directions);
          for (const auto& m : f.modes) {
            put_u16(out, static_cast<std::uint16_t>(m.direction));
            put_u32(out, static_cast<std::uint32_t>(m.frequency));
            put_f64(out, m.min);
            put_f64(out, m.range);
          }
        } else if constexpr (std::is_same_v<T, KernelFunctions>) {
          put_u8(out, static_cast<std::uint8_t>(Family::Kernel));
          put_u32(out, static_cast<std::uint32_t>(f.anchors.rows()));
          put_u8(out, static_cast<std::uint8_t>(f.kernel.kind));
          put_f64(out, f.kernel.bandwidth);
          put_matrix(out, f.anchors);
          put_matrix(out, f.weights);
          put_vector(out, f.bias);
        } else if constexpr (std::is_same_v<T, SphericalFunctions>) {
          put_u8(out, static_cast<std::uint8_t>(Family::Spherical));
          put_matrix(out, f.pivots);
          put_vector(out, f.radii);
        } else if constexpr (std::is_same_v<T, TreeFunctions>) {
          put_u8(out, static_cast<std::uint8_t>(Family::Trees));
          for (const auto& e : f.bits) {
            put_u32(out, static_cast<std::uint32_t>(e.trees.size()));
            for (std::size_t t = 0; t < e.trees.size(); ++t) {
              put_f64(out, e.alphas[t]);
              put_u32(out, static_cast<std::uint32_t>(e.trees[t].nodes.size()));
              for (const auto& n : e.trees[t].nodes) {
                put_u16(out, static_cast<std::uint16_t>(n.feature));
                put_u32(out, static_cast<std::uint32_t>(n.left));
                put_u32(out, static_cast<std::uint32_t>(n.right));
                put_u8(out, static_cast<std::uint8_t>(n.leaf));
              }
            }
          }
        }
      },
      model.functions);

  const auto& d = model.diagnostics;
  put_u32(out, static_cast<std::uint32_t>(d.iterations));
  put_u8(out, d.converged ? 1 : 0);
  put_u16(out, static_cast<std::uint16_t>(d.bit_balance.size()));
  for (double b : d.bit_balance) put_f64(out, b);
  put_u16(out, static_cast<std::uint16_t>(d.warnings.size()));
  for (const auto& w : d.warnings) put_string(out, w);
}

HashModel read_model(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, "BHMO", 4) != 0) throw FormatError(Kind::BadMagic, "not a BHMO file (bad magic)");
  const auto version = get_u16(in);
  if (version != kModelVersion) throw FormatError(Kind::BadVersion, "unsupported BHMO version " + std::to_string(version));

  HashModel m;
  const auto method = get_u8(in);
  if (method > static_cast<std::uint8_t>(Method::FastHash)) throw FormatError(Kind::Inconsistent, "unknown BHMO method tag");
  m.method = static_cast<Method>(method);
  m.input_dim = get_u16(in);
  m.code_length = get_u16(in);
  if (m.input_dim < 1 || m.input_dim > kMaxBits || m.code_length < 1 || m.code_length > kMaxBits) {
    throw FormatError(Kind::Inconsistent, "BHMO dimensions out of range");
  }
  const auto mapping = get_u8(in);
  if (mapping > 1) throw FormatError(Kind::Inconsistent, "unknown BHMO bit mapping");
  m.preprocessing.mapping = static_cast<BitMapping>(mapping);
  const auto mean_n = get_u16(in);
  check_count(mean_n, static_cast<std::uint64_t>(m.input_dim), "mean");
  m.preprocessing.mean = get_vector(in, mean_n);

  const Eigen::Index K = m.code_length;
  const Eigen::Index D = m.input_dim;
  switch (static_cast<Family>(get_u8(in))) {
    case Family::Truncation:
      m.functions = TruncationFunctions{};
      break;
    case Family::Linear: {
      LinearFunctions f;
      f.weights = get_matrix(in, K, D);
      f.bias = get_vector(in, K);
      m.functions = std::move(f);
      break;
    }
    case Family::Spectral: {
      SpectralFunctions f;
      const auto p = get_u16(in);
      check_count(p, static_cast<std::uint64_t>(D), "spectral direction");
      f.directions = get_matrix(in, p, D);
      for (Eigen::Index k = 0; k < K; ++k) {
        SpectralMode mode;
        mode.direction = get_u16(in);
        mode.frequency = static_cast<int>(get_u32(in));
        mode.min = get_f64(in);
        mode.range = get_f64(in);
        f.modes.push_back(mode);
      }
      m.functions = std::move(f);
      break;
    }
    case Family::Kernel: {
      KernelFunctions f;
      const auto t = get_u32(in);
      check_count(t, 1u << 20, "anchor");
      const auto kind = get_u8(in);
      if (kind != 0) throw FormatError(Kind::Inconsistent, "unknown BHMO kernel kind");
      f.kernel.bandwidth = get_f64(in);
      f.anchors = get_matrix(in, t, D);
      f.weights = get_matrix(in, K, t);
      f.bias = get_vector(in, K);
      m.functions = std::move(f);
      break;
    }
    case Family::Spherical: {
      SphericalFunctions f;
      f.pivots = get_matrix(in, K, D);
      f.radii = get_vector(in, K);
      m.functions = std::move(f);
      break;
    }
    case Family::Trees: {
      TreeFunctions f;
      for (Eigen::Index k = 0; k < K; ++k) {
        TreeEnsemble e;
        const auto trees = get_u32(in);
        check_count(trees, 1u << 16, "tree");
        for (std::uint32_t t = 0; t < trees; ++t) {
          e.alphas.push_back(get_f64(in));
          DecisionTree tree;
          const auto nodes = get_u32(in);
          check_count(nodes, 1u << 20, "tree node");
          for (std::uint32_t i = 0; i < nodes; ++i) {
            DecisionTree::Node n;
            n.feature = static_cast<std::int16_t>(get_u16(in));
            n.left = static_cast<std::int32_t>(get_u32(in));
            n.right = static_cast<std::int32_t>(get_u32(in));
            n.leaf = static_cast<std::int8_t>(get_u8(in));
            tree.nodes.push_back(n);
          }
          e.trees.push_back(std::move(tree));
        }
        f.bits.push_back(std::move(e));
      }
      m.functions = std::move(f);
      break;
    }
    default:
      throw FormatError(Kind::Inconsistent, "unknown BHMO function family");
  }

  auto& d = m.diagnostics;
  d.iterations = static_cast<int>(get_u32(in));
  d.converged = get_u8(in) != 0;
  const auto nb = get_u16(in);
  check_count(nb, kMaxBits, "bit balance");
  for (std::uint16_t i = 0; i < nb; ++i) d.bit_balance.push_back(get_f64(in));
  const auto nw = get_u16(in);
  for (std::uint16_t i = 0; i < nw; ++i) d.warnings.push_back(get_string(in));

  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(Kind::Inconsistent, "BHMO file has trailing bytes");
  }
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(Kind::Inconsistent, e.what());
  }
  return m;
}

void save_model(const HashModel& model, const std::filesystem::path& path) {
  write_file_atomically(path, [&](std::ostream& out) { write_model(model, out); });
}

HashModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  return read_model(in);
}

}  // namespace hashlab
