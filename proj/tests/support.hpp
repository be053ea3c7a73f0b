#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hashlab/bits.hpp"
#include "hashlab/dataset.hpp"

namespace testing {

// Test inputs come from std::mt19937_64 directly, independent of the library's Rng.
inline hashlab::BinaryCode random_code(std::mt19937_64& gen, int length) {
  hashlab::BinaryCode c(length);
  for (int i = 0; i < length; ++i) c.set_bit(i, (gen() >> 63) != 0);
  return c;
}

inline std::vector<std::uint8_t> random_bits(std::mt19937_64& gen, int length) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(length));
  for (auto& b : bits) b = static_cast<std::uint8_t>(gen() >> 63);
  return bits;
}

/// `n` random codes with labels drawn from [0, n_labels).
inline hashlab::LabeledDataset random_dataset(std::mt19937_64& gen, std::size_t n, std::uint64_t n_labels, int length) {
  hashlab::LabeledDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.descriptors.push_back(random_code(gen, length));
    d.labels.push_back(gen() % n_labels);
  }
  return d;
}

/// Per-bit count, no word tricks.
inline int naive_hamming(const hashlab::BinaryCode& a, const hashlab::BinaryCode& b) {
  int d = 0;
  for (int i = 0; i < a.length(); ++i) d += a.bit(i) != b.bit(i) ? 1 : 0;
  return d;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hashlab_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
