#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hashlab {

inline constexpr int kMaxBits = 512;
inline constexpr int kWordBits = 64;
inline constexpr int kMaxWords = kMaxBits / kWordBits;

constexpr int words_for_bits(int bits) { return (bits + kWordBits - 1) / kWordBits; }
constexpr int bytes_for_bits(int bits) { return (bits + 7) / 8; }

/// How a bit becomes a real coordinate: b -> b, or b -> 2b - 1.
enum class BitMapping : std::uint8_t { ZeroOne = 0, PlusMinusOne = 1 };

/**
 * Fixed-capacity packed bit vector of 1..512 bits (a descriptor or a hash code).
 *
 * Bit i lives in word i / 64 at position i % 64. Bits at positions >= length()
 * are always zero, so whole-word kernels (xor + popcount, equality) need no
 * masking. A default-constructed code has length 0 and only serves as a
 * placeholder in containers.
 */
class BinaryCode {
 public:
  BinaryCode() = default;
  explicit BinaryCode(int length);

  /// Copies `words` and clears everything past `length`.
  static BinaryCode from_words(std::span<const std::uint64_t> words, int length);

  /// Bytes hold bits most-significant-first: bit 8j is 0x80 of byte j.
  static BinaryCode from_bytes(std::span<const std::uint8_t> bytes, int length);
  void to_bytes(std::span<std::uint8_t> out) const;

  int length() const noexcept { return length_; }
  int word_count() const noexcept { return words_for_bits(length_); }

  bool bit(int i) const noexcept {
    return (words_[static_cast<std::size_t>(i >> 6)] >> (i & 63)) & 1u;
  }
  void set_bit(int i, bool value) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    auto& w = words_[static_cast<std::size_t>(i >> 6)];
    w = value ? (w | mask) : (w & ~mask);
  }

  std::span<const std::uint64_t> words() const noexcept {
    return {words_.data(), static_cast<std::size_t>(word_count())};
  }

  int popcount() const noexcept;

  friend bool operator==(const BinaryCode& a, const BinaryCode& b) noexcept {
    return a.length_ == b.length_ && a.words_ == b.words_;
  }

 private:
  std::array<std::uint64_t, kMaxWords> words_{};
  int length_ = 0;
};

/// Number of differing bits. Throws InvalidArgument on a length mismatch.
int hamming(const BinaryCode& a, const BinaryCode& b);

/// Word-level kernel used by the scans; both spans must have the same size.
inline int hamming_words(const std::uint64_t* a, const std::uint64_t* b, int words) noexcept {
  int d = 0;
  for (int w = 0; w < words; ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

/// First k bits of `code`; 1 <= k <= code.length().
BinaryCode truncate(const BinaryCode& code, int k);

BinaryCode complement(const BinaryCode& code);

std::vector<double> to_real(const BinaryCode& code, BitMapping mapping);
void to_real(const BinaryCode& code, BitMapping mapping, std::span<double> out);

/// Threshold at zero: value > 0 -> 1, otherwise 0.
BinaryCode sign_threshold(std::span<const double> values);

BinaryCode pack(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack(const BinaryCode& code);

/// Lower-case hex of the MSB-first byte form.
std::string to_hex(const BinaryCode& code);
BinaryCode from_hex(const std::string& hex, int length);

}  // namespace hashlab
