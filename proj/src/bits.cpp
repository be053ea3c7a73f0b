#include "hashlab/bits.hpp"

#include <algorithm>

#include "hashlab/errors.hpp"

namespace hashlab {

namespace {

void check_length(int length) {
  if (length < 1 || length > kMaxBits) {
    throw InvalidArgument("code length " + std::to_string(length) + " outside [1, 512]");
  }
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

BinaryCode::BinaryCode(int length) : length_(length) { check_length(length); }

BinaryCode BinaryCode::from_words(std::span<const std::uint64_t> words, int length) {
  BinaryCode code(length);
  const int n = code.word_count();
  if (static_cast<int>(words.size()) < n) {
    throw InvalidArgument("from_words: not enough words for the requested length");
  }
  std::copy_n(words.begin(), n, code.words_.begin());
  if (const int tail = length % kWordBits; tail != 0) {
    code.words_[static_cast<std::size_t>(n - 1)] &= (std::uint64_t{1} << tail) - 1;
  }
  return code;
}

BinaryCode BinaryCode::from_bytes(std::span<const std::uint8_t> bytes, int length) {
  BinaryCode code(length);
  if (static_cast<int>(bytes.size()) < bytes_for_bits(length)) {
    throw InvalidArgument("from_bytes: not enough bytes for the requested length");
  }
  for (int i = 0; i < length; ++i) {
    const std::uint8_t byte = bytes[static_cast<std::size_t>(i >> 3)];
    if ((byte >> (7 - (i & 7))) & 1u) code.set_bit(i, true);
  }
  return code;
}

void BinaryCode::to_bytes(std::span<std::uint8_t> out) const {
  const int nbytes = bytes_for_bits(length_);
  std::fill_n(out.begin(), nbytes, std::uint8_t{0});
  for (int i = 0; i < length_; ++i) {
    if (bit(i)) out[static_cast<std::size_t>(i >> 3)] |= static_cast<std::uint8_t>(0x80u >> (i & 7));
  }
}

int BinaryCode::popcount() const noexcept {
  int c = 0;
  for (auto w : words()) c += std::popcount(w);
  return c;
}

int hamming(const BinaryCode& a, const BinaryCode& b) {
  if (a.length() != b.length()) {
    throw InvalidArgument("hamming: length mismatch (" + std::to_string(a.length()) + " vs " +
                          std::to_string(b.length()) + ")");
  }
  return hamming_words(a.words().data(), b.words().data(), a.word_count());
}

BinaryCode truncate(const BinaryCode& code, int k) {
  if (k < 1 || k > code.length()) {
    throw InvalidArgument("truncate: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(code.length()) + "]");
  }
  return BinaryCode::from_words(code.words(), k);
}

BinaryCode complement(const BinaryCode& code) {
  std::array<std::uint64_t, kMaxWords> w{};
  const auto src = code.words();
  for (std::size_t i = 0; i < src.size(); ++i) w[i] = ~src[i];
  return BinaryCode::from_words(w, code.length());
}

void to_real(const BinaryCode& code, BitMapping mapping, std::span<double> out) {
  const double one = 1.0;
  const double zero = mapping == BitMapping::ZeroOne ? 0.0 : -1.0;
  for (int i = 0; i < code.length(); ++i) out[static_cast<std::size_t>(i)] = code.bit(i) ? one : zero;
}

std::vector<double> to_real(const BinaryCode& code, BitMapping mapping) {
  std::vector<double> v(static_cast<std::size_t>(code.length()));
  to_real(code, mapping, v);
  return v;
}

BinaryCode sign_threshold(std::span<const double> values) {
  BinaryCode code(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0) code.set_bit(static_cast<int>(i), true);
  }
  return code;
}

BinaryCode pack(std::span<const std::uint8_t> bits) {
  if (bits.empty() || bits.size() > static_cast<std::size_t>(kMaxBits)) {
    throw InvalidArgument("pack: need 1..512 bits, got " + std::to_string(bits.size()));
  }
  BinaryCode code(static_cast<int>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw InvalidArgument("pack: bit values must be 0 or 1");
    if (bits[i]) code.set_bit(static_cast<int>(i), true);
  }
  return code;
}

std::vector<std::uint8_t> unpack(const BinaryCode& code) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(code.length()));
  for (int i = 0; i < code.length(); ++i) bits[static_cast<std::size_t>(i)] = code.bit(i) ? 1 : 0;
  return bits;
}

std::string to_hex(const BinaryCode& code) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(bytes_for_bits(code.length())));
  code.to_bytes(bytes);
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

BinaryCode from_hex(const std::string& hex, int length) {
  const auto nbytes = static_cast<std::size_t>(bytes_for_bits(length));
  if (hex.size() != nbytes * 2) {
    throw InvalidArgument("from_hex: expected " + std::to_string(nbytes * 2) + " hex digits");
  }
  std::vector<std::uint8_t> bytes(nbytes);
  for (std::size_t i = 0; i < nbytes; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw InvalidArgument("from_hex: invalid hex digit");
    bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return BinaryCode::from_bytes(bytes, length);
}

}  // namespace hashlab
