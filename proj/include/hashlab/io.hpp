#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace hashlab {

/// Writes through a temporary sibling file and renames it over `path`, so readers
/// never see a partial file. Throws IoError.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer);

std::string read_text_file(const std::filesystem::path& path);

namespace binio {

void put_u8(std::ostream& out, std::uint8_t v);
void put_u16(std::ostream& out, std::uint16_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);

// Readers throw FormatError(Truncated) on short input.
std::uint8_t get_u8(std::istream& in);
std::uint16_t get_u16(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
void get_bytes(std::istream& in, char* dst, std::size_t n);

}  // namespace binio

}  // namespace hashlab
