#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace menumt::io {

// Whole-file helpers. Throw menumt::Error with the path on failure.
std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view contents);

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace menumt::io
