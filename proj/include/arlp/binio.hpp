#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

// Little-endian binary stream helpers for the cube and checkpoint formats.
// Byte order is explicit so the files are portable across hosts.

namespace arlp::io {

void put_u8(std::ostream& out, std::uint8_t v);
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
void put_string(std::ostream& out, const std::string& s);  // u32 length + bytes

// All getters throw DataError on truncated input.
std::uint8_t get_u8(std::istream& in);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
std::string get_string(std::istream& in);

void expect_magic(std::istream& in, const char* magic, const char* what);

}  // namespace arlp::io
