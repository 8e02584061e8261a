#include "arlp/binio.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "arlp/errors.hpp"

namespace arlp::io {
namespace {

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, bytes);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  char buf[8];
  in.read(buf, bytes);
  if (in.gcount() != bytes) throw DataError("unexpected end of binary stream");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

void put_u8(std::ostream& out, std::uint8_t v) { put_le(out, v, 1); }
void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v, 4); }
void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v, 8); }

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_le(out, bits, 8);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint8_t get_u8(std::istream& in) { return static_cast<std::uint8_t>(get_le(in, 1)); }
std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_le(in, 4)); }
std::uint64_t get_u64(std::istream& in) { return get_le(in, 8); }

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_le(in, 8);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > (1u << 20)) throw DataError("implausible string length in binary stream");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw DataError("unexpected end of binary stream");
  return s;
}

void expect_magic(std::istream& in, const char* magic, const char* what) {
  const std::string want(magic);
  std::string got(want.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(want.size()));
  if (in.gcount() != static_cast<std::streamsize>(want.size()) || got != want)
    throw DataError(std::string(what) + ": bad magic, not a recognized file");
}

}  // namespace arlp::io
