#include "aipgame/image_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace aipgame {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

bool is_pgm_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Skips whitespace and '#' comments; returns the offset of the next token.
std::size_t skip_pgm_filler(const std::string& s, std::size_t pos) {
  while (pos < s.size()) {
    if (is_pgm_space(s[pos])) {
      ++pos;
    } else if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  return pos;
}

unsigned long parse_pgm_number(const std::string& s, std::size_t& pos, const char* what) {
  pos = skip_pgm_filler(s, pos);
  if (pos >= s.size() || s[pos] < '0' || s[pos] > '9')
    throw ParseError(std::string("PGM: expected ") + what, pos);
  unsigned long value = 0;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
    value = value * 10 + static_cast<unsigned long>(s[pos] - '0');
    if (value > 1000000000ul) throw ParseError(std::string("PGM: ") + what + " too large", pos);
    ++pos;
  }
  return value;
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

constexpr std::size_t kMaxElements = 1u << 28;  // refuse absurd allocations

}  // namespace

Tensor read_pgm(const std::filesystem::path& path) {
  const std::string s = slurp(path);
  if (s.size() < 2 || s[0] != 'P' || s[1] != '5')
    throw ParseError("PGM: missing P5 magic", 0);
  std::size_t pos = 2;
  unsigned long width = parse_pgm_number(s, pos, "width");
  unsigned long height = parse_pgm_number(s, pos, "height");
  std::size_t maxval_pos = skip_pgm_filler(s, pos);
  unsigned long maxval = parse_pgm_number(s, pos, "maxval");
  if (width == 0 || height == 0) throw ParseError("PGM: zero image dimension", pos);
  if (maxval != 255) throw ParseError("PGM: only maxval 255 is supported", maxval_pos);
  if (pos >= s.size() || !is_pgm_space(s[pos]))
    throw ParseError("PGM: expected single whitespace after maxval", pos);
  ++pos;  // exactly one separator byte before the raster

  std::size_t pixels = static_cast<std::size_t>(width) * height;
  if (pixels > kMaxElements) throw ParseError("PGM: image too large", pos);
  if (s.size() - pos < pixels)
    throw ParseError("PGM: raster truncated", s.size());

  Tensor out(Shape{height, width, 1});
  for (std::size_t i = 0; i < pixels; ++i)
    out[i] = static_cast<double>(static_cast<unsigned char>(s[pos + i]));
  return out;
}

void write_pgm(const std::filesystem::path& path, const Tensor& image) {
  ImageDims d = image_dims(image);
  if (d.channels != 1)
    throw std::invalid_argument("write_pgm: expected a single-channel image");
  Tensor q = quantize(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  out << "P5\n" << d.width << " " << d.height << "\n255\n";
  std::string raster(d.height * d.width, '\0');
  for (std::size_t i = 0; i < raster.size(); ++i)
    raster[i] = static_cast<char>(static_cast<unsigned char>(q[i]));
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

Tensor read_tensor(std::istream& in, std::size_t base_offset) {
  auto fail = [&](const char* message, std::size_t offset) -> ParseError {
    return ParseError(std::string("TNSR: ") + message, base_offset + offset);
  };

  unsigned char header[5];
  in.read(reinterpret_cast<char*>(header), 5);
  if (in.gcount() != 5) throw fail("truncated header", static_cast<std::size_t>(in.gcount()));
  if (std::memcmp(header, "TNSR", 4) != 0) throw fail("bad magic", 0);
  if (header[4] != 0x01) throw fail("unsupported version", 4);

  unsigned char word[4];
  in.read(reinterpret_cast<char*>(word), 4);
  if (in.gcount() != 4) throw fail("truncated rank", 5);
  auto rank = static_cast<std::int32_t>(get_u32_le(word));
  if (rank < 1 || rank > 8) throw fail("rank out of range", 5);

  Shape shape;
  std::size_t count = 1;
  for (std::int32_t i = 0; i < rank; ++i) {
    std::size_t offset = 9 + static_cast<std::size_t>(i) * 4;
    in.read(reinterpret_cast<char*>(word), 4);
    if (in.gcount() != 4) throw fail("truncated extents", offset);
    auto extent = static_cast<std::int32_t>(get_u32_le(word));
    if (extent <= 0) throw fail("non-positive extent", offset);
    count *= static_cast<std::size_t>(extent);
    if (count > kMaxElements) throw fail("tensor too large", offset);
    shape.push_back(static_cast<std::size_t>(extent));
  }

  std::size_t payload_offset = 9 + static_cast<std::size_t>(rank) * 4;
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(word), 4);
    if (in.gcount() != 4) throw fail("truncated payload", payload_offset + i * 4);
    std::uint32_t bits = get_u32_le(word);
    float value;
    std::memcpy(&value, &bits, 4);
    if (!std::isfinite(value)) throw fail("non-finite payload value", payload_offset + i * 4);
    data[i] = static_cast<double>(value);
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  Tensor t = read_tensor(in, 0);
  std::size_t end = static_cast<std::size_t>(in.tellg());
  in.peek();
  if (!in.eof()) throw ParseError("TNSR: trailing bytes after payload", end);
  return t;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  if (t.rank() < 1 || t.rank() > 8)
    throw std::invalid_argument("write_tensor: rank out of range");
  out.write("TNSR", 4);
  out.put(0x01);
  put_u32_le(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t extent : t.shape()) {
    if (extent > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
      throw std::invalid_argument("write_tensor: extent exceeds int32");
    put_u32_le(out, static_cast<std::uint32_t>(extent));
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto value = static_cast<float>(t[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    put_u32_le(out, bits);
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
  write_tensor(out, t);
  if (!out) throw std::runtime_error("short write: " + path.string());
}

Tensor read_image(const std::filesystem::path& path) {
  return path.extension() == ".pgm" ? read_pgm(path) : read_tensor(path);
}

}  // namespace aipgame
