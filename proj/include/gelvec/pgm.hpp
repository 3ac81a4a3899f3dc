#ifndef GELVEC_PGM_HPP
#define GELVEC_PGM_HPP

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace gelvec {

enum class PgmFormat { Plain /* P2 */, Raw /* P5 */ };

namespace detail {

class PgmReader {
public:
  explicit PgmReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments running to end of line.
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw FormatError(std::string("expected ") + what);
    if (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) && bytes_[pos_] != '#')
      throw FormatError(std::string("malformed ") + what);
    unsigned long value = 0;
    const auto [ptr, ec] = std::from_chars(bytes_.data() + start, bytes_.data() + pos_, value);
    if (ec != std::errc{}) throw FormatError(std::string(what) + " out of range");
    return value;
  }

  bool at_end_ignoring_space() {
    skip_space();
    return pos_ >= bytes_.size();
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::string_view rest() const { return bytes_.substr(pos_); }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline Density checked_sample(unsigned long raw, unsigned long maxval) {
  if (raw > maxval)
    throw RangeError("sample " + std::to_string(raw) + " exceeds maxval " + std::to_string(maxval));
  return static_cast<Density>(raw);
}

}  // namespace detail

// Parses a P2 or P5 graymap. With dark_is_stain the stored density is
// maxval - raw, so dark film pixels become high densities.
inline GelImage load_pgm(std::string_view bytes, bool dark_is_stain) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw FormatError("not a P2/P5 graymap (bad magic)");
  const bool raw = bytes[1] == '5';

  detail::PgmReader in(bytes.substr(2));
  if (!in.rest().empty() && !std::isspace(static_cast<unsigned char>(in.rest()[0])) && in.rest()[0] != '#')
    throw FormatError("bad magic");
  const unsigned long width = in.number("width");
  const unsigned long height = in.number("height");
  const unsigned long maxval = in.number("maxval");
  if (width == 0 || height == 0 || width > (1ul << 30) || height > (1ul << 30))
    throw FormatError("invalid dimensions");
  if (maxval == 0 || maxval > 65535) throw FormatError("maxval must be in 1..65535");

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<Density> data;
  data.reserve(count);

  if (raw) {
    // Exactly one whitespace byte separates the header from the raster.
    std::string_view rest = in.rest();
    if (rest.empty() || !std::isspace(static_cast<unsigned char>(rest[0])))
      throw FormatError("missing whitespace after header");
    rest.remove_prefix(1);
    const std::size_t bytes_per_sample = maxval < 256 ? 1 : 2;
    if (rest.size() < count * bytes_per_sample) throw FormatError("truncated raster");
    for (std::size_t i = 0; i < count; ++i) {
      unsigned long v;
      if (bytes_per_sample == 1) {
        v = static_cast<unsigned char>(rest[i]);
      } else {
        v = (static_cast<unsigned long>(static_cast<unsigned char>(rest[2 * i])) << 8) |
            static_cast<unsigned char>(rest[2 * i + 1]);
      }
      data.push_back(detail::checked_sample(v, maxval));
    }
    rest.remove_prefix(count * bytes_per_sample);
    for (char c : rest)
      if (!std::isspace(static_cast<unsigned char>(c))) throw FormatError("trailing data after raster");
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      if (in.at_end_ignoring_space()) throw FormatError("truncated raster");
      data.push_back(detail::checked_sample(in.number("sample"), maxval));
    }
    if (!in.at_end_ignoring_space()) throw FormatError("trailing data after raster");
  }

  if (dark_is_stain)
    for (Density& v : data) v = static_cast<Density>(maxval - v);
  return GelImage(static_cast<int>(width), static_cast<int>(height), static_cast<Density>(maxval),
                  std::move(data));
}

// Writes the densities as-is; load_pgm(save_pgm(img), false) == img.
inline std::string save_pgm(const GelImage& image, PgmFormat format) {
  std::string out = format == PgmFormat::Raw ? "P5\n" : "P2\n";
  out += std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n";
  out += std::to_string(image.max_density()) + "\n";
  const auto data = image.data();
  if (format == PgmFormat::Raw) {
    const bool wide = image.max_density() >= 256;
    out.reserve(out.size() + data.size() * (wide ? 2 : 1));
    for (Density v : data) {
      if (wide) out.push_back(static_cast<char>((v >> 8) & 0xff));
      out.push_back(static_cast<char>(v & 0xff));
    }
  } else {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        if (x) out.push_back(' ');
        out += std::to_string(image(x, y));
      }
      out.push_back('\n');
    }
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FileError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FileError("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FileError("write failed for " + path.string());
}

inline GelImage read_pgm(const std::filesystem::path& path, bool dark_is_stain) {
  return load_pgm(read_file(path), dark_is_stain);
}

}  // namespace gelvec

#endif  // GELVEC_PGM_HPP
