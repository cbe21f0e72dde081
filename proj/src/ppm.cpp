#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "baitradar/corpus.hpp"

namespace baitradar {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = static_cast<unsigned char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) {
      throw PpmError(PpmErrorKind::truncated, std::string("PPM header ends before ") + what);
    }
    if (!std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw PpmError(PpmErrorKind::malformed_header, std::string("PPM header: expected ") + what);
    }
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > 1'000'000) {
        throw PpmError(PpmErrorKind::malformed_header, std::string("PPM header: ") + what + " too large");
      }
      ++pos_;
    }
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

ThumbnailImage decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw PpmError(PpmErrorKind::unsupported_format, "not a PPM file");
  }
  if (bytes[1] != '6') {
    throw PpmError(PpmErrorKind::unsupported_format,
                   std::string("unsupported PNM variant P") + bytes[1] + ", only binary P6 is accepted");
  }
  HeaderReader header(bytes);
  ThumbnailImage image;
  image.width = header.read_number("width");
  image.height = header.read_number("height");
  const std::size_t maxval = header.read_number("maxval");
  if (image.width == 0 || image.height == 0) {
    throw PpmError(PpmErrorKind::malformed_header, "PPM image has zero size");
  }
  if (maxval != 255) {
    throw PpmError(PpmErrorKind::bad_maxval, "PPM maxval " + std::to_string(maxval) + " unsupported, expected 255");
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (header.pos() >= bytes.size()) throw PpmError(PpmErrorKind::truncated, "PPM has no pixel data");
  if (!std::isspace(static_cast<unsigned char>(bytes[header.pos()]))) {
    throw PpmError(PpmErrorKind::malformed_header, "PPM header not terminated by whitespace");
  }
  header.advance();

  const std::size_t expected = image.width * image.height * 3;
  const std::size_t available = bytes.size() - header.pos();
  if (available < expected) {
    throw PpmError(PpmErrorKind::truncated, "PPM payload truncated: expected " + std::to_string(expected) +
                                                " bytes, found " + std::to_string(available));
  }
  image.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header.pos()),
                    bytes.begin() + static_cast<std::ptrdiff_t>(header.pos() + expected));
  return image;
}

ThumbnailImage load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PpmError(PpmErrorKind::io, "cannot open thumbnail '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (const PpmError& e) {
    throw PpmError(e.kind(), path.string() + ": " + e.what());
  }
}

std::string encode_ppm(const ThumbnailImage& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.data.begin(), image.data.end());
  return out;
}

void write_ppm(const std::filesystem::path& path, const ThumbnailImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PpmError(PpmErrorKind::io, "cannot write thumbnail '" + path.string() + "'");
  const std::string bytes = encode_ppm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace baitradar
