#include "fluidsum/gzip_io.hpp"

#include <zlib.h>

#include <cstring>
#include <vector>
#include <stdexcept>

#include "fluidsum/errors.hpp"

namespace fluidsum {

namespace {
constexpr int kGzipWindow = 15 + 16;      // gzip framing
constexpr int kAutoDetectWindow = 15 + 32;  // accept gzip or zlib on input
constexpr size_t kChunk = 64 * 1024;
}  // namespace

std::string gzip_compress(std::string_view data) {
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, kGzipWindow, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw std::runtime_error("deflateInit2 failed");

  std::string out;
  std::string buf(kChunk, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = deflate(&zs, Z_FINISH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      deflateEnd(&zs);
      throw std::runtime_error("deflate failed: " + std::to_string(rc));
    }
    out.append(buf.data(), buf.size() - zs.avail_out);
  } while (rc != Z_STREAM_END);
  deflateEnd(&zs);
  return out;
}

std::string gzip_decompress(std::string_view data) {
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (inflateInit2(&zs, kAutoDetectWindow) != Z_OK)
    throw std::runtime_error("inflateInit2 failed");

  std::string out;
  std::string buf(kChunk, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IntegrityError("corrupt compressed payload (zlib rc " + std::to_string(rc) + ")");
    }
    out.append(buf.data(), buf.size() - zs.avail_out);
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IntegrityError("truncated compressed payload");
  return out;
}

// ---------------------------------------------------------------------------
// streaming input
// ---------------------------------------------------------------------------

struct GzipInputBuf::Impl {
  std::istream& src;
  z_stream zs;
  std::vector<uint8_t> in = std::vector<uint8_t>(kChunk);
  std::vector<char> out = std::vector<char>(kChunk);
  bool stream_end = false;

  explicit Impl(std::istream& s) : src(s) {
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit2(&zs, kAutoDetectWindow) != Z_OK)
      throw std::runtime_error("inflateInit2 failed");
  }
  ~Impl() { inflateEnd(&zs); }
};

GzipInputBuf::GzipInputBuf(std::istream& source) : impl_(std::make_unique<Impl>(source)) {
  setg(nullptr, nullptr, nullptr);
}

GzipInputBuf::~GzipInputBuf() = default;

GzipInputBuf::int_type GzipInputBuf::underflow() {
  if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
  Impl& im = *impl_;
  if (im.stream_end) return traits_type::eof();

  im.zs.next_out = reinterpret_cast<Bytef*>(im.out.data());
  im.zs.avail_out = static_cast<uInt>(im.out.size());

  while (im.zs.avail_out == im.out.size()) {
    if (im.zs.avail_in == 0) {
      im.src.read(reinterpret_cast<char*>(im.in.data()), static_cast<std::streamsize>(im.in.size()));
      std::streamsize got = im.src.gcount();
      if (got <= 0) {
        if (im.zs.avail_out == im.out.size()) {
          // no pending output and no more input: a clean stream must already
          // have returned Z_STREAM_END
          throw IntegrityError("truncated gzip stream");
        }
        break;
      }
      im.zs.next_in = im.in.data();
      im.zs.avail_in = static_cast<uInt>(got);
    }
    int rc = inflate(&im.zs, Z_NO_FLUSH);
    if (rc == Z_STREAM_END) {
      im.stream_end = true;
      break;
    }
    if (rc != Z_OK)
      throw IntegrityError("corrupt gzip stream (zlib rc " + std::to_string(rc) + ")");
  }

  size_t produced = im.out.size() - im.zs.avail_out;
  if (produced == 0) return traits_type::eof();
  setg(im.out.data(), im.out.data(), im.out.data() + produced);
  return traits_type::to_int_type(*gptr());
}

}  // namespace fluidsum
