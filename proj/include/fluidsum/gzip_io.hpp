#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <streambuf>
#include <string>
#include <string_view>

namespace fluidsum {

// Whole-buffer gzip helpers for persisted containers. Compression parameters
// are fixed so that serialize -> deserialize -> serialize round trips are
// byte-exact on a given platform. gzip_decompress throws IntegrityError on
// corrupt or truncated input.
std::string gzip_compress(std::string_view data);
std::string gzip_decompress(std::string_view data);

// Streaming decompressor exposed as a std::streambuf, used to parse .gz
// RDF files without materializing the decompressed text. Accepts both gzip
// and raw zlib framing.
class GzipInputBuf : public std::streambuf {
public:
  explicit GzipInputBuf(std::istream& source);
  ~GzipInputBuf() override;

  GzipInputBuf(const GzipInputBuf&) = delete;
  GzipInputBuf& operator=(const GzipInputBuf&) = delete;

protected:
  int_type underflow() override;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class GzipInputStream : public std::istream {
public:
  explicit GzipInputStream(std::istream& source) : std::istream(nullptr), buf_(source) {
    rdbuf(&buf_);
  }

private:
  GzipInputBuf buf_;
};

}  // namespace fluidsum
