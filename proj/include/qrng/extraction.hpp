#pragma once

// Binarization against the sample mean and XOR extraction over packed bit
// streams. Bits are packed MSB-first; the final partial byte is zero-padded.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "qrng/error.hpp"
#include "qrng/signal.hpp"

namespace qrng {

enum class Provenance { raw, xor_extracted };

inline const char* to_string(Provenance p) { return p == Provenance::raw ? "raw" : "xor-extracted"; }

inline Provenance provenance_from_string(std::string_view s) {
  if (s == "raw") return Provenance::raw;
  if (s == "xor-extracted") return Provenance::xor_extracted;
  throw InvalidParameter("unknown provenance '" + std::string(s) + "'");
}

class BitStream {
 public:
  BitStream() = default;
  explicit BitStream(Provenance provenance, double generation_rate = 0.0)
      : provenance_(provenance), generation_rate_(generation_rate) {}

  /// Adopt packed bytes; bits past `length` must be zero.
  static BitStream from_bytes(std::vector<std::uint8_t> bytes, std::size_t length,
                              Provenance provenance = Provenance::raw, double generation_rate = 0.0) {
    detail::require(length <= 8 * bytes.size(), "bit stream: length exceeds packed byte count");
    bytes.resize((length + 7) / 8);
    BitStream s(provenance, generation_rate);
    s.bytes_ = std::move(bytes);
    s.length_ = length;
    s.clear_padding();
    return s;
  }

  /// From a string of '0'/'1' characters (whitespace ignored).
  static BitStream from_string(std::string_view bits, Provenance provenance = Provenance::raw) {
    BitStream s(provenance);
    for (char c : bits) {
      if (c == '0' || c == '1') s.push_back(c == '1');
      else if (c != ' ' && c != '_') throw InvalidParameter("bit string may only contain 0 and 1");
    }
    return s;
  }

  [[nodiscard]] std::size_t size() const { return length_; }
  [[nodiscard]] bool empty() const { return length_ == 0; }
  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return bytes_; }
  [[nodiscard]] Provenance provenance() const { return provenance_; }
  [[nodiscard]] double generation_rate() const { return generation_rate_; }
  void set_generation_rate(double rate) { generation_rate_ = rate; }

  [[nodiscard]] bool operator[](std::size_t i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1U; }

  void push_back(bool bit) {
    if ((length_ & 7) == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (length_ & 7));
    ++length_;
  }

  /// Bit-level append; provenance and rate of *this are kept.
  void append(const BitStream& other) {
    if ((length_ & 7) == 0) {
      bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
      length_ += other.length_;
      return;
    }
    const unsigned shift = length_ & 7;
    bytes_.reserve((length_ + other.length_ + 7) / 8);
    for (std::uint8_t b : other.bytes_) {
      bytes_.back() |= static_cast<std::uint8_t>(b >> shift);
      bytes_.push_back(static_cast<std::uint8_t>(b << (8 - shift)));
    }
    length_ += other.length_;
    bytes_.resize((length_ + 7) / 8);
  }

  [[nodiscard]] std::size_t count_ones() const {
    std::size_t ones = 0;
    for (std::uint8_t b : bytes_) ones += static_cast<std::size_t>(std::popcount(b));
    return ones;  // padding is always zero
  }

  [[nodiscard]] std::string to_string() const {
    std::string s(length_, '0');
    for (std::size_t i = 0; i < length_; ++i) s[i] = (*this)[i] ? '1' : '0';
    return s;
  }

  /// Unpacked 0/1 values, one byte per bit.
  [[nodiscard]] std::vector<std::uint8_t> unpack() const {
    std::vector<std::uint8_t> out(length_);
    for (std::size_t i = 0; i < length_; ++i) out[i] = (*this)[i];
    return out;
  }

  friend bool operator==(const BitStream& a, const BitStream& b) {
    return a.length_ == b.length_ && a.bytes_ == b.bytes_;
  }

  void validate() const {
    detail::require(length_ > 0, "bit stream: length must be > 0");
    detail::require(length_ <= 8 * bytes_.size(), "bit stream: length exceeds packed byte count");
  }

 private:
  void clear_padding() {
    if (length_ & 7) bytes_.back() &= static_cast<std::uint8_t>(0xFFU << (8 - (length_ & 7)));
  }

  std::vector<std::uint8_t> bytes_;
  std::size_t length_ = 0;
  Provenance provenance_ = Provenance::raw;
  double generation_rate_ = 0.0;
};

/// Arithmetic mean of the samples, stored back as the series threshold.
/// Eight interleaved partial sums, combined in a fixed order.
inline double mean_threshold(SampleSeries& series) {
  detail::require(!series.values.empty(), "mean_threshold: empty series");
  const auto& v = series.values;
  const std::size_t body = v.size() / 8 * 8;
  double part[8] = {};
  for (std::size_t i = 0; i < body; i += 8)
    for (std::size_t k = 0; k < 8; ++k) part[k] += v[i + k];
  double sum = ((part[0] + part[1]) + (part[2] + part[3])) + ((part[4] + part[5]) + (part[6] + part[7]));
  for (std::size_t i = body; i < v.size(); ++i) sum += v[i];
  const double mean = sum / static_cast<double>(v.size());
  series.threshold = mean;
  return mean;
}

namespace detail {

/// Packs values[0..8*nbytes) into out, bit = value > threshold.
inline void pack_threshold(const double* values, std::size_t nbytes, double threshold, std::uint8_t* out) {
#if defined(__SSE2__)
  // movemask yields sample i at bit i; the nibble table flips to MSB-first.
  static constexpr std::uint8_t flip[16] = {0, 8, 4, 12, 2, 10, 6, 14, 1, 9, 5, 13, 3, 11, 7, 15};
  const __m128d t = _mm_set1_pd(threshold);
  for (std::size_t j = 0; j < nbytes; ++j) {
    const double* v = values + 8 * j;
    const unsigned m = static_cast<unsigned>(_mm_movemask_pd(_mm_cmpgt_pd(_mm_loadu_pd(v), t))) |
                       (static_cast<unsigned>(_mm_movemask_pd(_mm_cmpgt_pd(_mm_loadu_pd(v + 2), t))) << 2) |
                       (static_cast<unsigned>(_mm_movemask_pd(_mm_cmpgt_pd(_mm_loadu_pd(v + 4), t))) << 4) |
                       (static_cast<unsigned>(_mm_movemask_pd(_mm_cmpgt_pd(_mm_loadu_pd(v + 6), t))) << 6);
    out[j] = static_cast<std::uint8_t>((flip[m & 15U] << 4) | flip[m >> 4]);
  }
#else
  for (std::size_t j = 0; j < nbytes; ++j) {
    const double* v = values + 8 * j;
    out[j] = static_cast<std::uint8_t>(
        (static_cast<unsigned>(v[0] > threshold) << 7) | (static_cast<unsigned>(v[1] > threshold) << 6) |
        (static_cast<unsigned>(v[2] > threshold) << 5) | (static_cast<unsigned>(v[3] > threshold) << 4) |
        (static_cast<unsigned>(v[4] > threshold) << 3) | (static_cast<unsigned>(v[5] > threshold) << 2) |
        (static_cast<unsigned>(v[6] > threshold) << 1) | static_cast<unsigned>(v[7] > threshold));
  }
#endif
}

}  // namespace detail

/// bit_i = 1 iff value_i > threshold (ties give 0).
inline BitStream binarize(std::span<const double> values, double threshold, double sample_rate = 0.0) {
  detail::require(!values.empty(), "binarize: empty series");
  const std::size_t full = values.size() / 8;
  std::vector<std::uint8_t> bytes((values.size() + 7) / 8, 0);
  detail::pack_threshold(values.data(), full, threshold, bytes.data());
  for (std::size_t i = 8 * full; i < values.size(); ++i)
    if (values[i] > threshold) bytes[full] |= static_cast<std::uint8_t>(0x80U >> (i & 7));
  return BitStream::from_bytes(std::move(bytes), values.size(), Provenance::raw, sample_rate);
}

inline BitStream binarize(const SampleSeries& series, double threshold) {
  return binarize(series.values, threshold, 1.0 / series.sampling_period.value());
}

/// Chunked multi-threaded binarize; chunks are byte-aligned so the result is
/// identical to the sequential one.
inline BitStream binarize_parallel(std::span<const double> values, double threshold, unsigned workers,
                                   double sample_rate = 0.0) {
  detail::require(!values.empty(), "binarize: empty series");
  workers = std::max(1U, workers);
  const std::size_t full = values.size() / 8;
  std::vector<std::uint8_t> bytes((values.size() + 7) / 8, 0);
  const std::size_t per_worker = (full + workers - 1) / workers;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(full, w * per_worker);
    const std::size_t end = std::min(full, begin + per_worker);
    if (begin == end) continue;
    pool.emplace_back([&, begin, end] {
      detail::pack_threshold(values.data() + 8 * begin, end - begin, threshold, bytes.data() + begin);
    });
  }
  pool.clear();
  for (std::size_t i = 8 * full; i < values.size(); ++i)
    if (values[i] > threshold) bytes[full] |= static_cast<std::uint8_t>(0x80U >> (i & 7));
  return BitStream::from_bytes(std::move(bytes), values.size(), Provenance::raw, sample_rate);
}

/// c_i = a_i XOR b_i. Two raw bits are consumed per output bit, so the output
/// rate is half the input rate.
inline BitStream xor_combine(const BitStream& a, const BitStream& b) {
  detail::require(a.size() == b.size(), "xor_combine: streams have different lengths");
  detail::require(!a.empty(), "xor_combine: empty streams");
  const auto& ab = a.bytes();
  const auto& bb = b.bytes();
  std::vector<std::uint8_t> out(ab.size());
  const std::size_t words = ab.size() / 8;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t x;
    std::uint64_t y;
    std::memcpy(&x, ab.data() + 8 * w, 8);
    std::memcpy(&y, bb.data() + 8 * w, 8);
    x ^= y;
    std::memcpy(out.data() + 8 * w, &x, 8);
  }
  for (std::size_t i = 8 * words; i < ab.size(); ++i) out[i] = ab[i] ^ bb[i];
  return BitStream::from_bytes(std::move(out), a.size(), Provenance::xor_extracted, a.generation_rate() / 2.0);
}

/// Header-free packed bytes, as consumed by external test suites.
inline void write_raw(const std::filesystem::path& path, const BitStream& bits) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto bytes = bits.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Reads a raw file; without `bit_length` every byte is taken as 8 bits.
inline BitStream read_raw(const std::filesystem::path& path, std::optional<std::size_t> bit_length = std::nullopt,
                          Provenance provenance = Provenance::raw) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t length = bit_length.value_or(8 * bytes.size());
  if (length > 8 * bytes.size())
    throw InvalidParameter("'" + path.string() + "' holds fewer bits than the declared length");
  return BitStream::from_bytes(std::move(bytes), length, provenance);
}

}  // namespace qrng
