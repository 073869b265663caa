#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/extraction.hpp"
#include "support.hpp"

using namespace qrng;
using namespace qrng::literals;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("qrng-extraction-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

double ones_fraction(const BitStream& s) {
  return static_cast<double>(s.count_ones()) / static_cast<double>(s.size());
}

}  // namespace

TEST(Binarize, SmallExample) {
  SampleSeries s{1_ns, {0.2, -0.1, 0.5, 0.0}, std::nullopt, Seconds(0.0)};
  const double t = mean_threshold(s);
  EXPECT_DOUBLE_EQ(t, 0.15);
  ASSERT_TRUE(s.threshold.has_value());
  const auto bits = binarize(s, t);
  EXPECT_EQ(bits.to_string(), "1010");
  EXPECT_DOUBLE_EQ(bits.generation_rate(), 1e9);
  EXPECT_EQ(bits.provenance(), Provenance::raw);
}

TEST(Binarize, TieGivesZero) {
  const std::vector<double> v{1.0, 1.0, 2.0, 0.5, 1.0};
  EXPECT_EQ(binarize(v, 1.0).to_string(), "00100");
}

TEST(Binarize, SymmetricQuadratureSignalIsUnbiased) {
  // -sin of a zero-mean Gaussian phase is symmetric about zero.
  const std::size_t n = 1'000'000;
  auto phase = test_support::gaussian_vector(n, 17, 0.36);
  SampleSeries s{1_ns, std::vector<double>(n), std::nullopt, Seconds(0.0)};
  for (std::size_t i = 0; i < n; ++i) s.values[i] = 1.0 - 0.9 * std::sin(phase[i]);
  const auto bits = binarize(s, mean_threshold(s));
  EXPECT_NEAR(ones_fraction(bits), 0.5, 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST(Binarize, AffineTransformInvariance) {
  const auto v = test_support::gaussian_vector(10'000, 3);
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = 2.0 * v[i] + 1.0;
  SampleSeries a{1_ns, v, std::nullopt, Seconds(0.0)};
  SampleSeries b{1_ns, w, std::nullopt, Seconds(0.0)};
  EXPECT_EQ(binarize(a, mean_threshold(a)), binarize(b, mean_threshold(b)));
}

TEST(Binarize, ParallelMatchesSequential) {
  for (std::size_t n : {1u, 7u, 8u, 9u, 1000u, 123'457u}) {
    const auto v = test_support::gaussian_vector(n, n);
    const auto seq = binarize(v, 0.1);
    for (unsigned w : {1u, 2u, 3u, 8u}) EXPECT_EQ(binarize_parallel(v, 0.1, w), seq) << n << " " << w;
  }
}

TEST(Binarize, EmptyThrows) {
  const std::vector<double> v;
  EXPECT_THROW(binarize(v, 0.0), InvalidParameter);
}

TEST(Xor, SmallExample) {
  const auto a = BitStream::from_string("1010");
  const auto b = BitStream::from_string("0110");
  const auto c = xor_combine(a, b);
  EXPECT_EQ(c.to_string(), "1100");
  EXPECT_EQ(c.provenance(), Provenance::xor_extracted);
}

TEST(Xor, HalvesGenerationRate) {
  auto a = BitStream::from_string("10101");
  auto b = BitStream::from_string("00111");
  a.set_generation_rate(1e9);
  b.set_generation_rate(1e9);
  EXPECT_DOUBLE_EQ(xor_combine(a, b).generation_rate(), 0.5e9);
}

TEST(Xor, IsAnInvolution) {
  const auto a = test_support::bernoulli_stream(100'003, 1);
  const auto b = test_support::bernoulli_stream(100'003, 2);
  EXPECT_EQ(xor_combine(xor_combine(a, b), b).to_string(), a.to_string());
}

TEST(Xor, MatchesBitwiseDefinition) {
  const auto a = test_support::bernoulli_stream(1029, 5);
  const auto b = test_support::bernoulli_stream(1029, 6);
  const auto c = xor_combine(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(c[i], a[i] != b[i]) << i;
}

TEST(Xor, SquaresInjectedBias) {
  // P(1) = 0.55 in each input: output P(1) = 2p(1-p) = 0.495, bias -2 eps^2.
  const std::size_t n = 1'000'000;
  const auto a = test_support::bernoulli_stream(n, 10, 0.55);
  const auto b = test_support::bernoulli_stream(n, 11, 0.55);
  const double sigma = std::sqrt(0.495 * 0.505 / static_cast<double>(n));
  EXPECT_NEAR(ones_fraction(a), 0.55, 3.0 * std::sqrt(0.55 * 0.45 / static_cast<double>(n)));
  EXPECT_NEAR(ones_fraction(xor_combine(a, b)) - 0.5, -0.005, 3.0 * sigma);
}

TEST(Xor, LengthMismatchThrows) {
  EXPECT_THROW(xor_combine(BitStream::from_string("101"), BitStream::from_string("10")), InvalidParameter);
}

TEST(BitStreamPacking, MsbFirstWithZeroPadding) {
  const auto s = BitStream::from_string("1000000011");
  ASSERT_EQ(s.bytes().size(), 2u);
  EXPECT_EQ(s.bytes()[0], 0x80);
  EXPECT_EQ(s.bytes()[1], 0xC0);
  const auto t = BitStream::from_bytes({0xFF, 0xFF}, 10);
  EXPECT_EQ(t.bytes()[1], 0xC0);
  EXPECT_EQ(t.count_ones(), 10u);
  EXPECT_THROW(BitStream::from_bytes({0xFF}, 9), InvalidParameter);
  EXPECT_THROW(BitStream::from_string("10x"), InvalidParameter);
}

TEST(BitStreamPacking, RoundTripThroughBytes) {
  for (std::size_t n : {1u, 8u, 13u, 4096u, 4099u}) {
    const auto s = test_support::bernoulli_stream(n, n);
    const auto bytes = s.bytes();
    const auto r = BitStream::from_bytes({bytes.begin(), bytes.end()}, n);
    EXPECT_EQ(r, s);
    EXPECT_EQ(r.unpack(), s.unpack());
  }
}

TEST(BitStreamPacking, MisalignedAppend) {
  for (std::size_t first : {0u, 3u, 8u, 13u}) {
    const auto a = test_support::bernoulli_stream(first, 20);
    const auto b = test_support::bernoulli_stream(37, 21);
    auto joined = a;
    joined.append(b);
    EXPECT_EQ(joined.to_string(), a.to_string() + b.to_string()) << first;
    EXPECT_EQ(joined.count_ones(), a.count_ones() + b.count_ones());
  }
}

TEST(RawFile, RoundTrip) {
  TempDir dir;
  const auto s = test_support::bernoulli_stream(1237, 4);
  write_raw(dir.path() / "s.raw", s);
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "s.raw"), 155u);
  EXPECT_EQ(read_raw(dir.path() / "s.raw", 1237), s);
  EXPECT_EQ(read_raw(dir.path() / "s.raw").size(), 1240u);
  EXPECT_THROW(read_raw(dir.path() / "s.raw", 1241), InvalidParameter);
  EXPECT_THROW(read_raw(dir.path() / "missing.raw"), IoError);
}

TEST(RawFile, UnwritablePathIsIoError) {
  TempDir dir;
  EXPECT_THROW(write_raw(dir.path() / "no" / "such" / "dir.raw", BitStream::from_string("1")), IoError);
}
