#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hogtrack/fft.hpp"
#include "hogtrack/random.hpp"

namespace hogtrack {
namespace {

std::vector<Complex> random_grid(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> v(n);
  for (auto& c : v) c = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return v;
}

TEST(Fft, MatchesDirectDft) {
  auto data = random_grid(32, 1);
  const auto input = data;
  fft(data);
  for (std::size_t k = 0; k < input.size(); ++k) {
    Complex sum = 0.0;
    for (std::size_t n = 0; n < input.size(); ++n) {
      sum += input[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / double(input.size()));
    }
    EXPECT_NEAR(std::abs(sum - data[k]), 0.0, 1e-9);
  }
}

TEST(Fft, ImpulseHasFlatSpectrum) {
  std::vector<Complex> data(16, 0.0);
  data[0] = 1.0;
  fft(data);
  for (const auto& c : data) EXPECT_NEAR(std::abs(c - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Fft, RoundTrip2d) {
  auto data = random_grid(64 * 64, 2);
  const auto input = data;
  fft2d(data, 64, 64);
  fft2d(data, 64, 64, true);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(std::abs(data[i] - input[i]), 0.0, 1e-6);
}

TEST(Fft, Parseval2d) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto data = random_grid(64 * 64, 10 + seed);
    double spatial = 0.0;
    for (const auto& c : data) spatial += std::norm(c);
    fft2d(data, 64, 64);
    double spectral = 0.0;
    for (const auto& c : data) spectral += std::norm(c);
    EXPECT_NEAR(spectral / (64.0 * 64.0), spatial, 1e-6 * spatial);
  }
}

TEST(Fft, ConstantInputIsExactlyDcOnly) {
  std::vector<Complex> data(8 * 8, Complex(3.25, 0.0));
  fft2d(data, 8, 8);
  EXPECT_EQ(data[0], Complex(3.25 * 64, 0.0));
  for (std::size_t i = 1; i < data.size(); ++i) EXPECT_EQ(std::abs(data[i]), 0.0);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  std::vector<Complex> data(12);
  EXPECT_THROW(fft(data), ConfigError);
  std::vector<Complex> none;
  EXPECT_THROW(fft(none), ConfigError);
  EXPECT_TRUE(is_power_of_two(64));
  EXPECT_FALSE(is_power_of_two(48));
}

}  // namespace
}  // namespace hogtrack
