#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "auscult/dsp.hpp"
#include "auscult/error.hpp"
#include "auscult/features.hpp"
#include "auscult/rng.hpp"
#include "auscult/stats.hpp"
#include "test_util.hpp"

using namespace auscult;

namespace {

constexpr int kFs = 4000;

std::vector<double> sine(double hz, double seconds, double amp = 1.0,
                         int fs = kFs) {
  std::vector<double> out(static_cast<std::size_t>(seconds * fs));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = amp * std::sin(2.0 * std::numbers::pi * hz *
                            static_cast<double>(i) / fs);
  return out;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = rng.normal();
  return out;
}

}  // namespace

TEST_CASE("fft recovers a pure tone and satisfies Parseval") {
  const std::size_t n = 512;
  std::vector<std::complex<double>> data(n);
  const std::size_t bin = 37;
  for (std::size_t i = 0; i < n; ++i)
    data[i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(bin * i) /
                       static_cast<double>(n));
  auto time_copy = data;
  dsp::fft(data);

  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double mag = std::abs(data[k]);
    if (k == bin)
      CHECK(mag == doctest::Approx(n / 2.0).epsilon(1e-9));
    else
      CHECK(mag < 1e-7);
  }

  double time_energy = 0.0, freq_energy = 0.0;
  for (const auto& x : time_copy) time_energy += std::norm(x);
  for (const auto& x : data) freq_energy += std::norm(x);
  CHECK(freq_energy / static_cast<double>(n) ==
        doctest::Approx(time_energy).epsilon(1e-10));

  dsp::fft(data, true);
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::abs(data[i] - time_copy[i]) < 1e-10);
}

TEST_CASE("frame splitting counts and rejects short input") {
  const std::vector<double> x(1000, 0.0);
  const auto frames = dsp::frame_signal(x, 400, 200);
  CHECK(frames.size() == 4);  // floor((1000-400)/200)+1
  CHECK(frames[0].size() == 400);
  CHECK_FAILS_WITH(Errc::TooShortForFrame,
                   dsp::frame_signal(std::vector<double>(10, 0.0), 400, 200));
}

TEST_CASE("RMS of a unit sine is 1/sqrt(2)") {
  const auto frames = dsp::frame_signal(sine(200.0, 1.0), 400, 200);
  const auto stats = features::energy_stats(frames);
  CHECK(stats.rms[0] ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));
}

TEST_CASE("pitch tracker finds a 200 Hz tone within 2 Hz") {
  const auto frames = dsp::frame_signal(sine(200.0, 1.0), 400, 200);
  const auto contour = features::f0_contour(frames, kFs);
  std::vector<double> voiced;
  for (std::size_t i = 0; i < contour.f0.size(); ++i)
    if (contour.voiced[i]) voiced.push_back(contour.f0[i]);
  REQUIRE(!voiced.empty());
  CHECK(std::abs(stats::median(voiced) - 200.0) < 2.0);
}

TEST_CASE("pitch tracker covers the search range ends") {
  for (double hz : {60.0, 120.0, 440.0, 700.0}) {
    const auto frames = dsp::frame_signal(sine(hz, 1.0), 400, 200);
    const auto contour = features::f0_contour(frames, kFs);
    std::vector<double> voiced;
    for (std::size_t i = 0; i < contour.f0.size(); ++i)
      if (contour.voiced[i]) voiced.push_back(contour.f0[i]);
    REQUIRE(!voiced.empty());
    // octave errors would miss by far more than 5 Hz
    CHECK(std::abs(stats::median(voiced) - hz) < 5.0);
  }
}

TEST_CASE("silent frames stay unvoiced") {
  const auto frames =
      dsp::frame_signal(std::vector<double>(2000, 0.0), 400, 200);
  const auto contour = features::f0_contour(frames, kFs);
  for (bool v : contour.voiced) CHECK(!v);
}

TEST_CASE("HNR is high for a tone, undefined for noise-like frames") {
  const auto tone_frames = dsp::frame_signal(sine(200.0, 1.0), 400, 200);
  const auto tone_hnr = features::hnr(tone_frames, kFs);
  std::vector<double> defined;
  for (double v : tone_hnr)
    if (std::isfinite(v)) defined.push_back(v);
  REQUIRE(!defined.empty());
  CHECK(stats::median(defined) >= 20.0);
  for (double v : defined) CHECK(v <= 60.0);

  const auto noise_frames =
      dsp::frame_signal(white_noise(4000, 5), 400, 200);
  const auto noise_hnr = features::hnr(noise_frames, kFs);
  double low_or_na = 0.0;
  for (double v : noise_hnr)
    if (!std::isfinite(v) || v < 10.0) low_or_na += 1.0;
  CHECK(low_or_na / static_cast<double>(noise_hnr.size()) > 0.8);
}

TEST_CASE("DFA separates white noise from a random walk") {
  double noise_sum = 0.0;
  for (int seed = 0; seed < 100; ++seed)
    noise_sum += features::dfa_exponent(white_noise(4096, 100 + seed));
  const double noise_alpha = noise_sum / 100.0;
  CHECK(noise_alpha > 0.4);
  CHECK(noise_alpha < 0.6);

  double walk_sum = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    auto steps = white_noise(4096, 500 + seed);
    for (std::size_t i = 1; i < steps.size(); ++i) steps[i] += steps[i - 1];
    walk_sum += features::dfa_exponent(steps);
  }
  const double walk_alpha = walk_sum / 20.0;
  CHECK(walk_alpha > 1.25);
  CHECK(walk_alpha < 1.75);

  CHECK_FAILS_WITH(Errc::TooShortForDfa,
                   features::dfa_exponent(std::vector<double>(32, 1.0)));
}

TEST_CASE("MFCCs above c0 are invariant to amplitude scaling") {
  // Broadband input keeps every mel band well above the log floor, so the
  // gain lands entirely in c0.
  const auto x = white_noise(2000, 42);
  std::vector<double> x2 = x;
  for (double& v : x2) v *= 4.0;
  const auto frames1 = dsp::frame_signal(x, 400, 200, dsp::WindowFn::None);
  const auto frames2 = dsp::frame_signal(x2, 400, 200, dsp::WindowFn::None);
  const auto m1 = features::mfcc_matrix(frames1, kFs, 14, 26);
  const auto m2 = features::mfcc_matrix(frames2, kFs, 14, 26);
  REQUIRE(m1.size() == m2.size());
  for (std::size_t f = 0; f < m1.size(); ++f) {
    CHECK(m2[f][0] > m1[f][0]);  // c0 carries the gain
    for (std::size_t c = 1; c < m1[f].size(); ++c)
      CHECK(std::abs(m1[f][c] - m2[f][c]) < 1e-6);
  }
}

TEST_CASE("descriptive statistics oracles") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 10.0};
  CHECK(stats::mean(v) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(stats::median(v) == 3.0);
  CHECK(stats::minimum(v) == 1.0);
  CHECK(stats::maximum(v) == 10.0);
  CHECK(stats::percentile(v, 50.0) == 3.0);
  CHECK(stats::percentile(v, 0.0) == 1.0);
  CHECK(stats::percentile(v, 100.0) == 10.0);
  // interpolated quartile: index 0.25*(5-1) = 1 exactly
  CHECK(stats::percentile(v, 25.0) == 2.0);

  const std::vector<double> linear{2.0, 4.0, 6.0, 8.0};
  CHECK(stats::index_slope(linear) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(stats::abs_diff_mean(linear) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(stats::diff_stdev(linear) == doctest::Approx(0.0).epsilon(1e-12));

  // population vs sample std
  const std::vector<double> s{1.0, 2.0, 3.0};
  CHECK(stats::stdev_pop(s) ==
        doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(stats::stdev_sample(s) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isnan(stats::stdev_sample(std::vector<double>{5.0})));

  // skewness/kurtosis of a symmetric set
  const std::vector<double> sym{-1.0, 0.0, 1.0};
  CHECK(stats::skewness(sym) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("default feature registry has 370 entries and a stable hash") {
  const auto registry = features::default_registry();
  CHECK(registry.size() == 370);
  CHECK(registry.hash() == features::default_registry().hash());

  auto modified = registry;
  modified.entries[0].name = "renamed";
  CHECK(modified.hash() != registry.hash());

  // 23 contours x 16 statistics + dfa + voiced fraction
  int scalar = 0;
  for (const auto& entry : registry.entries)
    scalar += entry.statistic == features::Statistic::None;
  CHECK(scalar == 2);
}

TEST_CASE("feature extraction fills exactly the registry") {
  const auto registry = features::default_registry();
  auto samples = sine(250.0, 15.0, 0.3);
  Rng rng(9);
  for (double& v : samples) v += 0.05 * rng.normal();
  const auto fv = features::extract(samples, kFs, registry);
  CHECK(fv.values.size() == registry.size());
  CHECK(fv.na_mask.size() == registry.size());
  CHECK(fv.registry_hash == registry.hash());
  std::size_t finite = 0;
  for (std::size_t i = 0; i < fv.values.size(); ++i) {
    CHECK(fv.na_mask[i] == !std::isfinite(fv.values[i]));
    finite += std::isfinite(fv.values[i]);
  }
  // a clean tone plus noise must yield a mostly defined vector
  CHECK(finite > registry.size() * 3 / 4);
}

TEST_CASE("feature extraction is deterministic") {
  auto samples = white_noise(8000, 77);
  const auto registry = features::default_registry();
  const auto a = features::extract(samples, kFs, registry);
  const auto b = features::extract(samples, kFs, registry);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (std::isfinite(a.values[i]))
      CHECK(a.values[i] == b.values[i]);
    else
      CHECK(!std::isfinite(b.values[i]));
  }
}
