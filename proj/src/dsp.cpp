#include "auscult/dsp.hpp"

#include <cmath>
#include <numbers>

#include "auscult/error.hpp"

namespace auscult::dsp {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  if ((n & (n - 1)) != 0) fail(Errc::IoFailure, "fft size must be a power of two");

  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle =
        (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = data[i + k];
        const std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    for (auto& x : data) x /= static_cast<double>(n);
  }
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t nfft) {
  std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
  const std::size_t n = std::min(frame.size(), nfft);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {frame[i], 0.0};
  fft(buf);
  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k <= nfft / 2; ++k) power[k] = std::norm(buf[k]);
  return power;
}

std::vector<std::vector<double>> frame_signal(std::span<const double> samples,
                                              std::size_t frame_len,
                                              std::size_t hop,
                                              WindowFn window) {
  if (frame_len == 0 || hop == 0 || hop > frame_len)
    fail(Errc::TooShortForFrame, "frame_len >= hop > 0 required");
  if (samples.size() < frame_len)
    fail(Errc::TooShortForFrame, "signal shorter than one frame");

  const std::size_t count = (samples.size() - frame_len) / hop + 1;
  std::vector<double> win;
  if (window == WindowFn::Hann) win = hann_window(frame_len);

  std::vector<std::vector<double>> frames(count);
  for (std::size_t f = 0; f < count; ++f) {
    frames[f].resize(frame_len);
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < frame_len; ++i) {
      frames[f][i] = samples[start + i];
      if (window == WindowFn::Hann) frames[f][i] *= win[i];
    }
  }
  return frames;
}

}  // namespace auscult::dsp
