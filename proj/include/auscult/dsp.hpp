#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace auscult::dsp {

enum class WindowFn { None, Hann };

// In-place radix-2 Cooley-Tukey; size must be a power of two.
void fft(std::vector<std::complex<double>>& data, bool inverse = false);

std::size_t next_pow2(std::size_t n);

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// One-sided power spectrum |X[k]|^2 for k = 0..nfft/2 of the zero-padded
// input. No window is applied here.
std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t nfft);

// Splits samples into frames of frame_len with the given hop.
// Frame count = floor((N - frame_len) / hop) + 1.
// Throws TooShortForFrame when N < frame_len.
std::vector<std::vector<double>> frame_signal(std::span<const double> samples,
                                              std::size_t frame_len,
                                              std::size_t hop,
                                              WindowFn window = WindowFn::None);

}  // namespace auscult::dsp
