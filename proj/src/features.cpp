#include "auscult/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "auscult/csv.hpp"
#include "auscult/dsp.hpp"
#include "auscult/error.hpp"
#include "auscult/stats.hpp"

namespace auscult::features {

namespace {

constexpr double kLogFloor = 1e-10;  // on normalized amplitudes
constexpr double kF0Min = 50.0;
constexpr double kF0Max = 800.0;
constexpr double kVoicingThreshold = 0.45;
constexpr double kSilenceRms = 1e-6;

constexpr Statistic kContourStats[] = {
    Statistic::Mean,   Statistic::Std,    Statistic::Skewness,
    Statistic::Kurtosis, Statistic::Min,  Statistic::Max,
    Statistic::Median, Statistic::Q1,     Statistic::Q3,
    Statistic::Iqr,    Statistic::P01,    Statistic::P99,
    Statistic::PRange, Statistic::AbsDiffMean, Statistic::DiffStd,
    Statistic::Slope,
};

}  // namespace

const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::Mean: return "mean";
    case Statistic::Std: return "std";
    case Statistic::Skewness: return "skewness";
    case Statistic::Kurtosis: return "kurtosis";
    case Statistic::Min: return "min";
    case Statistic::Max: return "max";
    case Statistic::Median: return "median";
    case Statistic::Q1: return "q1";
    case Statistic::Q3: return "q3";
    case Statistic::Iqr: return "iqr";
    case Statistic::P01: return "p01";
    case Statistic::P99: return "p99";
    case Statistic::PRange: return "p_range";
    case Statistic::AbsDiffMean: return "adiff_mean";
    case Statistic::DiffStd: return "diff_std";
    case Statistic::Slope: return "slope";
    case Statistic::None: return "value";
  }
  return "?";
}

std::uint64_t FeatureRegistry::hash() const {
  // FNV-1a over the canonical registry description.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  std::ostringstream params;
  params << frame_length << ';' << frame_hop << ';' << mfcc_coeffs << ';'
         << mel_bands << ';' << formant_count << ';';
  feed(params.str());
  for (const auto& entry : entries) {
    feed(entry.name);
    feed(";");
  }
  return h;
}

FeatureRegistry default_registry() {
  FeatureRegistry reg;
  struct Contour {
    std::string name;
    Family family;
    int index;
  };
  std::vector<Contour> contours;
  for (int c = 0; c < reg.mfcc_coeffs; ++c) {
    std::ostringstream name;
    name << "mfcc_c" << (c < 10 ? "0" : "") << c;
    contours.push_back({name.str(), Family::Mfcc, c});
  }
  contours.push_back({"log_energy", Family::LogEnergy, -1});
  contours.push_back({"rms", Family::Rms, -1});
  contours.push_back({"f0", Family::F0, -1});
  for (int f = 1; f <= reg.formant_count; ++f)
    contours.push_back({"f" + std::to_string(f), Family::Formant, f});
  contours.push_back({"hnr", Family::Hnr, -1});
  contours.push_back({"loudness", Family::Loudness, -1});

  for (const auto& contour : contours) {
    for (Statistic stat : kContourStats) {
      reg.entries.push_back({contour.name + "_" + to_string(stat),
                             contour.family, stat, contour.index});
    }
  }
  reg.entries.push_back({"dfa_alpha", Family::Dfa, Statistic::None, -1});
  reg.entries.push_back(
      {"f0_voiced_fraction", Family::F0, Statistic::None, -2});
  return reg;
}

// --- pitch -------------------------------------------------------------------

PitchContour f0_contour(const std::vector<std::vector<double>>& frames,
                        int sample_rate) {
  PitchContour out;
  const std::size_t n_frames = frames.size();
  out.f0.assign(n_frames, stats::kNa);
  out.peak_r.assign(n_frames, 0.0);
  out.voiced.assign(n_frames, false);
  if (n_frames == 0) return out;

  const double fs = static_cast<double>(sample_rate);
  const std::size_t frame_len = frames[0].size();
  std::size_t lag_min = static_cast<std::size_t>(std::floor(fs / kF0Max));
  lag_min = std::max<std::size_t>(lag_min, 2);
  std::size_t lag_max = static_cast<std::size_t>(std::ceil(fs / kF0Min));
  if (lag_max + 2 >= frame_len) lag_max = frame_len > 3 ? frame_len - 3 : 0;
  if (lag_max <= lag_min) return out;  // nothing searchable at this rate

  std::vector<double> x(frame_len);
  // r computed for lags [lag_min-1, lag_max+1] so peaks have neighbors.
  std::vector<double> r(lag_max + 2, 0.0);

  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto& frame = frames[f];
    double m = 0.0;
    for (double v : frame) m += v;
    m /= static_cast<double>(frame_len);
    double energy = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) {
      x[i] = frame[i] - m;
      energy += x[i] * x[i];
    }
    if (std::sqrt(energy / static_cast<double>(frame_len)) < kSilenceRms)
      continue;

    // Normalized cross-correlation r(tau) over the search band.
    for (std::size_t tau = lag_min - 1; tau <= lag_max + 1; ++tau) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      const std::size_t count = frame_len - tau;
      for (std::size_t i = 0; i < count; ++i) {
        num += x[i] * x[i + tau];
        e0 += x[i] * x[i];
        e1 += x[i + tau] * x[i + tau];
      }
      const double denom = std::sqrt(e0 * e1);
      r[tau] = denom > 0.0 ? num / denom : 0.0;
    }

    double r_best = -1.0;
    for (std::size_t tau = lag_min; tau <= lag_max; ++tau)
      r_best = std::max(r_best, r[tau]);
    if (r_best < kVoicingThreshold) continue;

    // Among local maxima close to the global one, prefer the smallest lag;
    // this keeps harmonics from halving the estimate.
    std::size_t pick = 0;
    for (std::size_t tau = lag_min; tau <= lag_max; ++tau) {
      if (r[tau] >= r[tau - 1] && r[tau] >= r[tau + 1] &&
          r[tau] >= std::max(kVoicingThreshold, 0.9 * r_best)) {
        pick = tau;
        break;
      }
    }
    if (pick == 0) continue;

    // Parabolic refinement of the lag.
    const double denom = r[pick - 1] - 2.0 * r[pick] + r[pick + 1];
    double delta = 0.0;
    if (std::abs(denom) > 1e-12)
      delta = 0.5 * (r[pick - 1] - r[pick + 1]) / denom;
    delta = std::clamp(delta, -0.5, 0.5);

    out.f0[f] = fs / (static_cast<double>(pick) + delta);
    out.peak_r[f] = std::clamp(r[pick], 0.0, 1.0);
    out.voiced[f] = true;
  }
  return out;
}

// --- LPC / formants ----------------------------------------------------------

namespace {

// Levinson-Durbin; returns coefficients of A(z) = 1 + a1 z^-1 + ... or empty
// when ill-conditioned.
std::vector<double> lpc_coefficients(std::span<const double> frame, int order) {
  const std::size_t n = frame.size();
  std::vector<double> autocorr(static_cast<std::size_t>(order) + 1, 0.0);
  for (int lag = 0; lag <= order; ++lag) {
    double acc = 0.0;
    for (std::size_t i = static_cast<std::size_t>(lag); i < n; ++i)
      acc += frame[i] * frame[i - static_cast<std::size_t>(lag)];
    autocorr[static_cast<std::size_t>(lag)] = acc;
  }
  if (autocorr[0] <= 1e-18) return {};

  std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
  a[0] = 1.0;
  double error = autocorr[0];
  for (int i = 1; i <= order; ++i) {
    double acc = autocorr[static_cast<std::size_t>(i)];
    for (int j = 1; j < i; ++j)
      acc += a[static_cast<std::size_t>(j)] *
             autocorr[static_cast<std::size_t>(i - j)];
    const double k = -acc / error;
    std::vector<double> next = a;
    next[static_cast<std::size_t>(i)] = k;
    for (int j = 1; j < i; ++j)
      next[static_cast<std::size_t>(j)] +=
          k * a[static_cast<std::size_t>(i - j)];
    a = std::move(next);
    error *= (1.0 - k * k);
    if (error <= 0.0 || !std::isfinite(error)) return {};
  }
  return a;
}

// Durand-Kerner roots of the monic polynomial with the given coefficients
// (c[0] = 1, highest power first when mapped below).
std::vector<std::complex<double>> polynomial_roots(
    const std::vector<double>& poly) {
  const std::size_t degree = poly.size() - 1;
  if (degree == 0) return {};
  // Evaluate p(z) with coefficients poly[k] on z^-k turned into
  // z^degree * A(z^-1): p(w) = sum poly[k] * w^(degree-k).
  auto eval = [&](std::complex<double> w) {
    std::complex<double> acc(0.0, 0.0);
    for (double c : poly) acc = acc * w + c;
    return acc;
  };

  std::vector<std::complex<double>> roots(degree);
  const std::complex<double> seed(0.4, 0.9);
  std::complex<double> power(1.0, 0.0);
  for (auto& root : roots) {
    power *= seed;
    root = power;
  }
  for (int iter = 0; iter < 200; ++iter) {
    double worst = 0.0;
    for (std::size_t i = 0; i < degree; ++i) {
      std::complex<double> denom(1.0, 0.0);
      for (std::size_t j = 0; j < degree; ++j) {
        if (j != i) denom *= (roots[i] - roots[j]);
      }
      if (std::abs(denom) < 1e-30) continue;
      const std::complex<double> delta = eval(roots[i]) / denom;
      roots[i] -= delta;
      worst = std::max(worst, std::abs(delta));
    }
    if (worst < 1e-12) break;
  }
  return roots;
}

}  // namespace

std::vector<std::array<double, 4>> formants(
    const std::vector<std::vector<double>>& frames, int sample_rate,
    int count) {
  if (count > 4) count = 4;
  std::vector<std::array<double, 4>> out(
      frames.size(), {stats::kNa, stats::kNa, stats::kNa, stats::kNa});
  if (frames.empty()) return out;

  const double fs = static_cast<double>(sample_rate);
  // The classic 2 + fs/1000 rule yields too few pole pairs at 4 kHz to carry
  // four formants, so the order is floored at 2*count + 2.
  const int order =
      std::max(2 + sample_rate / 1000, 2 * count + 2);
  if (frames[0].size() < static_cast<std::size_t>(order) + 2) return out;

  const auto window = dsp::hann_window(frames[0].size());
  std::vector<double> buf(frames[0].size());

  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t i = 0; i < buf.size(); ++i)
      buf[i] = frames[f][i] * window[i];
    const auto lpc = lpc_coefficients(buf, order);
    if (lpc.empty()) continue;  // ill-conditioned or silent: frame masked

    std::vector<double> candidates;
    for (const auto& root : polynomial_roots(lpc)) {
      if (root.imag() <= 0.0) continue;  // keep one of each conjugate pair
      const double magnitude = std::abs(root);
      if (magnitude >= 1.0 || magnitude < 1e-6) continue;
      const double freq =
          std::atan2(root.imag(), root.real()) * fs / (2.0 * std::numbers::pi);
      if (freq < 50.0 || freq > fs / 2.0 - 50.0) continue;
      candidates.push_back(freq);
    }
    std::sort(candidates.begin(), candidates.end());
    for (int j = 0; j < count && j < static_cast<int>(candidates.size()); ++j)
      out[f][static_cast<std::size_t>(j)] =
          candidates[static_cast<std::size_t>(j)];
  }
  return out;
}

// --- HNR ---------------------------------------------------------------------

std::vector<double> hnr(const std::vector<std::vector<double>>& frames,
                        int sample_rate) {
  const PitchContour pitch = f0_contour(frames, sample_rate);
  std::vector<double> out(frames.size(), stats::kNa);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!pitch.voiced[f]) continue;
    const double r = std::clamp(pitch.peak_r[f], 1e-7, 1.0 - 1e-7);
    out[f] = std::clamp(10.0 * std::log10(r / (1.0 - r)), -60.0, 60.0);
  }
  return out;
}

// --- DFA ---------------------------------------------------------------------

double dfa_exponent(std::span<const double> samples) {
  const std::size_t n = samples.size();
  // Need at least the four dyadic box sizes 16..128 to fit four times over.
  std::vector<std::size_t> box_sizes;
  for (std::size_t size = 16; size <= n / 4; size *= 2)
    box_sizes.push_back(size);
  if (box_sizes.size() < 4)
    fail(Errc::TooShortForDfa, "fewer than 4 dyadic box sizes fit");

  const double m = stats::mean(samples);
  std::vector<double> profile(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += samples[i] - m;
    profile[i] = acc;
  }

  std::vector<double> log_n, log_f;
  for (std::size_t size : box_sizes) {
    const std::size_t boxes = n / size;
    double total_sq = 0.0;
    for (std::size_t b = 0; b < boxes; ++b) {
      // Closed-form linear detrend of the profile inside the box.
      const std::size_t start = b * size;
      const double len = static_cast<double>(size);
      const double mx = (len - 1.0) / 2.0;
      double my = 0.0;
      for (std::size_t i = 0; i < size; ++i) my += profile[start + i];
      my /= len;
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < size; ++i) {
        const double dx = static_cast<double>(i) - mx;
        sxy += dx * (profile[start + i] - my);
        sxx += dx * dx;
      }
      const double slope = sxy / sxx;
      const double intercept = my - slope * mx;
      for (std::size_t i = 0; i < size; ++i) {
        const double fit = intercept + slope * static_cast<double>(i);
        const double resid = profile[start + i] - fit;
        total_sq += resid * resid;
      }
    }
    const double fluct =
        std::sqrt(total_sq / (static_cast<double>(boxes) * static_cast<double>(size)));
    if (fluct <= 0.0) return stats::kNa;  // constant signal is degenerate
    log_n.push_back(std::log(static_cast<double>(size)));
    log_f.push_back(std::log(fluct));
  }

  const double mx = stats::mean(log_n);
  const double my = stats::mean(log_f);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sxy += (log_n[i] - mx) * (log_f[i] - my);
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
  }
  return sxy / sxx;
}

// --- MFCC / loudness ----------------------------------------------------------

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular mel filterbank as band weights over FFT bins.
std::vector<std::vector<double>> mel_filterbank(int bands, std::size_t nfft,
                                                double fs, double f_hi) {
  const std::size_t n_bins = nfft / 2 + 1;
  const double mel_hi = hz_to_mel(f_hi);
  std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) /
                         static_cast<double>(bands + 1));

  std::vector<std::vector<double>> filters(
      static_cast<std::size_t>(bands), std::vector<double>(n_bins, 0.0));
  for (int b = 0; b < bands; ++b) {
    const double lo = edges[static_cast<std::size_t>(b)];
    const double mid = edges[static_cast<std::size_t>(b) + 1];
    const double hi = edges[static_cast<std::size_t>(b) + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double freq = static_cast<double>(k) * fs / static_cast<double>(nfft);
      double w = 0.0;
      if (freq >= lo && freq <= mid && mid > lo) {
        w = (freq - lo) / (mid - lo);
      } else if (freq > mid && freq <= hi && hi > mid) {
        w = (hi - freq) / (hi - mid);
      }
      filters[static_cast<std::size_t>(b)][k] = w;
    }
  }
  return filters;
}

std::vector<std::vector<double>> windowed_power_spectra(
    const std::vector<std::vector<double>>& frames) {
  std::vector<std::vector<double>> spectra;
  spectra.reserve(frames.size());
  if (frames.empty()) return spectra;
  const std::size_t frame_len = frames[0].size();
  const std::size_t nfft = dsp::next_pow2(frame_len);
  const auto window = dsp::hann_window(frame_len);
  std::vector<double> buf(frame_len);
  for (const auto& frame : frames) {
    for (std::size_t i = 0; i < frame_len; ++i) buf[i] = frame[i] * window[i];
    spectra.push_back(dsp::power_spectrum(buf, nfft));
  }
  return spectra;
}

std::vector<std::vector<double>> mfcc_from_spectra(
    const std::vector<std::vector<double>>& spectra, int sample_rate,
    int n_coeffs, int mel_bands) {
  std::vector<std::vector<double>> coeffs;
  coeffs.reserve(spectra.size());
  if (spectra.empty()) return coeffs;
  const std::size_t nfft = (spectra[0].size() - 1) * 2;
  const double fs = static_cast<double>(sample_rate);
  const double f_hi = std::min(2000.0, fs / 2.0);
  const auto filters = mel_filterbank(mel_bands, nfft, fs, f_hi);

  std::vector<double> log_mel(static_cast<std::size_t>(mel_bands));
  for (const auto& power : spectra) {
    for (int b = 0; b < mel_bands; ++b) {
      double acc = 0.0;
      const auto& filter = filters[static_cast<std::size_t>(b)];
      for (std::size_t k = 0; k < power.size(); ++k) acc += filter[k] * power[k];
      log_mel[static_cast<std::size_t>(b)] = std::log(acc + kLogFloor);
    }
    std::vector<double> c(static_cast<std::size_t>(n_coeffs), 0.0);
    for (int k = 0; k < n_coeffs; ++k) {
      double acc = 0.0;
      for (int b = 0; b < mel_bands; ++b) {
        acc += log_mel[static_cast<std::size_t>(b)] *
               std::cos(std::numbers::pi * static_cast<double>(k) *
                        (static_cast<double>(b) + 0.5) /
                        static_cast<double>(mel_bands));
      }
      c[static_cast<std::size_t>(k)] = acc;
    }
    coeffs.push_back(std::move(c));
  }
  return coeffs;
}

std::vector<double> loudness_from_spectra(
    const std::vector<std::vector<double>>& spectra) {
  std::vector<double> out;
  out.reserve(spectra.size());
  for (const auto& power : spectra) {
    double acc = 0.0;
    for (double p : power) acc += p;
    out.push_back(std::pow(acc, 0.25));  // Stevens-style compression
  }
  return out;
}

std::array<double, 6> six_stats(std::span<const double> v) {
  return {stats::mean(v),     stats::stdev_pop(v), stats::skewness(v),
          stats::kurtosis_excess(v), stats::minimum(v), stats::maximum(v)};
}

double apply_statistic(Statistic stat, std::span<const double> v) {
  switch (stat) {
    case Statistic::Mean: return stats::mean(v);
    case Statistic::Std: return stats::stdev_pop(v);
    case Statistic::Skewness: return stats::skewness(v);
    case Statistic::Kurtosis: return stats::kurtosis_excess(v);
    case Statistic::Min: return stats::minimum(v);
    case Statistic::Max: return stats::maximum(v);
    case Statistic::Median: return stats::median(v);
    case Statistic::Q1: return stats::percentile(v, 25.0);
    case Statistic::Q3: return stats::percentile(v, 75.0);
    case Statistic::Iqr:
      return stats::percentile(v, 75.0) - stats::percentile(v, 25.0);
    case Statistic::P01: return stats::percentile(v, 1.0);
    case Statistic::P99: return stats::percentile(v, 99.0);
    case Statistic::PRange:
      return stats::percentile(v, 99.0) - stats::percentile(v, 1.0);
    case Statistic::AbsDiffMean: return stats::abs_diff_mean(v);
    case Statistic::DiffStd: return stats::diff_stdev(v);
    case Statistic::Slope: return stats::index_slope(v);
    case Statistic::None: return stats::kNa;
  }
  return stats::kNa;
}

std::vector<double> drop_na(std::span<const double> v) {
  std::vector<double> kept;
  kept.reserve(v.size());
  for (double x : v) {
    if (std::isfinite(x)) kept.push_back(x);
  }
  return kept;
}

}  // namespace

std::vector<std::vector<double>> mfcc_matrix(
    const std::vector<std::vector<double>>& frames, int sample_rate,
    int n_coeffs, int mel_bands) {
  return mfcc_from_spectra(windowed_power_spectra(frames), sample_rate,
                           n_coeffs, mel_bands);
}

std::vector<std::array<double, 6>> mfcc_stats(
    const std::vector<std::vector<double>>& frames, int sample_rate,
    int n_coeffs) {
  const auto matrix = mfcc_matrix(frames, sample_rate, n_coeffs, 26);
  std::vector<std::array<double, 6>> out(static_cast<std::size_t>(n_coeffs));
  std::vector<double> column(matrix.size());
  for (int c = 0; c < n_coeffs; ++c) {
    for (std::size_t f = 0; f < matrix.size(); ++f)
      column[f] = matrix[f][static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(c)] = six_stats(column);
  }
  return out;
}

EnergyStats energy_stats(const std::vector<std::vector<double>>& frames) {
  std::vector<double> log_energy(frames.size()), rms(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    double acc = 0.0;
    for (double x : frames[f]) acc += x * x;
    log_energy[f] = std::log(acc + kLogFloor);
    rms[f] = std::sqrt(acc / static_cast<double>(frames[f].size()));
  }
  return {six_stats(log_energy), six_stats(rms)};
}

FeatureVector extract(std::span<const double> samples, int sample_rate,
                      const FeatureRegistry& registry) {
  const std::size_t frame_len = static_cast<std::size_t>(
      std::lround(registry.frame_length * sample_rate));
  const std::size_t hop =
      static_cast<std::size_t>(std::lround(registry.frame_hop * sample_rate));
  if (samples.size() < frame_len)
    fail(Errc::TooShortForFrame, "unit shorter than one frame");

  const auto frames = dsp::frame_signal(samples, frame_len, hop);
  const auto spectra = windowed_power_spectra(frames);
  const auto mfcc = mfcc_from_spectra(spectra, sample_rate,
                                      registry.mfcc_coeffs, registry.mel_bands);
  const auto loudness = loudness_from_spectra(spectra);
  const PitchContour pitch = f0_contour(frames, sample_rate);
  const auto formant_tracks =
      formants(frames, sample_rate, registry.formant_count);

  std::vector<double> log_energy(frames.size()), rms(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    double acc = 0.0;
    for (double x : frames[f]) acc += x * x;
    log_energy[f] = std::log(acc + kLogFloor);
    rms[f] = std::sqrt(acc / static_cast<double>(frames[f].size()));
  }

  std::vector<double> hnr_track(frames.size(), stats::kNa);
  std::size_t n_voiced = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!pitch.voiced[f]) continue;
    ++n_voiced;
    const double r = std::clamp(pitch.peak_r[f], 1e-7, 1.0 - 1e-7);
    hnr_track[f] = std::clamp(10.0 * std::log10(r / (1.0 - r)), -60.0, 60.0);
  }
  const double voiced_fraction =
      static_cast<double>(n_voiced) / static_cast<double>(frames.size());

  double dfa = stats::kNa;
  bool dfa_ok = true;
  try {
    dfa = dfa_exponent(samples);
  } catch (const Error& e) {
    if (e.code() != Errc::TooShortForDfa) throw;
    dfa_ok = false;
  }
  (void)dfa_ok;

  // Contour columns gathered once; statistics run over valid values only.
  std::vector<double> column;
  auto contour_values = [&](Family family, int index) -> std::vector<double> {
    column.clear();
    switch (family) {
      case Family::Mfcc:
        for (const auto& row : mfcc)
          column.push_back(row[static_cast<std::size_t>(index)]);
        break;
      case Family::LogEnergy: column = log_energy; break;
      case Family::Rms: column = rms; break;
      case Family::Loudness: column = loudness; break;
      case Family::F0: column = drop_na(pitch.f0); break;
      case Family::Hnr: column = drop_na(hnr_track); break;
      case Family::Formant: {
        std::vector<double> track(frames.size());
        for (std::size_t f = 0; f < frames.size(); ++f)
          track[f] = formant_tracks[f][static_cast<std::size_t>(index - 1)];
        column = drop_na(track);
        break;
      }
      case Family::Dfa: break;
    }
    return column;
  };

  FeatureVector fv;
  fv.registry_hash = registry.hash();
  fv.values.reserve(registry.size());
  fv.na_mask.reserve(registry.size());
  for (const auto& entry : registry.entries) {
    double value = stats::kNa;
    if (entry.family == Family::Dfa) {
      value = dfa;
    } else if (entry.family == Family::F0 && entry.statistic == Statistic::None) {
      value = voiced_fraction;
    } else {
      const auto values = contour_values(entry.family, entry.index);
      if (!values.empty()) value = apply_statistic(entry.statistic, values);
    }
    const bool masked = !std::isfinite(value);
    fv.values.push_back(masked ? stats::kNa : value);
    fv.na_mask.push_back(masked);
  }
  return fv;
}

// --- feature table I/O ---------------------------------------------------------

namespace {

std::string format_value(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_feature_table(const std::filesystem::path& csv_path,
                        const FeatureTable& table) {
  std::ofstream out(csv_path);
  if (!out) fail(Errc::IoFailure, "cannot write " + csv_path.string());
  out << "subject,channel,side,level,window,n_windows";
  for (const auto& entry : table.registry.entries) out << ',' << entry.name;
  out << '\n';
  for (const auto& unit : table.units) {
    out << unit.subject_code << ',' << unit.channel << ','
        << audio::to_string(unit.side) << ',' << audio::to_string(unit.level)
        << ',' << unit.window_index << ',' << unit.n_windows;
    for (double v : unit.fv.values) out << ',' << format_value(v);
    out << '\n';
  }
  if (!out) fail(Errc::IoFailure, "short write to " + csv_path.string());

  nlohmann::ordered_json manifest;
  manifest["registry_hash"] = table.registry.hash();
  manifest["n_features"] = table.registry.size();
  manifest["frame_length_s"] = table.registry.frame_length;
  manifest["frame_hop_s"] = table.registry.frame_hop;
  manifest["mfcc_coeffs"] = table.registry.mfcc_coeffs;
  manifest["mel_bands"] = table.registry.mel_bands;
  manifest["formant_count"] = table.registry.formant_count;
  std::ofstream mout(csv_path.string() + ".manifest.json");
  if (!mout) fail(Errc::IoFailure, "cannot write feature manifest");
  mout << manifest.dump(2) << '\n';
}

FeatureTable load_feature_table(const std::filesystem::path& csv_path) {
  const csv::Table raw = csv::read_file(csv_path);
  constexpr std::size_t kIdCols = 6;
  if (raw.header.size() < kIdCols + 1)
    fail(Errc::IoFailure, "feature csv missing columns");

  FeatureTable table;
  table.registry.entries.clear();
  for (std::size_t c = kIdCols; c < raw.header.size(); ++c)
    table.registry.entries.push_back(
        {raw.header[c], Family::Mfcc, Statistic::None, -1});

  const std::filesystem::path manifest_path(csv_path.string() +
                                            ".manifest.json");
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream min(manifest_path);
    nlohmann::json manifest = nlohmann::json::parse(min);
    table.registry.frame_length = manifest.value("frame_length_s", 0.1);
    table.registry.frame_hop = manifest.value("frame_hop_s", 0.05);
    table.registry.mfcc_coeffs = manifest.value("mfcc_coeffs", 14);
    table.registry.mel_bands = manifest.value("mel_bands", 26);
    table.registry.formant_count = manifest.value("formant_count", 4);
  }

  const std::uint64_t hash = table.registry.hash();
  for (const auto& row : raw.rows) {
    if (row.size() != raw.header.size())
      fail(Errc::IoFailure, "feature csv row width mismatch");
    UnitFeatures unit;
    unit.subject_code = row[0];
    unit.channel = std::stoi(row[1]);
    unit.side = audio::side_from_string(row[2]);
    unit.level = audio::level_from_string(row[3]);
    unit.window_index = std::stoi(row[4]);
    unit.n_windows = std::stoi(row[5]);
    unit.fv.registry_hash = hash;
    for (std::size_t c = kIdCols; c < row.size(); ++c) {
      if (row[c] == "NA") {
        unit.fv.values.push_back(stats::kNa);
        unit.fv.na_mask.push_back(true);
      } else {
        unit.fv.values.push_back(std::stod(row[c]));
        unit.fv.na_mask.push_back(false);
      }
    }
    table.units.push_back(std::move(unit));
  }
  return table;
}

}  // namespace auscult::features
