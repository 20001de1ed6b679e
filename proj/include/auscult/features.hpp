#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "auscult/audio.hpp"

namespace auscult::features {

enum class Family { F0, Formant, Loudness, Hnr, Dfa, LogEnergy, Rms, Mfcc };

// Descriptive statistics applied to a per-frame contour. Scalar registry
// entries (DFA exponent, voiced fraction) use None.
enum class Statistic {
  Mean,
  Std,
  Skewness,
  Kurtosis,
  Min,
  Max,
  Median,
  Q1,
  Q3,
  Iqr,
  P01,
  P99,
  PRange,
  AbsDiffMean,
  DiffStd,
  Slope,
  None,
};

const char* to_string(Statistic s);

struct RegistryEntry {
  std::string name;
  Family family = Family::Mfcc;
  Statistic statistic = Statistic::None;
  // MFCC coefficient or formant number; -1 when not applicable.
  int index = -1;
};

struct FeatureRegistry {
  std::vector<RegistryEntry> entries;
  double frame_length = 0.1;  // seconds
  double frame_hop = 0.05;    // seconds
  int mfcc_coeffs = 14;
  int mel_bands = 26;
  int formant_count = 4;

  std::size_t size() const { return entries.size(); }
  // Stable digest of names + frame parameters, recorded in every output.
  std::uint64_t hash() const;
};

// The standard registry: 16 statistics over 23 contours (14 MFCCs,
// log energy, RMS, F0, F1-F4, HNR, loudness) plus the DFA exponent and the
// voiced-frame fraction. 370 entries total.
FeatureRegistry default_registry();

struct FeatureVector {
  std::uint64_t registry_hash = 0;
  std::vector<double> values;  // NaN where masked
  std::vector<bool> na_mask;
};

// --- contour extractors ---------------------------------------------------

struct PitchContour {
  std::vector<double> f0;      // Hz, NaN when unvoiced
  std::vector<double> peak_r;  // normalized autocorrelation at the pitch lag
  std::vector<bool> voiced;
};

// Autocorrelation pitch per frame, searched in [50, 800] Hz.
PitchContour f0_contour(const std::vector<std::vector<double>>& frames,
                        int sample_rate);

// Per-frame formant frequencies from LPC roots; NaN where a formant is
// missing or the frame is ill-conditioned.
std::vector<std::array<double, 4>> formants(
    const std::vector<std::vector<double>>& frames, int sample_rate,
    int count = 4);

// Per-frame harmonics-to-noise ratio in dB, clamped to [-60, 60];
// NaN for unvoiced frames.
std::vector<double> hnr(const std::vector<std::vector<double>>& frames,
                        int sample_rate);

// First-order DFA scaling exponent over dyadic box sizes 16..N/4.
// Returns NaN for a degenerate (constant) signal.
double dfa_exponent(std::span<const double> samples);

// Per-coefficient {mean, std, skewness, kurtosis, min, max}.
std::vector<std::array<double, 6>> mfcc_stats(
    const std::vector<std::vector<double>>& frames, int sample_rate,
    int n_coeffs = 13);

struct EnergyStats {
  std::array<double, 6> log_energy;  // {mean, std, skew, kurt, min, max}
  std::array<double, 6> rms;
};

EnergyStats energy_stats(const std::vector<std::vector<double>>& frames);

// Per-frame MFCC matrix (frames x n_coeffs), shared by mfcc_stats and
// extract.
std::vector<std::vector<double>> mfcc_matrix(
    const std::vector<std::vector<double>>& frames, int sample_rate,
    int n_coeffs, int mel_bands);

// --- the main entry point ---------------------------------------------------

FeatureVector extract(std::span<const double> samples, int sample_rate,
                      const FeatureRegistry& registry);

inline FeatureVector extract(const audio::Recording& rec,
                             const FeatureRegistry& registry) {
  return extract(rec.samples, rec.sample_rate, registry);
}

inline FeatureVector extract(const audio::WindowedRecording& win,
                             const FeatureRegistry& registry) {
  return extract(win.samples, win.sample_rate, registry);
}

// --- feature table I/O ------------------------------------------------------

// One analysis unit: a whole recording (window_index 0, n_windows 1) or one
// window of it.
struct UnitFeatures {
  std::string subject_code;
  int channel = 0;
  audio::Side side = audio::Side::Left;
  audio::Level level = audio::Level::Upper;
  int window_index = 0;
  int n_windows = 1;
  FeatureVector fv;
};

struct FeatureTable {
  FeatureRegistry registry;
  std::vector<UnitFeatures> units;
};

// CSV with id columns + registry names; masked values written as NA.
// A sidecar <path>.manifest.json records the registry hash and frame
// parameters.
void save_feature_table(const std::filesystem::path& csv_path,
                        const FeatureTable& table);
FeatureTable load_feature_table(const std::filesystem::path& csv_path);

}  // namespace auscult::features
