#pragma once

#include <cstdint>
#include <filesystem>

#include "auscult/audio.hpp"

namespace auscult::synth {

// Parameters of the synthetic auscultation corpus. Normal subjects get
// breath-modulated band-limited noise; pathological subjects additionally
// carry crackles (short damped-sine bursts) and/or wheezes (frequency-
// jittered tones) on a random subset of channels.
struct SynthSpec {
  int n_subjects = 45;
  double pathological_fraction = 19.0 / 45.0;
  std::uint64_t seed = 7;

  double breath_rate_min = 3.0;  // cycles over the recording
  double breath_rate_max = 4.0;
  double crackle_density = 1.5;  // bursts per second on affected channels
  double wheeze_lo_hz = 100.0;
  double wheeze_hi_hz = 800.0;
  // Pathology-to-background level; 0 dB is the calibrated default, negative
  // values make the corpus harder.
  double snr_db = 0.0;

  double duration_s = 15.0;
  int sample_rate = audio::kCorpusSampleRate;
};

// Writes <code>_c<channel>.wav for every subject and channel plus
// manifest.csv, all under out_dir. Bit-identical for identical specs.
audio::CorpusIndex generate(const SynthSpec& spec,
                            const std::filesystem::path& out_dir,
                            int threads = 1);

}  // namespace auscult::synth
