#include "auscult/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "auscult/dsp.hpp"
#include "auscult/error.hpp"
#include "auscult/parallel.hpp"
#include "auscult/rng.hpp"

namespace auscult::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gaussian noise restricted to [lo, hi] Hz by FFT masking, unit RMS.
std::vector<double> band_noise(Rng& rng, std::size_t n, int rate, double lo,
                               double hi) {
  const std::size_t nfft = dsp::next_pow2(n);
  std::vector<std::complex<double>> spec(nfft, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) spec[i] = {rng.normal(), 0.0};
  dsp::fft(spec, false);
  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    const double freq = static_cast<double>(k) * rate / static_cast<double>(nfft);
    if (freq < lo || freq > hi) {
      spec[k] = {0.0, 0.0};
      if (k > 0 && k < nfft / 2) spec[nfft - k] = {0.0, 0.0};
    }
  }
  dsp::fft(spec, true);
  std::vector<double> out(n);
  double power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = spec[i].real();
    power += out[i] * out[i];
  }
  const double rms = std::sqrt(power / static_cast<double>(n));
  if (rms > 0.0) {
    for (double& v : out) v /= rms;
  }
  return out;
}

struct SubjectPlan {
  std::string code;
  audio::Sex sex;
  double age;
  int diagnosis;
};

void add_crackles(Rng& rng, std::vector<double>& x, int rate, double density,
                  double amplitude, const std::vector<double>& envelope) {
  const double duration = static_cast<double>(x.size()) / rate;
  const int count = std::max(
      1, static_cast<int>(std::lround(density * duration *
                                      rng.uniform(0.6, 1.4))));
  for (int e = 0; e < count; ++e) {
    const double width_s = rng.uniform(0.005, 0.020);
    const double carrier = rng.uniform(200.0, 1200.0);
    const double amp = amplitude * rng.uniform(0.6, 1.2);
    const std::size_t start = static_cast<std::size_t>(
        rng.uniform(0.0, duration - width_s) * rate);
    const std::size_t width =
        static_cast<std::size_t>(width_s * rate);
    const double tau = width_s / 4.0;
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < width && start + i < x.size(); ++i) {
      const double t = static_cast<double>(i) / rate;
      x[start + i] += amp * envelope[start + i] * std::exp(-t / tau) *
                      std::sin(kTwoPi * carrier * t + phase);
    }
  }
}

// Heart-sound-like artifacts: slower, lower-pitched damped bursts than
// crackles. Present on every subject so transients alone are no class cue.
void add_thumps(Rng& rng, std::vector<double>& x, int rate, double density,
                double amplitude, const std::vector<double>& envelope) {
  const double duration = static_cast<double>(x.size()) / rate;
  const int count = std::max(
      1, static_cast<int>(std::lround(density * duration *
                                      rng.uniform(0.8, 1.2))));
  for (int e = 0; e < count; ++e) {
    const double width_s = rng.uniform(0.030, 0.060);
    const double carrier = rng.uniform(70.0, 160.0);
    const double amp = amplitude * rng.uniform(0.7, 1.3);
    const std::size_t start = static_cast<std::size_t>(
        rng.uniform(0.0, duration - width_s) * rate);
    const std::size_t width = static_cast<std::size_t>(width_s * rate);
    const double tau = width_s / 3.0;
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < width && start + i < x.size(); ++i) {
      const double t = static_cast<double>(i) / rate;
      x[start + i] += amp * envelope[start + i] * std::exp(-t / tau) *
                      std::sin(kTwoPi * carrier * t + phase);
    }
  }
}

// Continuous low-frequency tonal hum (snoring, tremor, sensor coupling).
// Benign — drawn for a fraction of subjects in both classes so sustained
// tonality by itself does not separate the classes.
void add_hum(Rng& rng, std::vector<double>& x, int rate, double amplitude,
             const std::vector<double>& envelope) {
  const double freq = rng.uniform(60.0, 220.0);
  const double wobble_hz = rng.uniform(1.0, 4.0);
  const double wobble_depth = rng.uniform(2.0, 8.0);
  const double am_rate = rng.uniform(0.2, 0.8);
  const double am_phase = rng.uniform(0.0, kTwoPi);
  double phase = rng.uniform(0.0, kTwoPi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    const double f = freq + wobble_depth * std::sin(kTwoPi * wobble_hz * t);
    phase += kTwoPi * f / rate;
    const double am = 0.7 + 0.3 * std::sin(kTwoPi * am_rate * t + am_phase);
    x[i] += amplitude * am * envelope[i] * std::sin(phase);
  }
}

void add_wheezes(Rng& rng, std::vector<double>& x, int rate, double lo,
                 double hi, double amplitude,
                 const std::vector<double>& envelope) {
  const double duration = static_cast<double>(x.size()) / rate;
  const int count = 1 + static_cast<int>(rng.below(3));
  for (int e = 0; e < count; ++e) {
    const double length = rng.uniform(0.5, 2.0);
    const double start_s = rng.uniform(0.0, std::max(0.1, duration - length));
    const double base_freq = rng.uniform(lo, hi);
    const double jitter_hz = rng.uniform(5.0, 25.0);
    const double jitter_rate = rng.uniform(2.0, 5.0);
    const double amp = amplitude * rng.uniform(0.5, 1.0);
    const double phase0 = rng.uniform(0.0, kTwoPi);
    const std::size_t start = static_cast<std::size_t>(start_s * rate);
    const std::size_t n = static_cast<std::size_t>(length * rate);
    double phase = phase0;
    for (std::size_t i = 0; i < n && start + i < x.size(); ++i) {
      const double t = static_cast<double>(i) / rate;
      const double freq =
          base_freq + jitter_hz * std::sin(kTwoPi * jitter_rate * t);
      phase += kTwoPi * freq / rate;
      // Soft fade at the episode edges.
      const double edge = std::min({1.0, t / 0.1, (length - t) / 0.1});
      x[start + i] +=
          amp * envelope[start + i] * std::max(edge, 0.0) * std::sin(phase);
    }
  }
}

}  // namespace

audio::CorpusIndex generate(const SynthSpec& spec,
                            const std::filesystem::path& out_dir,
                            int threads) {
  if (spec.pathological_fraction <= 0.0 || spec.pathological_fraction >= 1.0)
    fail(Errc::BadConfig, "pathological_fraction must be in (0, 1)");
  if (spec.n_subjects < 4)
    fail(Errc::BadConfig, "need at least 4 subjects for nonempty strata");

  std::filesystem::create_directories(out_dir);

  const int n_path = std::clamp(
      static_cast<int>(std::lround(spec.pathological_fraction *
                                   spec.n_subjects)),
      1, spec.n_subjects - 1);
  const int code_width =
      std::max(2, static_cast<int>(std::to_string(spec.n_subjects).size()));

  // Alternating sex, pathological prefix: every sex x diagnosis stratum is
  // nonempty for any sensible fraction.
  std::vector<SubjectPlan> plans;
  {
    Rng rng(derive_seed(spec.seed, 0xa9e));
    for (int i = 0; i < spec.n_subjects; ++i) {
      SubjectPlan plan;
      std::string num = std::to_string(i + 1);
      while (static_cast<int>(num.size()) < code_width) num.insert(0, "0");
      plan.code = "S" + num;
      plan.sex = i % 2 == 0 ? audio::Sex::Female : audio::Sex::Male;
      plan.age = std::floor(rng.uniform(20.0, 80.0));
      plan.diagnosis = i < n_path ? 1 : 0;
      plans.push_back(std::move(plan));
    }
  }

  const std::size_t n_samples =
      static_cast<std::size_t>(std::lround(spec.duration_s * spec.sample_rate));
  const double snr_factor = std::pow(10.0, spec.snr_db / 20.0);

  parallel_for(
      static_cast<std::size_t>(spec.n_subjects), threads, [&](std::size_t s) {
        const SubjectPlan& plan = plans[s];
        Rng rng(derive_seed(spec.seed, s));

        const double breath_rate =
            rng.uniform(spec.breath_rate_min, spec.breath_rate_max);
        const double breath_phase = rng.uniform(0.0, kTwoPi);
        // Anatomy and sensor coupling vary subject to subject — gain, band
        // emphasis, breath depth, heart-sound rate. Without this diversity
        // among normals, the pathological class would be a trivial set of
        // global outliers.
        const double master_gain =
            std::pow(10.0, rng.uniform(-8.0, 0.0) / 20.0);
        const double band_lo = rng.uniform(80.0, 150.0);
        const double band_hi = rng.uniform(600.0, 1100.0);
        const double envelope_floor = rng.uniform(0.15, 0.30);
        const double thump_rate = rng.uniform(0.9, 1.8);
        const double thump_amp = rng.uniform(0.2, 0.55);
        const bool has_hum = rng.real() < 0.3;
        const double hum_amp = rng.uniform(0.06, 0.18);

        std::vector<double> envelope(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
          const double t = static_cast<double>(i) / spec.sample_rate;
          const double cycle =
              0.5 - 0.5 * std::cos(kTwoPi * breath_rate * t / spec.duration_s +
                                   breath_phase);
          envelope[i] =
              envelope_floor + (1.0 - envelope_floor) * std::pow(cycle, 1.5);
        }

        // Pathology touches every channel with channel-specific intensity;
        // diffuse disease rather than a single focal site.
        std::array<double, 7> site_severity{};
        double severity = 0.0;
        if (plan.diagnosis == 1) {
          severity = rng.uniform(0.7, 1.0) * snr_factor;
          for (int c = 1; c <= 6; ++c)
            site_severity[static_cast<std::size_t>(c)] =
                severity * rng.uniform(0.6, 1.0);
        }

        for (int channel = 1; channel <= 6; ++channel) {
          const double channel_gain =
              master_gain * std::pow(10.0, rng.uniform(-3.0, 3.0) / 20.0);
          std::vector<double> x = band_noise(rng, n_samples, spec.sample_rate,
                                             band_lo, band_hi);
          for (std::size_t i = 0; i < n_samples; ++i) x[i] *= envelope[i];
          // Sensor noise floor keeps frames from ever being silent.
          for (std::size_t i = 0; i < n_samples; ++i)
            x[i] += 0.01 * rng.normal();

          add_thumps(rng, x, spec.sample_rate, thump_rate, thump_amp,
                     envelope);
          if (has_hum)
            add_hum(rng, x, spec.sample_rate, hum_amp, envelope);
          const double site = site_severity[static_cast<std::size_t>(channel)];
          if (site > 0.0) {
            add_crackles(rng, x, spec.sample_rate, spec.crackle_density,
                         2.6 * site, envelope);
            add_wheezes(rng, x, spec.sample_rate, spec.wheeze_lo_hz,
                        spec.wheeze_hi_hz, 1.0 * site, envelope);
          }

          constexpr double kLevel = 0.12;
          for (double& v : x) v *= kLevel * channel_gain;
          double peak = 0.0;
          for (double v : x) peak = std::max(peak, std::abs(v));
          if (peak > 0.95) {
            for (double& v : x) v *= 0.95 / peak;
          }

          const std::string file =
              plan.code + "_c" + std::to_string(channel) + ".wav";
          audio::write_wav(out_dir / file, x, spec.sample_rate);
        }
      });

  audio::CorpusIndex index;
  for (const auto& plan : plans)
    index.subjects.push_back({plan.code, plan.sex, plan.age, plan.diagnosis});
  index.channel_map = {{1, {audio::Side::Left, audio::Level::Upper}},
                       {2, {audio::Side::Right, audio::Level::Upper}},
                       {3, {audio::Side::Left, audio::Level::Middle}},
                       {4, {audio::Side::Right, audio::Level::Middle}},
                       {5, {audio::Side::Left, audio::Level::Lower}},
                       {6, {audio::Side::Right, audio::Level::Lower}}};
  for (const auto& plan : plans) {
    for (int channel = 1; channel <= 6; ++channel)
      index.entries.push_back(
          {plan.code + "_c" + std::to_string(channel) + ".wav", plan.code,
           channel});
  }
  audio::save_manifest(out_dir / "manifest.csv", index);
  return index;
}

}  // namespace auscult::synth
