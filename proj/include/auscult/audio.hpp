#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace auscult::audio {

enum class Side { Left, Right };
enum class Level { Upper, Middle, Lower };
enum class Sex { Female, Male };

const char* to_string(Side s);
const char* to_string(Level l);
const char* to_string(Sex s);
Side side_from_string(const std::string& text);
Level level_from_string(const std::string& text);
Sex sex_from_string(const std::string& text);

// 0 = normal, 1 = pathological.
struct SubjectMeta {
  std::string subject_code;
  Sex sex = Sex::Female;
  double age = 0.0;
  int diagnosis = 0;
};

// One channel of one subject, normalized to [-1, 1] from 16-bit PCM.
struct Recording {
  std::string subject_code;
  int channel = 0;  // 1..6
  Side side = Side::Left;
  Level level = Level::Upper;
  int sample_rate = 0;
  std::vector<double> samples;

  double duration() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// One 50%-overlap window of a recording. window_index is 0-based;
// n_windows is 1, 3 or 5.
struct WindowedRecording {
  std::string subject_code;
  int channel = 0;
  Side side = Side::Left;
  Level level = Level::Upper;
  int window_index = 0;
  int n_windows = 1;
  int sample_rate = 0;
  std::vector<double> samples;
};

struct ManifestEntry {
  std::string file;
  std::string subject_code;
  int channel = 0;
};

// Parsed manifest: subject table, channel -> location map, file entries.
struct CorpusIndex {
  std::vector<SubjectMeta> subjects;                   // manifest order
  std::map<int, std::pair<Side, Level>> channel_map;   // corpus-wide
  std::vector<ManifestEntry> entries;                  // manifest order

  const SubjectMeta* find_subject(const std::string& code) const;
  const ManifestEntry* find_file(const std::string& filename) const;
};

// CSV schema: file,subject,channel,side,level,sex,age,diagnosis
CorpusIndex load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const CorpusIndex& index);

// Throws DanglingFileReference if a manifest entry has no file on disk.
void validate_files(const CorpusIndex& index,
                    const std::filesystem::path& corpus_dir);

// Raw PCM payload of a mono 16-bit WAV file, samples divided by 32768.
struct WavData {
  int sample_rate = 0;
  std::vector<double> samples;
};

WavData read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path,
               const std::vector<double>& samples, int sample_rate);

inline constexpr int kCorpusSampleRate = 4000;

// Reads a WAV and joins subject/channel metadata from the manifest entry
// matching the file name. Non-4kHz files are rejected unless allow_any_rate.
Recording load_wav(const std::filesystem::path& path, const CorpusIndex& index,
                   bool allow_any_rate = false);

// Splits into n windows with 50% overlap. Window boundaries follow the exact
// rational grid i*N/(n+1); for non-divisible lengths each boundary is floored,
// so a window may come out one sample short of nominal.
std::vector<WindowedRecording> split_windows(const Recording& rec, int n);

}  // namespace auscult::audio
