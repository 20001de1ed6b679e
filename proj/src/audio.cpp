#include "auscult/audio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "auscult/csv.hpp"
#include "auscult/error.hpp"

namespace auscult::audio {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

const char* to_string(Level l) {
  switch (l) {
    case Level::Upper: return "upper";
    case Level::Middle: return "middle";
    case Level::Lower: return "lower";
  }
  return "?";
}

const char* to_string(Sex s) { return s == Sex::Female ? "F" : "M"; }

Side side_from_string(const std::string& text) {
  const std::string t = lower(text);
  if (t == "left" || t == "l") return Side::Left;
  if (t == "right" || t == "r") return Side::Right;
  fail(Errc::BadManifest, "unknown side '" + text + "'");
}

Level level_from_string(const std::string& text) {
  const std::string t = lower(text);
  if (t == "upper" || t == "u") return Level::Upper;
  if (t == "middle" || t == "m") return Level::Middle;
  if (t == "lower" || t == "l") return Level::Lower;
  fail(Errc::BadManifest, "unknown level '" + text + "'");
}

Sex sex_from_string(const std::string& text) {
  const std::string t = lower(text);
  if (t == "f" || t == "female") return Sex::Female;
  if (t == "m" || t == "male") return Sex::Male;
  fail(Errc::BadManifest, "unknown sex '" + text + "'");
}

const SubjectMeta* CorpusIndex::find_subject(const std::string& code) const {
  for (const auto& s : subjects) {
    if (s.subject_code == code) return &s;
  }
  return nullptr;
}

const ManifestEntry* CorpusIndex::find_file(const std::string& filename) const {
  for (const auto& e : entries) {
    if (e.file == filename) return &e;
  }
  return nullptr;
}

CorpusIndex load_manifest(const std::filesystem::path& path) {
  const csv::Table table = csv::read_file(path);
  const std::vector<std::string> expected = {
      "file", "subject", "channel", "side", "level", "sex", "age", "diagnosis"};
  if (table.header != expected)
    fail(Errc::BadManifest, "manifest header mismatch in " + path.string());

  CorpusIndex index;
  std::set<std::pair<std::string, int>> seen_subject_channel;

  for (const auto& row : table.rows) {
    if (row.size() != expected.size())
      fail(Errc::BadManifest, "manifest row with wrong field count");
    const std::string& file = row[0];
    const std::string& subject = row[1];
    const int channel = std::stoi(row[2]);
    const Side side = side_from_string(row[3]);
    const Level level = level_from_string(row[4]);
    const Sex sex = sex_from_string(row[5]);
    const double age = std::stod(row[6]);
    if (row[7].empty())
      fail(Errc::MissingDiagnosis, "subject " + subject + " has no diagnosis");
    if (row[7] != "0" && row[7] != "1")
      fail(Errc::MissingDiagnosis,
           "diagnosis must be 0 or 1, got '" + row[7] + "'");
    const int diagnosis = std::stoi(row[7]);

    if (channel < 1 || channel > 6)
      fail(Errc::BadManifest, "channel out of range 1..6 in " + file);
    if (!seen_subject_channel.insert({subject, channel}).second)
      fail(Errc::DuplicateChannel,
           "subject " + subject + " channel " + row[2] + " listed twice");

    // Channel number must map to one location corpus-wide.
    auto [it, inserted] = index.channel_map.insert({channel, {side, level}});
    if (!inserted && it->second != std::make_pair(side, level))
      fail(Errc::DuplicateChannel,
           "channel " + row[2] + " mapped to two locations");

    if (const SubjectMeta* existing = index.find_subject(subject)) {
      if (existing->sex != sex || existing->diagnosis != diagnosis)
        fail(Errc::BadManifest,
             "subject " + subject + " has conflicting metadata rows");
    } else {
      index.subjects.push_back({subject, sex, age, diagnosis});
    }
    index.entries.push_back({file, subject, channel});
  }
  return index;
}

void save_manifest(const std::filesystem::path& path,
                   const CorpusIndex& index) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());
  out << "file,subject,channel,side,level,sex,age,diagnosis\n";
  for (const auto& entry : index.entries) {
    const SubjectMeta* meta = index.find_subject(entry.subject_code);
    const auto [side, level] = index.channel_map.at(entry.channel);
    std::ostringstream age;
    age << meta->age;
    out << entry.file << ',' << entry.subject_code << ',' << entry.channel
        << ',' << to_string(side) << ',' << to_string(level) << ','
        << to_string(meta->sex) << ',' << age.str() << ',' << meta->diagnosis
        << '\n';
  }
}

void validate_files(const CorpusIndex& index,
                    const std::filesystem::path& corpus_dir) {
  for (const auto& entry : index.entries) {
    if (!std::filesystem::exists(corpus_dir / entry.file))
      fail(Errc::DanglingFileReference, entry.file + " listed but not on disk");
  }
}

namespace {

struct ByteReader {
  std::ifstream in;
  explicit ByteReader(const std::filesystem::path& path)
      : in(path, std::ios::binary) {}

  void read(void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      fail(Errc::TruncatedFile, "unexpected end of WAV file");
  }

  std::uint32_t u32() {
    unsigned char b[4];
    read(b, 4);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint16_t u16() {
    unsigned char b[2];
    read(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  void skip(std::uint32_t n) {
    in.seekg(n, std::ios::cur);
    if (!in) fail(Errc::TruncatedFile, "unexpected end of WAV file");
  }
};

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_u16(std::ofstream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff),
                     static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    fail(Errc::IoFailure, "no such file: " + path.string());
  ByteReader r(path);
  if (!r.in) fail(Errc::IoFailure, "cannot open " + path.string());

  char tag[4];
  r.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0)
    fail(Errc::TruncatedFile, "not a RIFF file: " + path.string());
  r.u32();  // riff size, unreliable in the wild
  r.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0)
    fail(Errc::TruncatedFile, "not a WAVE file: " + path.string());

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  WavData data;

  while (r.in.peek() != EOF) {
    r.read(tag, 4);
    const std::uint32_t size = r.u32();
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) fail(Errc::TruncatedFile, "fmt chunk too small");
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (size > 16) r.skip(size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) fail(Errc::TruncatedFile, "data chunk before fmt");
      if (format != 1 || bits != 16)
        fail(Errc::NotPcm16, "expected 16-bit PCM in " + path.string());
      if (channels != 1)
        fail(Errc::NotMono, "expected mono audio in " + path.string());
      const std::size_t count = size / 2;
      data.samples.resize(count);
      std::vector<unsigned char> raw(size);
      r.read(raw.data(), size);
      for (std::size_t i = 0; i < count; ++i) {
        const std::int16_t v = static_cast<std::int16_t>(
            raw[2 * i] | (raw[2 * i + 1] << 8));
        data.samples[i] = static_cast<double>(v) / 32768.0;
      }
      data.sample_rate = static_cast<int>(rate);
      return data;
    } else {
      r.skip(size + (size & 1));
    }
  }
  fail(Errc::TruncatedFile, "no data chunk in " + path.string());
}

void write_wav(const std::filesystem::path& path,
               const std::vector<double>& samples, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoFailure, "cannot write " + path.string());

  const std::uint32_t data_size =
      static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_size);
  for (double x : samples) {
    const double scaled = std::round(x * 32768.0);
    const std::int16_t v = static_cast<std::int16_t>(
        std::clamp(scaled, -32768.0, 32767.0));
    const char b[2] = {static_cast<char>(v & 0xff),
                       static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
  }
  if (!out) fail(Errc::IoFailure, "short write to " + path.string());
}

Recording load_wav(const std::filesystem::path& path, const CorpusIndex& index,
                   bool allow_any_rate) {
  const std::string filename = path.filename().string();
  const ManifestEntry* entry = index.find_file(filename);
  if (entry == nullptr)
    fail(Errc::UnknownSubject, filename + " is not in the manifest");
  const SubjectMeta* meta = index.find_subject(entry->subject_code);
  if (meta == nullptr)
    fail(Errc::UnknownSubject, "no subject row for " + entry->subject_code);

  WavData wav = read_wav(path);
  if (!allow_any_rate && wav.sample_rate != kCorpusSampleRate)
    fail(Errc::WrongSampleRate,
         filename + " has rate " + std::to_string(wav.sample_rate));

  const auto [side, level] = index.channel_map.at(entry->channel);
  Recording rec;
  rec.subject_code = entry->subject_code;
  rec.channel = entry->channel;
  rec.side = side;
  rec.level = level;
  rec.sample_rate = wav.sample_rate;
  rec.samples = std::move(wav.samples);
  return rec;
}

std::vector<WindowedRecording> split_windows(const Recording& rec, int n) {
  if (n != 1 && n != 3 && n != 5)
    fail(Errc::BadConfig, "window count must be 1, 3 or 5");
  const std::size_t total = rec.samples.size();
  if (total < static_cast<std::size_t>(n + 1))
    fail(Errc::RecordingTooShort, "fewer samples than one hop");

  std::vector<WindowedRecording> windows;
  windows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Exact rational boundary grid i*N/(n+1); each window spans two hops.
    const std::size_t start =
        static_cast<std::size_t>(i) * total / static_cast<std::size_t>(n + 1);
    const std::size_t end = static_cast<std::size_t>(i + 2) * total /
                            static_cast<std::size_t>(n + 1);
    WindowedRecording w;
    w.subject_code = rec.subject_code;
    w.channel = rec.channel;
    w.side = rec.side;
    w.level = rec.level;
    w.window_index = i;
    w.n_windows = n;
    w.sample_rate = rec.sample_rate;
    w.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     rec.samples.begin() + static_cast<std::ptrdiff_t>(end));
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace auscult::audio
