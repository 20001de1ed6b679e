#pragma once

#include <string>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/dataset.hpp"
#include "auscult/error.hpp"
#include "auscult/features.hpp"
#include "auscult/rng.hpp"

#define CHECK_FAILS_WITH(errc_, ...)                 \
  do {                                               \
    bool caught_ = false;                            \
    try {                                            \
      __VA_ARGS__;                                   \
    } catch (const auscult::Error& e_) {             \
      caught_ = true;                                \
      CHECK(e_.code() == (errc_));                   \
    }                                                \
    CHECK_MESSAGE(caught_, "expected " #errc_);      \
  } while (0)

namespace testutil {

// Channel layout shared by the synthetic corpus: odd = left, 1/2 upper,
// 3/4 middle, 5/6 lower.
inline std::map<int, std::pair<auscult::audio::Side, auscult::audio::Level>>
channel_map() {
  using auscult::audio::Level;
  using auscult::audio::Side;
  return {{1, {Side::Left, Level::Upper}},   {2, {Side::Right, Level::Upper}},
          {3, {Side::Left, Level::Middle}},  {4, {Side::Right, Level::Middle}},
          {5, {Side::Left, Level::Lower}},   {6, {Side::Right, Level::Lower}}};
}

inline std::string subject_code(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "S%02d", i + 1);
  return buf;
}

// n_subjects x 6 channels x n_windows units with pseudo-random feature
// values; subject i is pathological when i < n_path, sex alternates.
inline auscult::audio::CorpusIndex fake_index(int n_subjects, int n_path) {
  auscult::audio::CorpusIndex index;
  index.channel_map = channel_map();
  for (int i = 0; i < n_subjects; ++i) {
    auscult::audio::SubjectMeta meta;
    meta.subject_code = subject_code(i);
    meta.sex = i % 2 == 0 ? auscult::audio::Sex::Female
                          : auscult::audio::Sex::Male;
    meta.age = 40.0 + i;
    meta.diagnosis = i < n_path ? 1 : 0;
    index.subjects.push_back(meta);
    for (int ch = 1; ch <= 6; ++ch) {
      auscult::audio::ManifestEntry entry;
      entry.file = meta.subject_code + "_c" + std::to_string(ch) + ".wav";
      entry.subject_code = meta.subject_code;
      entry.channel = ch;
      index.entries.push_back(entry);
    }
  }
  return index;
}

inline auscult::features::FeatureRegistry small_registry(int n_features) {
  auscult::features::FeatureRegistry registry;
  for (int f = 0; f < n_features; ++f) {
    auscult::features::RegistryEntry entry;
    entry.name = "feat" + std::to_string(f);
    registry.entries.push_back(entry);
  }
  return registry;
}

inline auscult::features::FeatureTable fake_table(
    const auscult::audio::CorpusIndex& index, int n_windows, int n_features,
    std::uint64_t seed = 11) {
  auscult::features::FeatureTable table;
  table.registry = small_registry(n_features);
  auscult::Rng rng(seed);
  for (const auto& entry : index.entries) {
    const auto loc = index.channel_map.at(entry.channel);
    for (int w = 0; w < n_windows; ++w) {
      auscult::features::UnitFeatures unit;
      unit.subject_code = entry.subject_code;
      unit.channel = entry.channel;
      unit.side = loc.first;
      unit.level = loc.second;
      unit.window_index = w;
      unit.n_windows = n_windows;
      unit.fv.registry_hash = table.registry.hash();
      for (int f = 0; f < n_features; ++f) {
        unit.fv.values.push_back(rng.normal());
        unit.fv.na_mask.push_back(false);
      }
      table.units.push_back(unit);
    }
  }
  return table;
}

// Separable two-class dataset: label 1 rows shifted by `gap` on every column.
inline auscult::dataset::Dataset separable_dataset(int rows, int cols,
                                                   double gap,
                                                   std::uint64_t seed) {
  auscult::dataset::Dataset ds;
  ds.variant = auscult::dataset::Variant::Cms;
  for (int c = 0; c < cols; ++c)
    ds.column_names.push_back("x" + std::to_string(c));
  auscult::Rng rng(seed);
  for (int r = 0; r < rows; ++r) {
    const int label = r % 2;
    std::vector<double> row(cols);
    for (int c = 0; c < cols; ++c) row[c] = rng.normal() + gap * label;
    ds.matrix.push_back(std::move(row));
    ds.labels.push_back(label);
    auscult::dataset::RowMeta meta;
    meta.subject_code = subject_code(r);
    ds.row_meta.push_back(meta);
  }
  return ds;
}

}  // namespace testutil
