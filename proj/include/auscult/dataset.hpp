#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "auscult/audio.hpp"
#include "auscult/features.hpp"

namespace auscult::dataset {

enum class Variant { Raw, Cms, Wms, C2, C3, C6 };
enum class Windowing { W0, W3, W5 };

const char* to_string(Variant v);
const char* to_string(Windowing w);
Variant variant_from_string(const std::string& text);
Windowing windowing_from_string(const std::string& text);

inline int window_count(Windowing w) {
  return w == Windowing::W0 ? 1 : (w == Windowing::W3 ? 3 : 5);
}

enum class MetaField { Side, Level, Channel };

// Row identity; fields are unset where the variant has pooled them away
// (e.g. cms rows have no channel).
struct RowMeta {
  std::string subject_code;
  std::optional<audio::Side> side;
  std::optional<audio::Level> level;
  std::optional<int> channel;
  std::optional<int> window;
};

struct Dataset {
  Variant variant = Variant::Raw;
  Windowing windowing = Windowing::W0;
  std::vector<std::string> column_names;
  std::vector<std::vector<double>> matrix;  // row-major, NaN = masked
  std::vector<RowMeta> row_meta;
  std::vector<int> labels;  // 0 normal, 1 pathological

  std::size_t rows() const { return matrix.size(); }
  std::size_t cols() const { return column_names.size(); }
};

// One row per unit (w0: recording, w3/w5: window); F columns.
// Rows ordered subject (manifest order), channel, window.
Dataset build_raw(const features::FeatureTable& table,
                  const audio::CorpusIndex& index);

// One row per subject; 2F columns (all means, then all sample stds) pooled
// over every channel and window.
Dataset aggregate_cms(const features::FeatureTable& table,
                      const audio::CorpusIndex& index);

// One row per (subject, channel); 2F columns pooled over windows.
// Requires w3 or w5 extraction.
Dataset aggregate_wms(const features::FeatureTable& table,
                      const audio::CorpusIndex& index);

// Stacks per-channel rows side by side: c2 joins the two channels of one
// level, c3 the three channels of one side, c6 all six. base must be a raw
// w0 or a wms dataset; column names get a _ch<k> suffix, channel-major.
Dataset concat(Variant variant, const Dataset& base);

// Appends meta_side / meta_level / meta_channel integer columns (in that
// order, restricted to the requested fields). Every row must define the
// field, else FieldUndefinedForVariant.
Dataset attach_meta(const Dataset& ds, const std::vector<MetaField>& fields);

// Meta fields that are well-defined for a variant (what attach_meta can add).
std::vector<MetaField> applicable_meta(Variant v);

struct ImputePolicy {
  enum class Kind { DropColumns, MedianImpute };
  Kind kind = Kind::MedianImpute;
  // DropColumns removes a column when its NA fraction exceeds this.
  double max_na_fraction = 0.0;
};

struct ImputeResult {
  Dataset ds;
  std::vector<std::string> dropped_columns;
};

ImputeResult impute_na(const Dataset& ds, const ImputePolicy& policy);

// CSV with id columns (subject, side, level, channel, window — blank where
// unset), label, then feature columns; NaN written as NA. A sidecar
// <path>.shape.json records variant/windowing/rows/cols.
void save_dataset(const std::filesystem::path& csv_path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& csv_path);

}  // namespace auscult::dataset
