#include "auscult/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "auscult/csv.hpp"
#include "auscult/error.hpp"
#include "auscult/stats.hpp"

namespace auscult::dataset {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Raw: return "raw";
    case Variant::Cms: return "cms";
    case Variant::Wms: return "wms";
    case Variant::C2: return "c2";
    case Variant::C3: return "c3";
    case Variant::C6: return "c6";
  }
  return "?";
}

const char* to_string(Windowing w) {
  switch (w) {
    case Windowing::W0: return "w0";
    case Windowing::W3: return "w3";
    case Windowing::W5: return "w5";
  }
  return "?";
}

Variant variant_from_string(const std::string& text) {
  if (text == "raw") return Variant::Raw;
  if (text == "cms") return Variant::Cms;
  if (text == "wms") return Variant::Wms;
  if (text == "c2") return Variant::C2;
  if (text == "c3") return Variant::C3;
  if (text == "c6") return Variant::C6;
  fail(Errc::BadConfig, "unknown dataset variant: " + text);
}

Windowing windowing_from_string(const std::string& text) {
  if (text == "w0") return Windowing::W0;
  if (text == "w3") return Windowing::W3;
  if (text == "w5") return Windowing::W5;
  fail(Errc::BadConfig, "unknown windowing: " + text);
}

namespace {

Windowing infer_windowing(const features::FeatureTable& table) {
  if (table.units.empty()) fail(Errc::EmptyCorpus, "feature table has no units");
  const int n = table.units.front().n_windows;
  for (const auto& unit : table.units) {
    if (unit.n_windows != n)
      fail(Errc::BadConfig, "feature table mixes windowings");
  }
  switch (n) {
    case 1: return Windowing::W0;
    case 3: return Windowing::W3;
    case 5: return Windowing::W5;
    default: fail(Errc::BadConfig, "unsupported window count in table");
  }
}

// (subject, channel) -> window_index -> unit, in manifest subject order.
struct UnitIndex {
  std::map<std::pair<std::string, int>, std::map<int, const features::UnitFeatures*>>
      by_key;

  explicit UnitIndex(const features::FeatureTable& table) {
    for (const auto& unit : table.units)
      by_key[{unit.subject_code, unit.channel}][unit.window_index] = &unit;
  }
};

}  // namespace

Dataset build_raw(const features::FeatureTable& table,
                  const audio::CorpusIndex& index) {
  const Windowing windowing = infer_windowing(table);
  const int n_windows = window_count(windowing);
  const UnitIndex units(table);

  Dataset ds;
  ds.variant = Variant::Raw;
  ds.windowing = windowing;
  for (const auto& entry : table.registry.entries)
    ds.column_names.push_back(entry.name);

  for (const auto& subject : index.subjects) {
    for (int channel = 1; channel <= 6; ++channel) {
      const auto group = units.by_key.find({subject.subject_code, channel});
      for (int w = 0; w < n_windows; ++w) {
        const features::UnitFeatures* unit = nullptr;
        if (group != units.by_key.end()) {
          const auto it = group->second.find(w);
          if (it != group->second.end()) unit = it->second;
        }
        if (!unit)
          fail(Errc::MissingUnit, "no features for subject " +
                                      subject.subject_code + " channel " +
                                      std::to_string(channel) + " window " +
                                      std::to_string(w));
        ds.matrix.push_back(unit->fv.values);
        ds.row_meta.push_back({subject.subject_code, unit->side, unit->level,
                               channel, w});
        ds.labels.push_back(subject.diagnosis);
      }
    }
  }
  return ds;
}

namespace {

// Per-feature mean/sample-std over the units' values, NA-aware. Emits the
// means block then the stds block.
std::vector<double> pool_mean_std(
    const std::vector<const features::UnitFeatures*>& units,
    std::size_t n_features) {
  std::vector<double> row(2 * n_features, stats::kNa);
  std::vector<double> column;
  for (std::size_t f = 0; f < n_features; ++f) {
    column.clear();
    for (const auto* unit : units) {
      const double v = unit->fv.values[f];
      if (std::isfinite(v)) column.push_back(v);
    }
    if (!column.empty()) row[f] = stats::mean(column);
    if (column.size() >= 2) row[n_features + f] = stats::stdev_sample(column);
    else if (column.size() == 1) row[n_features + f] = stats::kNa;
  }
  return row;
}

std::vector<std::string> mean_std_names(const features::FeatureRegistry& reg) {
  std::vector<std::string> names;
  names.reserve(2 * reg.size());
  for (const auto& entry : reg.entries) names.push_back(entry.name + "_mean");
  for (const auto& entry : reg.entries) names.push_back(entry.name + "_std");
  return names;
}

}  // namespace

Dataset aggregate_cms(const features::FeatureTable& table,
                      const audio::CorpusIndex& index) {
  const Windowing windowing = infer_windowing(table);
  const int n_windows = window_count(windowing);
  const UnitIndex units(table);
  const std::size_t n_features = table.registry.size();

  Dataset ds;
  ds.variant = Variant::Cms;
  ds.windowing = windowing;
  ds.column_names = mean_std_names(table.registry);

  for (const auto& subject : index.subjects) {
    std::vector<const features::UnitFeatures*> pooled;
    for (int channel = 1; channel <= 6; ++channel) {
      const auto group = units.by_key.find({subject.subject_code, channel});
      if (group == units.by_key.end() ||
          static_cast<int>(group->second.size()) != n_windows)
        fail(Errc::MissingChannel, "subject " + subject.subject_code +
                                       " lacks channel " +
                                       std::to_string(channel));
      for (const auto& [w, unit] : group->second) pooled.push_back(unit);
    }
    ds.matrix.push_back(pool_mean_std(pooled, n_features));
    ds.row_meta.push_back({subject.subject_code, std::nullopt, std::nullopt,
                           std::nullopt, std::nullopt});
    ds.labels.push_back(subject.diagnosis);
  }
  return ds;
}

Dataset aggregate_wms(const features::FeatureTable& table,
                      const audio::CorpusIndex& index) {
  const Windowing windowing = infer_windowing(table);
  if (windowing == Windowing::W0)
    fail(Errc::MissingWindow, "wms needs windowed features (w3 or w5)");
  const int n_windows = window_count(windowing);
  const UnitIndex units(table);
  const std::size_t n_features = table.registry.size();

  Dataset ds;
  ds.variant = Variant::Wms;
  ds.windowing = windowing;
  ds.column_names = mean_std_names(table.registry);

  for (const auto& subject : index.subjects) {
    for (int channel = 1; channel <= 6; ++channel) {
      const auto group = units.by_key.find({subject.subject_code, channel});
      if (group == units.by_key.end())
        fail(Errc::MissingChannel, "subject " + subject.subject_code +
                                       " lacks channel " +
                                       std::to_string(channel));
      std::vector<const features::UnitFeatures*> pooled;
      for (int w = 0; w < n_windows; ++w) {
        const auto it = group->second.find(w);
        if (it == group->second.end())
          fail(Errc::MissingWindow, "subject " + subject.subject_code +
                                        " channel " + std::to_string(channel) +
                                        " lacks window " + std::to_string(w));
        pooled.push_back(it->second);
      }
      const auto* any = pooled.front();
      ds.matrix.push_back(pool_mean_std(pooled, n_features));
      ds.row_meta.push_back({subject.subject_code, any->side, any->level,
                             channel, std::nullopt});
      ds.labels.push_back(subject.diagnosis);
    }
  }
  return ds;
}

Dataset concat(Variant variant, const Dataset& base) {
  if (variant != Variant::C2 && variant != Variant::C3 && variant != Variant::C6)
    fail(Errc::BadConfig, "concat target must be c2, c3 or c6");
  const bool base_ok = (base.variant == Variant::Raw &&
                        base.windowing == Windowing::W0) ||
                       base.variant == Variant::Wms;
  if (!base_ok)
    fail(Errc::BadConfig, "concat base must be raw w0 or wms rows");

  // Group rows by (subject, group key); members ordered by channel number.
  struct Group {
    RowMeta meta;
    int label = 0;
    std::map<int, std::size_t> row_by_channel;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> group_index;

  auto key_of = [&](const RowMeta& meta) -> std::string {
    switch (variant) {
      case Variant::C2:
        return meta.subject_code + "|" + audio::to_string(*meta.level);
      case Variant::C3:
        return meta.subject_code + "|" + audio::to_string(*meta.side);
      default:
        return meta.subject_code;
    }
  };

  for (std::size_t r = 0; r < base.rows(); ++r) {
    const RowMeta& meta = base.row_meta[r];
    if (!meta.channel || !meta.side || !meta.level)
      fail(Errc::MissingChannel, "concat base row lacks channel identity");
    const std::string key = key_of(meta);
    auto [it, inserted] = group_index.try_emplace(key, groups.size());
    if (inserted) {
      RowMeta gm;
      gm.subject_code = meta.subject_code;
      if (variant == Variant::C2) gm.level = meta.level;
      if (variant == Variant::C3) gm.side = meta.side;
      groups.push_back({gm, base.labels[r], {}});
    }
    groups[it->second].row_by_channel[*meta.channel] = r;
  }

  const std::size_t group_size =
      variant == Variant::C2 ? 2 : (variant == Variant::C3 ? 3 : 6);

  Dataset ds;
  ds.variant = variant;
  ds.windowing = base.windowing;
  ds.matrix.reserve(groups.size());

  bool names_done = false;
  for (const auto& group : groups) {
    if (group.row_by_channel.size() != group_size)
      fail(Errc::MissingChannel,
           "incomplete channel group for subject " + group.meta.subject_code);
    std::vector<double> row;
    row.reserve(group_size * base.cols());
    for (const auto& [channel, r] : group.row_by_channel) {
      const auto& src = base.matrix[r];
      row.insert(row.end(), src.begin(), src.end());
      if (!names_done) {
        for (const auto& name : base.column_names)
          ds.column_names.push_back(name + "_ch" + std::to_string(channel));
      }
    }
    names_done = true;
    ds.matrix.push_back(std::move(row));
    ds.row_meta.push_back(group.meta);
    ds.labels.push_back(group.label);
  }
  return ds;
}

std::vector<MetaField> applicable_meta(Variant v) {
  switch (v) {
    case Variant::Raw:
    case Variant::Wms:
      return {MetaField::Side, MetaField::Level, MetaField::Channel};
    case Variant::C2: return {MetaField::Level};
    case Variant::C3: return {MetaField::Side};
    case Variant::Cms:
    case Variant::C6:
      return {};
  }
  return {};
}

Dataset attach_meta(const Dataset& ds, const std::vector<MetaField>& fields) {
  Dataset out = ds;
  // Canonical order regardless of how the request was phrased.
  for (MetaField field : {MetaField::Side, MetaField::Level, MetaField::Channel}) {
    if (std::find(fields.begin(), fields.end(), field) == fields.end())
      continue;
    const char* name = field == MetaField::Side
                           ? "meta_side"
                           : (field == MetaField::Level ? "meta_level"
                                                        : "meta_channel");
    out.column_names.push_back(name);
    for (std::size_t r = 0; r < out.rows(); ++r) {
      const RowMeta& meta = out.row_meta[r];
      double value = 0.0;
      switch (field) {
        case MetaField::Side:
          if (!meta.side)
            fail(Errc::FieldUndefinedForVariant, "row has no side");
          value = meta.side == audio::Side::Left ? 0.0 : 1.0;
          break;
        case MetaField::Level:
          if (!meta.level)
            fail(Errc::FieldUndefinedForVariant, "row has no level");
          value = meta.level == audio::Level::Upper
                      ? 0.0
                      : (meta.level == audio::Level::Middle ? 1.0 : 2.0);
          break;
        case MetaField::Channel:
          if (!meta.channel)
            fail(Errc::FieldUndefinedForVariant, "row has no channel");
          value = static_cast<double>(*meta.channel);
          break;
      }
      out.matrix[r].push_back(value);
    }
  }
  return out;
}

ImputeResult impute_na(const Dataset& ds, const ImputePolicy& policy) {
  const std::size_t n_rows = ds.rows();
  const std::size_t n_cols = ds.cols();
  std::vector<std::size_t> na_count(n_cols, 0);
  for (const auto& row : ds.matrix) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (!std::isfinite(row[c])) ++na_count[c];
    }
  }

  ImputeResult result;
  result.ds.variant = ds.variant;
  result.ds.windowing = ds.windowing;
  result.ds.row_meta = ds.row_meta;
  result.ds.labels = ds.labels;

  if (policy.kind == ImputePolicy::Kind::DropColumns) {
    std::vector<bool> keep(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
      const double frac = n_rows == 0
                              ? 0.0
                              : static_cast<double>(na_count[c]) /
                                    static_cast<double>(n_rows);
      keep[c] = frac <= policy.max_na_fraction;
      if (keep[c])
        result.ds.column_names.push_back(ds.column_names[c]);
      else
        result.dropped_columns.push_back(ds.column_names[c]);
    }
    result.ds.matrix.reserve(n_rows);
    for (const auto& row : ds.matrix) {
      std::vector<double> kept;
      kept.reserve(result.ds.column_names.size());
      for (std::size_t c = 0; c < n_cols; ++c) {
        if (keep[c]) kept.push_back(row[c]);
      }
      result.ds.matrix.push_back(std::move(kept));
    }
    // Remaining NAs (fraction ≤ τ but nonzero) are median-filled so the
    // post-condition "no masked values remain" holds for any τ.
    std::vector<double> column;
    for (std::size_t c = 0; c < result.ds.cols(); ++c) {
      column.clear();
      for (const auto& row : result.ds.matrix) {
        if (std::isfinite(row[c])) column.push_back(row[c]);
      }
      if (column.empty()) continue;  // cannot happen when τ < 1
      const double med = stats::median(column);
      for (auto& row : result.ds.matrix) {
        if (!std::isfinite(row[c])) row[c] = med;
      }
    }
    return result;
  }

  result.ds.column_names = ds.column_names;
  result.ds.matrix = ds.matrix;
  std::vector<double> column;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (na_count[c] == 0) continue;
    if (na_count[c] == n_rows)
      fail(Errc::AllRowsNaForColumn,
           "column " + ds.column_names[c] + " is entirely NA");
    column.clear();
    for (const auto& row : result.ds.matrix) {
      if (std::isfinite(row[c])) column.push_back(row[c]);
    }
    const double med = stats::median(column);
    for (auto& row : result.ds.matrix) {
      if (!std::isfinite(row[c])) row[c] = med;
    }
  }
  return result;
}

// --- persistence -------------------------------------------------------------

namespace {

std::string format_value(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_dataset(const std::filesystem::path& csv_path, const Dataset& ds) {
  std::ofstream out(csv_path);
  if (!out) fail(Errc::IoFailure, "cannot write " + csv_path.string());
  out << "subject,side,level,channel,window,label";
  for (const auto& name : ds.column_names) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const RowMeta& meta = ds.row_meta[r];
    out << meta.subject_code << ','
        << (meta.side ? audio::to_string(*meta.side) : "") << ','
        << (meta.level ? audio::to_string(*meta.level) : "") << ','
        << (meta.channel ? std::to_string(*meta.channel) : "") << ','
        << (meta.window ? std::to_string(*meta.window) : "") << ','
        << ds.labels[r];
    for (double v : ds.matrix[r]) out << ',' << format_value(v);
    out << '\n';
  }
  if (!out) fail(Errc::IoFailure, "short write to " + csv_path.string());

  nlohmann::ordered_json shape;
  shape["variant"] = to_string(ds.variant);
  shape["windowing"] = to_string(ds.windowing);
  shape["rows"] = ds.rows();
  shape["cols"] = ds.cols();
  std::ofstream sout(csv_path.string() + ".shape.json");
  if (!sout) fail(Errc::IoFailure, "cannot write shape manifest");
  sout << shape.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& csv_path) {
  const csv::Table raw = csv::read_file(csv_path);
  constexpr std::size_t kIdCols = 6;
  if (raw.header.size() < kIdCols)
    fail(Errc::IoFailure, "dataset csv missing id columns");

  Dataset ds;
  for (std::size_t c = kIdCols; c < raw.header.size(); ++c)
    ds.column_names.push_back(raw.header[c]);

  for (const auto& row : raw.rows) {
    if (row.size() != raw.header.size())
      fail(Errc::IoFailure, "dataset csv row width mismatch");
    RowMeta meta;
    meta.subject_code = row[0];
    if (!row[1].empty()) meta.side = audio::side_from_string(row[1]);
    if (!row[2].empty()) meta.level = audio::level_from_string(row[2]);
    if (!row[3].empty()) meta.channel = std::stoi(row[3]);
    if (!row[4].empty()) meta.window = std::stoi(row[4]);
    ds.row_meta.push_back(std::move(meta));
    ds.labels.push_back(std::stoi(row[5]));
    std::vector<double> values;
    values.reserve(ds.column_names.size());
    for (std::size_t c = kIdCols; c < row.size(); ++c)
      values.push_back(row[c] == "NA" ? stats::kNa : std::stod(row[c]));
    ds.matrix.push_back(std::move(values));
  }

  const std::filesystem::path shape_path(csv_path.string() + ".shape.json");
  if (std::filesystem::exists(shape_path)) {
    std::ifstream sin(shape_path);
    const nlohmann::json shape = nlohmann::json::parse(sin);
    ds.variant = variant_from_string(shape.at("variant").get<std::string>());
    ds.windowing =
        windowing_from_string(shape.at("windowing").get<std::string>());
  }
  return ds;
}

}  // namespace auscult::dataset
