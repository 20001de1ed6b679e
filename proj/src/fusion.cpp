#include "auscult/fusion.hpp"

#include <map>

#include "auscult/error.hpp"

namespace auscult::fusion {

const char* to_string(Scope s) {
  switch (s) {
    case Scope::Code: return "code";
    case Scope::CodeSide: return "code_side";
    case Scope::CodeLevel: return "code_level";
    case Scope::CodeChannel: return "code_channel";
  }
  return "?";
}

Scope scope_from_string(const std::string& text) {
  if (text == "code") return Scope::Code;
  if (text == "code_side") return Scope::CodeSide;
  if (text == "code_level") return Scope::CodeLevel;
  if (text == "code_channel") return Scope::CodeChannel;
  fail(Errc::BadConfig, "unknown fusion scope: " + text);
}

std::vector<Prediction> fuse(const std::vector<Prediction>& predictions,
                             Scope scope) {
  if (predictions.empty())
    fail(Errc::EmptyGroup, "no predictions to fuse");

  struct Group {
    Prediction out;
    double score_sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> index;  // key -> groups position

  for (const auto& pred : predictions) {
    const dataset::RowMeta& meta = pred.meta;
    std::string key = meta.subject_code;
    switch (scope) {
      case Scope::Code:
        break;
      case Scope::CodeSide:
        if (!meta.side)
          fail(Errc::FieldUndefinedForVariant, "fusion by side: row has none");
        key += std::string("|") + audio::to_string(*meta.side);
        break;
      case Scope::CodeLevel:
        if (!meta.level)
          fail(Errc::FieldUndefinedForVariant, "fusion by level: row has none");
        key += std::string("|") + audio::to_string(*meta.level);
        break;
      case Scope::CodeChannel:
        if (!meta.channel)
          fail(Errc::FieldUndefinedForVariant,
               "fusion by channel: row has none");
        key += "|" + std::to_string(*meta.channel);
        break;
    }

    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) {
      Group group;
      group.out.repeat = pred.repeat;
      group.out.fold = pred.fold;
      group.out.row_id = -1;
      group.out.meta.subject_code = meta.subject_code;
      if (scope == Scope::CodeSide) group.out.meta.side = meta.side;
      if (scope == Scope::CodeLevel) group.out.meta.level = meta.level;
      if (scope == Scope::CodeChannel) group.out.meta.channel = meta.channel;
      group.out.label = pred.label;
      group.out.fused_scope = to_string(scope);
      groups.push_back(std::move(group));
    }
    Group& group = groups[it->second];
    if (group.out.label != pred.label)
      fail(Errc::InconsistentGroupLabel,
           "labels disagree within fusion group " + key);
    if (group.out.fold != pred.fold) group.out.fold = -1;  // spans folds
    group.score_sum += pred.score;
    group.count += 1;
  }

  std::vector<Prediction> fused;
  fused.reserve(groups.size());
  for (auto& group : groups) {
    group.out.score = group.score_sum / static_cast<double>(group.count);
    fused.push_back(std::move(group.out));
  }
  return fused;
}

}  // namespace auscult::fusion
