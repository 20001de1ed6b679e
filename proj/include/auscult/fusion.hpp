#pragma once

#include <string>
#include <vector>

#include "auscult/dataset.hpp"

namespace auscult::fusion {

// One scored test row (or fused group) flowing through evaluation.
struct Prediction {
  int repeat = 0;
  int fold = -1;
  long row_id = -1;  // -1 once rows have been fused away
  dataset::RowMeta meta;
  double score = 0.0;
  int label = 0;
  std::string fused_scope;  // empty until fused
};

enum class Scope { Code, CodeSide, CodeLevel, CodeChannel };

const char* to_string(Scope s);
Scope scope_from_string(const std::string& text);

// Averages scores over the grouping key. Group labels must agree
// (InconsistentGroupLabel); the scope's field must be defined on every row
// (FieldUndefinedForVariant); empty input is EmptyGroup. Output order is
// first-appearance order of the groups.
std::vector<Prediction> fuse(const std::vector<Prediction>& predictions,
                             Scope scope);

}  // namespace auscult::fusion
