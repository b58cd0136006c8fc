#include "metaxlr/labels.hpp"

namespace metaxlr {

std::string label_name(int label) {
  static const char* const kTypes[kNumEntityTypes] = {"PER", "LOC"};
  if (label == kOutside) return "O";
  if (label < 0 || label >= kNumLabels) return "PAD";
  return std::string(is_begin(label) ? "B-" : "I-") + kTypes[entity_type(label)];
}

bool is_valid_bio(std::span<const int> labels) {
  int previous = kOutside;
  for (int label : labels) {
    if (is_inside(label) && entity_type(previous) != entity_type(label)) return false;
    previous = label;
  }
  return true;
}

std::vector<int> repair_bio(std::span<const int> labels) {
  std::vector<int> out(labels.begin(), labels.end());
  int previous = kOutside;
  for (int& label : out) {
    if (is_inside(label) && entity_type(previous) != entity_type(label))
      label = begin_label(entity_type(label));
    previous = label;
  }
  return out;
}

}  // namespace metaxlr
