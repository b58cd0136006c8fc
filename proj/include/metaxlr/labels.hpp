#pragma once

#include <span>
#include <string>
#include <vector>

namespace metaxlr {

// Label ids: 0 = O, then (B-X, I-X) pairs per entity type X.
//   0 O, 1 B-PER, 2 I-PER, 3 B-LOC, 4 I-LOC
inline constexpr int kOutside = 0;
inline constexpr int kNumEntityTypes = 2;
inline constexpr int kNumLabels = 1 + 2 * kNumEntityTypes;

inline constexpr bool is_begin(int label) { return label > 0 && label % 2 == 1; }
inline constexpr bool is_inside(int label) { return label > 0 && label % 2 == 0; }
/// Entity type index of a B/I label; -1 for O and padding.
inline constexpr int entity_type(int label) { return label > 0 ? (label - 1) / 2 : -1; }
inline constexpr int begin_label(int type) { return 1 + 2 * type; }
inline constexpr int inside_label(int type) { return 2 + 2 * type; }

std::string label_name(int label);

/// No I-X directly after anything other than B-X or I-X.
bool is_valid_bio(std::span<const int> labels);

/// Demotes every orphan I-X to B-X; valid sequences are returned unchanged.
std::vector<int> repair_bio(std::span<const int> labels);

}  // namespace metaxlr
