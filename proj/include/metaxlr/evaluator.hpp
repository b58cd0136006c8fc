#pragma once

// Exact-match span F1 over BIO label sequences.
//
// A span opens at B-X (or at an orphan I-X), extends over following I-X of the
// same type, and closes on any other label, on padding (-1), or at the end of
// the sentence.

#include <compare>
#include <set>
#include <span>
#include <vector>

#include "metaxlr/tensor.hpp"

namespace metaxlr::eval {

struct Span {
  int sentence = 0;
  int start = 0;
  int end = 0;  // exclusive
  int type = 0;

  auto operator<=>(const Span&) const = default;
};

using SpanSet = std::set<Span>;

SpanSet extract_spans(std::span<const int> labels, int sentence_index = 0);

struct F1Report {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
};

/// Builds P/R/F1 from counts. With no gold and no predicted spans the report is
/// a perfect 1.0; otherwise an empty denominator yields 0.
F1Report report_from_counts(long tp, long fp, long fn);

F1Report span_f1(const std::vector<std::vector<int>>& gold,
                 const std::vector<std::vector<int>>& pred);

/// Rows of a B x L label tensor as sequences (padding kept as -1).
std::vector<std::vector<int>> rows(const IndexTensor& labels);

}  // namespace metaxlr::eval
