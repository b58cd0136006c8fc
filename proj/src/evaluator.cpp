#include "metaxlr/evaluator.hpp"

#include <algorithm>
#include <iterator>

#include "metaxlr/errors.hpp"
#include "metaxlr/labels.hpp"

namespace metaxlr::eval {

SpanSet extract_spans(std::span<const int> labels, int sentence_index) {
  SpanSet spans;
  int open_start = -1;
  int open_type = -1;
  auto close = [&](int end) {
    if (open_start >= 0) spans.insert({sentence_index, open_start, end, open_type});
    open_start = -1;
    open_type = -1;
  };
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n; ++i) {
    const int label = labels[i];
    if (is_inside(label) && open_start >= 0 && entity_type(label) == open_type) continue;
    close(i);
    if (is_begin(label) || is_inside(label)) {
      open_start = i;
      open_type = entity_type(label);
    }
  }
  close(n);
  return spans;
}

F1Report report_from_counts(long tp, long fp, long fn) {
  F1Report r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  if (tp + fp + fn == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  const double denom = r.precision + r.recall;
  r.f1 = denom > 0.0 ? 2.0 * r.precision * r.recall / denom : 0.0;
  return r;
}

F1Report span_f1(const std::vector<std::vector<int>>& gold,
                 const std::vector<std::vector<int>>& pred) {
  if (gold.size() != pred.size())
    throw AlignmentError("span_f1: " + std::to_string(gold.size()) + " gold vs " +
                         std::to_string(pred.size()) + " predicted sentences");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size())
      throw AlignmentError("span_f1: sentence " + std::to_string(s) + " length mismatch");
    const SpanSet g = extract_spans(gold[s], static_cast<int>(s));
    const SpanSet p = extract_spans(pred[s], static_cast<int>(s));
    std::vector<Span> common;
    std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(common));
    tp += static_cast<long>(common.size());
    fp += static_cast<long>(p.size() - common.size());
    fn += static_cast<long>(g.size() - common.size());
  }
  return report_from_counts(tp, fp, fn);
}

std::vector<std::vector<int>> rows(const IndexTensor& labels) {
  std::vector<std::vector<int>> out(labels.rows());
  for (Eigen::Index r = 0; r < labels.rows(); ++r)
    out[r].assign(labels.row(r).data(), labels.row(r).data() + labels.cols());
  return out;
}

}  // namespace metaxlr::eval
