#include <doctest.h>

#include <vector>

#include "metaxlr/errors.hpp"
#include "metaxlr/evaluator.hpp"

using namespace metaxlr;
using namespace metaxlr::eval;

namespace {

// Reference extractor written from the rules, one token at a time with an
// explicit "open span" record.
SpanSet reference_spans(const std::vector<int>& labels) {
  SpanSet out;
  int open_start = -1, open_type = -1;
  auto close = [&](int end) {
    if (open_start >= 0) out.insert({0, open_start, end, open_type});
    open_start = open_type = -1;
  };
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    const int l = labels[i];
    if (l <= 0) {
      close(i);
    } else if (l % 2 == 1) {  // B-X
      close(i);
      open_start = i;
      open_type = (l - 1) / 2;
    } else {  // I-X
      const int type = (l - 2) / 2;
      if (open_start >= 0 && open_type == type) continue;
      close(i);
      open_start = i;
      open_type = type;
    }
  }
  close(static_cast<int>(labels.size()));
  return out;
}

}  // namespace

TEST_CASE("span extraction examples") {
  CHECK(extract_spans(std::vector<int>{1, 2, 0}) == SpanSet{{0, 0, 2, 0}});
  CHECK(extract_spans(std::vector<int>{0, 0, 0}).empty());
  CHECK(extract_spans(std::vector<int>{1, 4}) == SpanSet{{0, 0, 1, 0}, {0, 1, 2, 1}});
  CHECK(extract_spans(std::vector<int>{2, 2}) == SpanSet{{0, 0, 2, 0}});
  CHECK(extract_spans(std::vector<int>{3, 4, -1, 4}) == SpanSet{{0, 0, 2, 1}, {0, 3, 4, 1}});
  CHECK(extract_spans(std::vector<int>{1, 1}, 7) == SpanSet{{7, 0, 1, 0}, {7, 1, 2, 0}});
}

TEST_CASE("extractor agrees with the reference on every sequence up to length 4") {
  long checked = 0;
  for (int len = 0; len <= 4; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= 5;
    for (int code = 0; code < total; ++code) {
      std::vector<int> labels(len);
      int c = code;
      for (int i = 0; i < len; ++i, c /= 5) labels[i] = c % 5;
      CHECK(extract_spans(labels) == reference_spans(labels));
      ++checked;
    }
  }
  CHECK(checked == 1 + 5 + 25 + 125 + 625);
}

TEST_CASE("span F1 hand counts") {
  const std::vector<std::vector<int>> gold{{1, 2, 0, 3}};
  auto r = span_f1(gold, gold);
  CHECK(r.f1 == 1.0);
  CHECK(r.tp == 2);

  r = span_f1(gold, {{0, 0, 0, 0}});
  CHECK(r.f1 == 0.0);
  CHECK(r.fn == 2);

  // gold {A, B}, pred {B, C}
  const std::vector<std::vector<int>> g{{1, 0, 3, 0}};
  const std::vector<std::vector<int>> p{{0, 0, 3, 1}};
  r = span_f1(g, p);
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == 0.5);

  r = span_f1({{0, 0}}, {{0, 0}});
  CHECK(r.f1 == 1.0);
}

TEST_CASE("span F1 is micro averaged across sentences") {
  const std::vector<std::vector<int>> g{{1, 0}, {3, 4}, {0, 0}};
  const std::vector<std::vector<int>> p{{1, 0}, {3, 0}, {1, 0}};
  const auto r = span_f1(g, p);
  CHECK(r.tp == 1);
  CHECK(r.fp == 2);
  CHECK(r.fn == 1);
  CHECK(r.precision == doctest::Approx(1.0 / 3));
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == doctest::Approx(0.4));
}

TEST_CASE("span F1 symmetry and range") {
  const std::vector<std::vector<int>> a{{1, 2, 0, 3, 4}, {0, 1}, {4, 4, 1}};
  const std::vector<std::vector<int>> b{{1, 0, 0, 3, 4}, {2, 2}, {3, 4, 0}};
  const auto ab = span_f1(a, b), ba = span_f1(b, a);
  CHECK(ab.f1 == ba.f1);
  CHECK(ab.f1 >= 0.0);
  CHECK(ab.f1 <= 1.0);
  CHECK(ab.precision == ba.recall);
}

TEST_CASE("span F1 alignment errors") {
  CHECK_THROWS_AS(span_f1({{0}}, {{0}, {0}}), AlignmentError);
  CHECK_THROWS_AS(span_f1({{0, 1}}, {{0}}), AlignmentError);
}

TEST_CASE("report from counts") {
  auto r = report_from_counts(0, 0, 0);
  CHECK(r.f1 == 1.0);
  r = report_from_counts(0, 3, 0);
  CHECK(r.f1 == 0.0);
  r = report_from_counts(3, 1, 2);
  CHECK(r.precision == 0.75);
  CHECK(r.recall == 0.6);
  CHECK(r.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
}

TEST_CASE("rows keeps padding") {
  IndexTensor t(2, 3);
  t << 1, 2, -1, 0, 3, 4;
  const auto r = rows(t);
  CHECK(r.size() == 2);
  CHECK(r[0] == std::vector<int>{1, 2, -1});
}
