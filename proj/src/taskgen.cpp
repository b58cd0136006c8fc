#include "metaxlr/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "metaxlr/errors.hpp"
#include "metaxlr/labels.hpp"

namespace metaxlr::taskgen {

void validate(const LanguageSpec& spec) {
  if (!(spec.divergence >= 0.0 && spec.divergence <= 1.0))
    throw ConfigError("language " + std::to_string(spec.language_id) +
                      ": divergence must lie in [0, 1]");
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0))
    throw ConfigError("language " + std::to_string(spec.language_id) +
                      ": label_noise must lie in [0, 1]");
}

void validate(const ClusterSpec& cluster) {
  validate(cluster.target);
  if (cluster.target.divergence != 0.0 || cluster.target.label_noise != 0.0)
    throw ConfigError("cluster: target language must have zero divergence and label noise");
  if (cluster.sources.empty()) throw ConfigError("cluster: at least one source language required");
  for (const auto& s : cluster.sources) validate(s);
  if (cluster.target_size < 1 || cluster.source_size < 1)
    throw ConfigError("cluster: corpus sizes must be positive");
}

namespace {

constexpr double kAmbiguousRate = 0.1;
constexpr double kEntityStartRate = 0.35;

// Contiguous id ranges: one shared ambiguous pool, then one pool per label.
struct EmissionPools {
  int ambiguous_begin = 1;
  int ambiguous_end = 1;
  std::vector<int> begin;  // per label
  std::vector<int> end;
  std::vector<std::vector<double>> cdf;  // Zipf(1) over each label pool

  explicit EmissionPools(int vocab_size) {
    const int n = vocab_size - 1;
    if (n < 2 * kNumLabels) throw ConfigError("taskgen: vocab_size too small");
    ambiguous_end = ambiguous_begin + std::max(1, n * 8 / 100);
    const int outside = n * 52 / 100;
    const int entity = (n - (ambiguous_end - 1) - outside) / (kNumLabels - 1);
    int next = ambiguous_end;
    for (int label = 0; label < kNumLabels; ++label) {
      const int width = label == kOutside ? outside : entity;
      begin.push_back(next);
      end.push_back(label == kNumLabels - 1 ? vocab_size : next + width);
      next = end.back();
      std::vector<double> c(end.back() - begin.back());
      double acc = 0.0;
      for (std::size_t r = 0; r < c.size(); ++r) c[r] = acc += 1.0 / static_cast<double>(r + 1);
      for (double& x : c) x /= acc;
      cdf.push_back(std::move(c));
    }
  }

  int emit(int label, Rng& rng) const {
    if (uniform01(rng) < kAmbiguousRate)
      return ambiguous_begin + static_cast<int>(uniform_index(rng, ambiguous_end - ambiguous_begin));
    const auto& c = cdf[label];
    const double u = uniform01(rng);
    const auto it = std::upper_bound(c.begin(), c.end(), u);
    const auto rank = std::min<std::ptrdiff_t>(it - c.begin(), static_cast<std::ptrdiff_t>(c.size()) - 1);
    return begin[label] + static_cast<int>(rank);
  }
};

std::vector<int> sample_label_sequence(Rng& rng) {
  const int length =
      kMinSentenceLength + static_cast<int>(uniform_index(rng, kMaxSentenceLength - kMinSentenceLength + 1));
  std::vector<int> labels;
  labels.reserve(length);
  while (static_cast<int>(labels.size()) < length) {
    if (uniform01(rng) < kEntityStartRate) {
      const int type = static_cast<int>(uniform_index(rng, kNumEntityTypes));
      const int span = 1 + static_cast<int>(uniform_index(rng, 3));
      labels.push_back(begin_label(type));
      for (int i = 1; i < span; ++i) labels.push_back(inside_label(type));
    } else {
      const int span = 1 + static_cast<int>(uniform_index(rng, 4));
      labels.insert(labels.end(), span, kOutside);
    }
  }
  labels.resize(length);
  return labels;
}

}  // namespace

std::vector<int> vocabulary_map(const LanguageSpec& spec, int vocab_size) {
  validate(spec);
  std::vector<int> map(vocab_size);
  std::iota(map.begin(), map.end(), 0);
  const int n = vocab_size - 1;
  const int count = static_cast<int>(std::ceil(spec.divergence * n));
  if (count < 2) return map;  // a single id cannot move without a fixed point

  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 1);
  Rng rng(mix_seed(spec.seed, 1));
  for (int i = n - 1; i > 0; --i)
    std::swap(ids[i], ids[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
  // Cyclic shift over the chosen subset: a permutation with no fixed points.
  for (int i = 0; i < count; ++i) map[ids[i]] = ids[(i + 1) % count];
  return map;
}

Corpus generate_corpus(const LanguageSpec& spec, int size, std::uint64_t shared_seed,
                       int vocab_size) {
  validate(spec);
  if (size < 1) throw ConfigError("generate_corpus: size must be >= 1");
  const EmissionPools pools(vocab_size);
  const std::vector<int> remap = vocabulary_map(spec, vocab_size);

  Rng base(mix_seed(shared_seed, 0));
  Rng noise(mix_seed(mix_seed(spec.seed, 2), shared_seed));

  Corpus corpus;
  corpus.language_id = spec.language_id;
  corpus.sentences.reserve(size);
  for (int s = 0; s < size; ++s) {
    Sentence sentence;
    sentence.labels = sample_label_sequence(base);
    for (int label : sentence.labels) sentence.tokens.push_back(remap[pools.emit(label, base)]);
    if (spec.label_noise > 0.0) {
      for (int& label : sentence.labels) {
        if (uniform01(noise) >= spec.label_noise) continue;
        const int shift = 1 + static_cast<int>(uniform_index(noise, kNumLabels - 1));
        label = (label + shift) % kNumLabels;
      }
      sentence.labels = repair_bio(sentence.labels);
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

std::vector<std::string> cluster_presets() {
  return {"homogeneous", "heterogeneous", "single_close", "single_far"};
}

ClusterSpec make_cluster(const std::string& preset, std::uint64_t seed) {
  std::vector<double> divergences;
  if (preset == "heterogeneous")
    divergences = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  else if (preset == "homogeneous")
    divergences.assign(8, 0.3);
  else if (preset == "single_close")
    divergences = {0.1};
  else if (preset == "single_far")
    divergences = {0.7};
  else
    throw ConfigError("unknown cluster preset '" + preset + "'");

  ClusterSpec cluster;
  cluster.target = {0, 0.0, 0.0, mix_seed(seed, 0)};
  for (std::size_t i = 0; i < divergences.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    cluster.sources.push_back({id, divergences[i], 0.0, mix_seed(seed, id)});
  }
  return cluster;
}

model::Batch make_batch(std::span<const Sentence* const> sentences, int language_id) {
  if (sentences.empty()) throw ConfigError("make_batch: no sentences");
  std::size_t width = 0;
  for (const Sentence* s : sentences) width = std::max(width, s->tokens.size());
  model::Batch batch;
  batch.language_id = language_id;
  batch.token_ids = IndexTensor::Constant(static_cast<Eigen::Index>(sentences.size()),
                                          static_cast<Eigen::Index>(width), kPadToken);
  batch.labels = IndexTensor::Constant(batch.token_ids.rows(), batch.token_ids.cols(), kIgnoreIndex);
  for (std::size_t r = 0; r < sentences.size(); ++r)
    for (std::size_t c = 0; c < sentences[r]->tokens.size(); ++c) {
      batch.token_ids(r, c) = sentences[r]->tokens[c];
      batch.labels(r, c) = sentences[r]->labels[c];
    }
  return batch;
}

BatchSampler::BatchSampler(const Corpus& corpus, int batch_size)
    : corpus_(&corpus), batch_size_(batch_size) {
  if (corpus.sentences.empty()) throw ConfigError("batch sampler: empty corpus");
  if (batch_size < 1) throw ConfigError("batch sampler: batch_size must be >= 1");
}

std::vector<std::size_t> BatchSampler::draw_indices(Rng& rng) const {
  std::vector<std::size_t> idx(batch_size_);
  for (auto& i : idx) i = uniform_index(rng, corpus_->sentences.size());
  return idx;
}

model::Batch BatchSampler::next(Rng& rng) const {
  std::vector<const Sentence*> picked;
  for (std::size_t i : draw_indices(rng)) picked.push_back(&corpus_->sentences[i]);
  return make_batch(picked, corpus_->language_id);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << "# language_id: " << corpus.language_id << '\n';
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    if (s > 0) out << '\n';
    const Sentence& sentence = corpus.sentences[s];
    for (std::size_t i = 0; i < sentence.tokens.size(); ++i)
      out << sentence.tokens[i] << '\t' << sentence.labels[i] << '\n';
  }
}

namespace {

int parse_int(const std::string& text, int line_no) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || (text[0] == '+') || std::to_string(value) != text)
    throw ConfigError("corpus line " + std::to_string(line_no) + ": malformed integer '" + text + "'");
  return value;
}

}  // namespace

Corpus read_corpus(std::istream& in) {
  const std::string header = "# language_id: ";
  std::string line;
  if (!std::getline(in, line) || line.rfind(header, 0) != 0)
    throw ConfigError("corpus line 1: missing '# language_id: N' header");
  Corpus corpus;
  corpus.language_id = parse_int(line.substr(header.size()), 1);

  int line_no = 1;
  Sentence current;
  bool pending_blank = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      if (current.tokens.empty() || pending_blank)
        throw ConfigError("corpus line " + std::to_string(line_no) + ": unexpected blank line");
      corpus.sentences.push_back(std::move(current));
      current = {};
      pending_blank = true;
      continue;
    }
    pending_blank = false;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ConfigError("corpus line " + std::to_string(line_no) + ": expected 'token<TAB>label'");
    current.tokens.push_back(parse_int(line.substr(0, tab), line_no));
    current.labels.push_back(parse_int(line.substr(tab + 1), line_no));
  }
  if (pending_blank) throw ConfigError("corpus: trailing blank line");
  if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
  return corpus;
}

std::string to_text(const Corpus& corpus) {
  std::ostringstream out;
  write_corpus(out, corpus);
  return out.str();
}

Corpus from_text(const std::string& text) {
  if (!text.empty() && text.back() != '\n') throw ConfigError("corpus: missing final newline");
  std::istringstream in(text);
  return read_corpus(in);
}

}  // namespace metaxlr::taskgen
