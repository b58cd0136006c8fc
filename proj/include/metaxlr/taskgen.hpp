#pragma once

// Synthetic multilingual tagging corpora.
//
// Every language shares one segment-level generative process (entity spans of
// length 1-3 and filler spans, each token emitted from a label-specific pool).
// A language then differs from the target by
//   - a fixed-point-free permutation of ceil(divergence * n) vocabulary ids
//     (n = vocab_size - 1, id 0 is reserved for padding), and
//   - independent label corruption with probability label_noise, followed by
//     orphan-I repair.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "metaxlr/model.hpp"
#include "metaxlr/random.hpp"

namespace metaxlr::taskgen {

inline constexpr int kMinSentenceLength = 3;
inline constexpr int kMaxSentenceLength = 24;
inline constexpr int kDefaultVocabSize = 512;
inline constexpr int kPadToken = 0;

struct LanguageSpec {
  int language_id = 0;
  double divergence = 0.0;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};

void validate(const LanguageSpec& spec);

struct Sentence {
  std::vector<int> tokens;
  std::vector<int> labels;

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  int language_id = 0;
  std::vector<Sentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool operator==(const Corpus&) const = default;
};

struct ClusterSpec {
  LanguageSpec target;
  std::vector<LanguageSpec> sources;
  int target_size = 100;
  int source_size = 1000;

  int num_sources() const { return static_cast<int>(sources.size()); }
};

void validate(const ClusterSpec& cluster);

/// The source-language map of a language: token -> remapped token.
/// Identity outside the remapped subset.
std::vector<int> vocabulary_map(const LanguageSpec& spec, int vocab_size = kDefaultVocabSize);

/// Deterministic in (spec, size, shared_seed, vocab_size).
Corpus generate_corpus(const LanguageSpec& spec, int size, std::uint64_t shared_seed,
                       int vocab_size = kDefaultVocabSize);

/// Presets: homogeneous, heterogeneous, single_close, single_far.
ClusterSpec make_cluster(const std::string& preset, std::uint64_t seed);
std::vector<std::string> cluster_presets();

/// Pads to the longest sentence with token 0 / label -1.
model::Batch make_batch(std::span<const Sentence* const> sentences, int language_id);

/// Draws batch_size sentences uniformly with replacement per call.
class BatchSampler {
 public:
  BatchSampler(const Corpus& corpus, int batch_size);
  model::Batch next(Rng& rng) const;
  /// Indices that the next call with an identically seeded rng would use.
  std::vector<std::size_t> draw_indices(Rng& rng) const;

 private:
  const Corpus* corpus_;
  int batch_size_;
};

// Text format: "# language_id: N" header, then one "token\tlabel" line per
// token, with a blank line between sentences.
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);
std::string to_text(const Corpus& corpus);
Corpus from_text(const std::string& text);

}  // namespace metaxlr::taskgen
