#pragma once

// Per-token sequence tagger and the representation transformation network
// (RTN) that sits between two encoder layers on the source-language path.
//
//   target: embed -> encoder[0..L) -> classifier
//   source: embed -> encoder[0..k) -> RTN -> encoder[k..L) -> classifier
//
// RTN(h) = h + tanh(h W_down + b_down) W_up + b_up, so zero up-projection
// weights make it an exact identity.

#include <span>
#include <vector>

#include "metaxlr/autodiff.hpp"
#include "metaxlr/random.hpp"
#include "metaxlr/tensor.hpp"

namespace metaxlr::model {

struct ModelConfig {
  int vocab_size = 512;
  int hidden = 32;
  int bottleneck = 16;
  int encoder_layers = 2;
  int num_labels = 5;
  int insert_layer = 1;

  bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& config);

struct AffineParams {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

struct TaggerParams {
  Tensor embedding;  // vocab x hidden
  std::vector<AffineParams> encoder;
  AffineParams classifier;

  ParamVector to_params() const;
  static TaggerParams from_params(const ParamVector& params);
};

struct TransformParams {
  AffineParams down;  // hidden x bottleneck
  AffineParams up;    // bottleneck x hidden

  ParamVector to_params() const;
  static TransformParams from_params(const ParamVector& params);
};

struct Batch {
  IndexTensor token_ids;  // B x L, padding token 0
  IndexTensor labels;     // B x L, padding label -1
  int language_id = 0;
};

void validate(const Batch& batch, const ModelConfig& config);

/// Uniform +-1/sqrt(fan_in) weights (fan_in = 1 for the embedding), zero biases.
TaggerParams init_tagger(const ModelConfig& config, Rng& rng);
/// Uniform +-scale weights and biases.
TransformParams init_transform(const ModelConfig& config, Rng& rng, double scale = 0.01);
TransformParams identity_transform(const ModelConfig& config);

// Differentiable forward passes. `theta` and `phi` follow the segment order of
// TaggerParams::to_params() / TransformParams::to_params().
ad::Var source_loss(const Batch& batch, std::span<const ad::Var> theta,
                    std::span<const ad::Var> phi, int insert_layer);
ad::Var target_loss(const Batch& batch, std::span<const ad::Var> theta);

ad::PairLossFn source_loss_fn(const Batch& batch, int insert_layer);
ad::LossFn target_loss_fn(const Batch& batch);

double forward_source(const Batch& batch, const TaggerParams& theta, const TransformParams& phi,
                      int insert_layer);
double forward_target(const Batch& batch, const TaggerParams& theta);

/// Label logits for every position, (B*L) x num_labels, target path.
Tensor logits(const IndexTensor& token_ids, const TaggerParams& theta);

/// Argmax label per token (lowest id on ties); -1 at padding positions.
IndexTensor predict(const Batch& batch, const TaggerParams& theta);

}  // namespace metaxlr::model
