#include "metaxlr/model.hpp"

#include <cmath>
#include <string>

#include "metaxlr/errors.hpp"

namespace metaxlr::model {

void validate(const ModelConfig& config) {
  if (config.vocab_size < 2) throw ConfigError("model: vocab_size must be >= 2");
  if (config.hidden < 1 || config.bottleneck < 1) throw ConfigError("model: sizes must be >= 1");
  if (config.encoder_layers < 0) throw ConfigError("model: encoder_layers must be >= 0");
  if (config.num_labels < 2) throw ConfigError("model: num_labels must be >= 2");
  if (config.insert_layer < 0 || config.insert_layer > config.encoder_layers)
    throw ConfigError("model: insert_layer must lie in [0, encoder_layers]");
}

namespace {

std::string encoder_name(std::size_t layer, const char* part) {
  return "encoder." + std::to_string(layer) + "." + part;
}

}  // namespace

ParamVector TaggerParams::to_params() const {
  ParamVector p;
  p.add("embedding", embedding);
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    p.add(encoder_name(i, "weight"), encoder[i].weight);
    p.add(encoder_name(i, "bias"), encoder[i].bias);
  }
  p.add("classifier.weight", classifier.weight);
  p.add("classifier.bias", classifier.bias);
  return p;
}

TaggerParams TaggerParams::from_params(const ParamVector& params) {
  const std::size_t n = params.num_segments();
  if (n < 3 || (n - 3) % 2 != 0) throw ShapeError("TaggerParams: unexpected segment count");
  TaggerParams t;
  t.embedding = params["embedding"];
  for (std::size_t i = 0; i < (n - 3) / 2; ++i)
    t.encoder.push_back({params[encoder_name(i, "weight")], params[encoder_name(i, "bias")]});
  t.classifier = {params["classifier.weight"], params["classifier.bias"]};
  return t;
}

ParamVector TransformParams::to_params() const {
  ParamVector p;
  p.add("rtn.down.weight", down.weight);
  p.add("rtn.down.bias", down.bias);
  p.add("rtn.up.weight", up.weight);
  p.add("rtn.up.bias", up.bias);
  return p;
}

TransformParams TransformParams::from_params(const ParamVector& params) {
  return {{params["rtn.down.weight"], params["rtn.down.bias"]},
          {params["rtn.up.weight"], params["rtn.up.bias"]}};
}

void validate(const Batch& batch, const ModelConfig& config) {
  if (batch.token_ids.rows() != batch.labels.rows() || batch.token_ids.cols() != batch.labels.cols())
    throw ShapeError("batch: token and label shapes differ");
  bool any_label = false;
  for (Eigen::Index i = 0; i < batch.token_ids.size(); ++i) {
    const int tok = batch.token_ids.data()[i];
    const int lab = batch.labels.data()[i];
    if (tok < 0 || tok >= config.vocab_size) throw IndexError("batch: token id out of range");
    if (lab < kIgnoreIndex || lab >= config.num_labels) throw IndexError("batch: label out of range");
    any_label = any_label || lab != kIgnoreIndex;
  }
  if (!any_label) throw DegenerateBatchError("batch: no non-padding label");
}

namespace {

Tensor uniform_tensor(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uniform_real(rng, -bound, bound);
  return t;
}

std::span<const int> flat(const IndexTensor& t) {
  return {t.data(), static_cast<std::size_t>(t.size())};
}

// Segment layout: [embedding, (w, b) per encoder layer, classifier w, b].
std::size_t num_encoder_layers(std::span<const ad::Var> theta) {
  if (theta.size() < 3 || (theta.size() - 3) % 2 != 0)
    throw ShapeError("tagger: unexpected parameter count");
  return (theta.size() - 3) / 2;
}

ad::Var encoder_layer(ad::Var h, std::span<const ad::Var> theta, std::size_t layer) {
  return ad::tanh(ad::affine(h, theta[1 + 2 * layer], theta[2 + 2 * layer]));
}

ad::Var rtn(ad::Var h, std::span<const ad::Var> phi) {
  if (phi.size() != 4) throw ShapeError("rtn: expected 4 parameter segments");
  ad::Var inner = ad::tanh(ad::affine(h, phi[0], phi[1]));
  return ad::add(h, ad::affine(inner, phi[2], phi[3]));
}

ad::Var tagger_loss(const Batch& batch, std::span<const ad::Var> theta,
                    std::span<const ad::Var> phi, int insert_layer) {
  const std::size_t layers = num_encoder_layers(theta);
  const bool with_rtn = !phi.empty();
  if (with_rtn && (insert_layer < 0 || static_cast<std::size_t>(insert_layer) > layers))
    throw ShapeError("tagger: insert_layer outside [0, encoder_layers]");
  ad::Var h = ad::embedding(theta[0], flat(batch.token_ids));
  for (std::size_t l = 0; l < layers; ++l) {
    if (with_rtn && static_cast<std::size_t>(insert_layer) == l) h = rtn(h, phi);
    h = encoder_layer(h, theta, l);
  }
  if (with_rtn && static_cast<std::size_t>(insert_layer) == layers) h = rtn(h, phi);
  ad::Var out = ad::affine(h, theta[theta.size() - 2], theta[theta.size() - 1]);
  return ad::softmax_cross_entropy(out, flat(batch.labels));
}

std::vector<ad::Var> constants(ad::Tape& tape, const ParamVector& params) {
  std::vector<ad::Var> vars;
  for (const auto& s : params.segments()) vars.push_back(tape.constant(s.value));
  return vars;
}

}  // namespace

TaggerParams init_tagger(const ModelConfig& config, Rng& rng) {
  validate(config);
  TaggerParams t;
  t.embedding = uniform_tensor(rng, config.vocab_size, config.hidden, 1.0);
  const double enc_bound = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (int l = 0; l < config.encoder_layers; ++l)
    t.encoder.push_back({uniform_tensor(rng, config.hidden, config.hidden, enc_bound),
                         Tensor::Zero(1, config.hidden)});
  t.classifier = {uniform_tensor(rng, config.hidden, config.num_labels, enc_bound),
                  Tensor::Zero(1, config.num_labels)};
  return t;
}

TransformParams init_transform(const ModelConfig& config, Rng& rng, double scale) {
  validate(config);
  TransformParams p;
  p.down = {uniform_tensor(rng, config.hidden, config.bottleneck, scale),
            uniform_tensor(rng, 1, config.bottleneck, scale)};
  p.up = {uniform_tensor(rng, config.bottleneck, config.hidden, scale),
          uniform_tensor(rng, 1, config.hidden, scale)};
  return p;
}

TransformParams identity_transform(const ModelConfig& config) {
  return {{Tensor::Zero(config.hidden, config.bottleneck), Tensor::Zero(1, config.bottleneck)},
          {Tensor::Zero(config.bottleneck, config.hidden), Tensor::Zero(1, config.hidden)}};
}

ad::Var source_loss(const Batch& batch, std::span<const ad::Var> theta,
                    std::span<const ad::Var> phi, int insert_layer) {
  if (phi.empty()) throw ShapeError("source_loss: transform parameters required");
  return tagger_loss(batch, theta, phi, insert_layer);
}

ad::Var target_loss(const Batch& batch, std::span<const ad::Var> theta) {
  return tagger_loss(batch, theta, {}, 0);
}

ad::PairLossFn source_loss_fn(const Batch& batch, int insert_layer) {
  return [&batch, insert_layer](ad::Tape&, std::span<const ad::Var> theta,
                                std::span<const ad::Var> phi) {
    return source_loss(batch, theta, phi, insert_layer);
  };
}

ad::LossFn target_loss_fn(const Batch& batch) {
  return [&batch](ad::Tape&, std::span<const ad::Var> theta) {
    return target_loss(batch, theta);
  };
}

double forward_source(const Batch& batch, const TaggerParams& theta, const TransformParams& phi,
                      int insert_layer) {
  ad::Tape tape;
  const auto t = constants(tape, theta.to_params());
  const auto p = constants(tape, phi.to_params());
  return source_loss(batch, t, p, insert_layer).scalar();
}

double forward_target(const Batch& batch, const TaggerParams& theta) {
  ad::Tape tape;
  const auto t = constants(tape, theta.to_params());
  return target_loss(batch, t).scalar();
}

Tensor logits(const IndexTensor& token_ids, const TaggerParams& theta) {
  Tensor h(token_ids.size(), theta.embedding.cols());
  for (Eigen::Index i = 0; i < token_ids.size(); ++i) {
    const int tok = token_ids.data()[i];
    if (tok < 0 || tok >= theta.embedding.rows()) throw IndexError("logits: token id out of range");
    h.row(i) = theta.embedding.row(tok);
  }
  for (const auto& layer : theta.encoder) h = metaxlr::tanh(affine(h, layer.weight, layer.bias));
  return affine(h, theta.classifier.weight, theta.classifier.bias);
}

IndexTensor predict(const Batch& batch, const TaggerParams& theta) {
  const Tensor scores = logits(batch.token_ids, theta);
  IndexTensor out(batch.labels.rows(), batch.labels.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (batch.labels.data()[i] == kIgnoreIndex) {
      out.data()[i] = kIgnoreIndex;
      continue;
    }
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    out.data()[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace metaxlr::model
