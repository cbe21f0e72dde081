#include "baitradar/fusion.hpp"

#include <array>

#include "baitradar/error.hpp"
#include "baitradar/layers.hpp"

namespace baitradar {

Label decide(double probability) {
  return probability >= kDecisionThreshold ? Label::clickbait : Label::non_clickbait;
}

FusedVector fuse(std::span<const EncoderOutput> outputs, const ModalityMask& mask) {
  if (mask.empty()) throw ShapeError("fusion needs at least one present modality");
  std::array<const EncoderOutput*, kModalityCount> slots{};
  for (const EncoderOutput& out : outputs) {
    const auto idx = static_cast<std::size_t>(out.modality);
    if (!mask.has(out.modality)) {
      throw ShapeError("fusion got output for masked-out modality " + std::string(modality_name(out.modality)));
    }
    if (slots[idx]) throw ShapeError("fusion got two outputs for " + std::string(modality_name(out.modality)));
    slots[idx] = &out;
  }
  std::size_t dim = 0;
  bool first = true;
  for (Modality m : mask.modalities()) {
    const EncoderOutput* out = slots[static_cast<std::size_t>(m)];
    if (!out) throw ShapeError("fusion is missing the output for " + std::string(modality_name(m)));
    if (first) {
      dim = out->vector.size();
      first = false;
    } else if (out->vector.size() != dim) {
      throw ShapeError("fusion inputs differ in dimension");
    }
  }

  FusedVector fused;
  fused.n_present = mask.count();
  fused.vector = Tensor({dim});
  for (Modality m : mask.modalities()) {
    const Tensor& v = slots[static_cast<std::size_t>(m)]->vector;
    for (std::size_t i = 0; i < dim; ++i) fused.vector[i] += v[i];
  }
  const auto n = static_cast<double>(fused.n_present);
  for (std::size_t i = 0; i < dim; ++i) fused.vector[i] /= n;
  return fused;
}

Tensor fuse_backward(const Tensor& grad_fused, std::size_t n_present) {
  Tensor grad = grad_fused;
  const auto n = static_cast<double>(n_present);
  for (double& g : grad.values()) g /= n;
  return grad;
}

// --- shared head -----------------------------------------------------------------

void ClassifierHead::init_params(const EncoderConfig& config, ParameterSet& params, Rng& rng) {
  Tensor w1({config.fusion_dim, config.head_hidden});
  glorot_uniform(w1, config.fusion_dim, config.head_hidden, rng);
  Tensor w2({config.head_hidden, 1});
  glorot_uniform(w2, config.head_hidden, 1, rng);
  params.add("head.dense1.weight", std::move(w1));
  params.add("head.dense1.bias", Tensor({config.head_hidden}));
  params.add("head.dense2.weight", std::move(w2));
  params.add("head.dense2.bias", Tensor({1}));
}

ClassifierHead::ClassifierHead(const ParameterSet& params)
    : w1_(params.index_of("head.dense1.weight")),
      b1_(params.index_of("head.dense1.bias")),
      w2_(params.index_of("head.dense2.weight")),
      b2_(params.index_of("head.dense2.bias")) {}

bool ClassifierHead::is_head_param(std::string_view name) { return name.starts_with("head."); }

double ClassifierHead::forward(const Tensor& fused, const ParameterSet& params, Cache* cache) const {
  Tensor input({1, fused.size()}, std::vector<double>(fused.values().begin(), fused.values().end()));
  Tensor hidden = nn::relu_forward(nn::dense_forward(input, params[w1_].value, params[b1_].value));
  const Tensor logit = nn::dense_forward(hidden, params[w2_].value, params[b2_].value);
  if (cache) {
    cache->input = std::move(input);
    cache->hidden = std::move(hidden);
  }
  return logit[0];
}

Tensor ClassifierHead::backward(const Cache& cache, double grad_logit, const ParameterSet& params,
                                Gradients& grads) const {
  const Tensor grad_out({1, 1}, {grad_logit});
  Tensor grad_hidden;
  nn::dense_backward(cache.hidden, params[w2_].value, grad_out, &grad_hidden, grads[w2_], grads[b2_]);
  const Tensor grad_pre = nn::relu_backward(cache.hidden, grad_hidden);
  Tensor grad_input;
  nn::dense_backward(cache.input, params[w1_].value, grad_pre, &grad_input, grads[w1_], grads[b1_]);
  return grad_input;
}

// --- individual head -------------------------------------------------------------

void IndividualHead::init_params(Modality m, const EncoderConfig& config, ParameterSet& params, Rng& rng) {
  Tensor w({config.fusion_dim, 1});
  glorot_uniform(w, config.fusion_dim, 1, rng);
  params.add(param_name(m, "head", "weight"), std::move(w));
  params.add(param_name(m, "head", "bias"), Tensor({1}));
}

IndividualHead::IndividualHead(Modality m, const ParameterSet& params)
    : w_(params.index_of(param_name(m, "head", "weight"))), b_(params.index_of(param_name(m, "head", "bias"))) {}

double IndividualHead::forward(const Tensor& fused, const ParameterSet& params, Cache* cache) const {
  Tensor input({1, fused.size()}, std::vector<double>(fused.values().begin(), fused.values().end()));
  const Tensor logit = nn::dense_forward(input, params[w_].value, params[b_].value);
  if (cache) cache->input = std::move(input);
  return logit[0];
}

Tensor IndividualHead::backward(const Cache& cache, double grad_logit, const ParameterSet& params,
                                Gradients& grads) const {
  const Tensor grad_out({1, 1}, {grad_logit});
  Tensor grad_input;
  nn::dense_backward(cache.input, params[w_].value, grad_out, &grad_input, grads[w_], grads[b_]);
  return grad_input;
}

Prediction classify_head(const FusedVector& fused, const ClassifierHead& head, const ParameterSet& params,
                         const ModalityMask& mask_used) {
  Prediction p;
  p.probability = nn::sigmoid(head.forward(fused.vector, params, nullptr));
  p.label = decide(p.probability);
  p.mask_used = mask_used;
  return p;
}

}  // namespace baitradar
