#include "baitradar/model.hpp"

#include <algorithm>
#include <set>

#include "baitradar/layers.hpp"

namespace baitradar {

namespace {

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const std::string& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

void validate_spec(const ModelSpec& spec) {
  spec.encoders.validate();
  if (spec.subset.empty()) throw std::invalid_argument("model subset must contain at least one modality");
  if (spec.head == HeadKind::individual && spec.subset.count() != 1) {
    throw std::invalid_argument("an individual head needs exactly one modality");
  }
}

ParameterSet init_params(const ModelSpec& spec, std::size_t vocab_size, std::uint64_t seed) {
  ParameterSet params;
  Rng rng = Rng::derive(seed, 0x696e6974ULL);
  for (Modality m : spec.subset.modalities()) {
    if (is_text_modality(m)) {
      TextEncoder::init_params(m, spec.encoders, vocab_size, params, rng);
    } else if (m == Modality::thumbnail) {
      ThumbnailEncoder::init_params(spec.encoders, params, rng);
    } else {
      StatsEncoder::init_params(spec.encoders, params, rng);
    }
  }
  if (spec.head == HeadKind::shared) {
    ClassifierHead::init_params(spec.encoders, params, rng);
  } else {
    IndividualHead::init_params(spec.subset.modalities().front(), spec.encoders, params, rng);
  }
  return params;
}

}  // namespace

MissingParametersError::MissingParametersError(std::vector<std::string> names)
    : DataError("missing parameters: " + join_names(names)), names_(std::move(names)) {}

MissingEncodersError::MissingEncodersError(ModalityMask missing)
    : DataError("model has no encoder for: " + join_names(missing.names())), missing_(missing) {}

BaitRadarModel::BaitRadarModel(ModelSpec spec, Vocabulary vocab, StatsNormalizer normalizer, ParameterSet params)
    : spec_(std::move(spec)), vocab_(std::move(vocab)), normalizer_(normalizer), params_(std::move(params)) {
  for (Modality m : spec_.subset.modalities()) {
    if (is_text_modality(m)) {
      text_[static_cast<std::size_t>(m)].emplace(m, params_);
    } else if (m == Modality::thumbnail) {
      thumbnail_.emplace(spec_.encoders, params_);
    } else {
      stats_.emplace(params_);
    }
  }
  if (spec_.head == HeadKind::shared) {
    head_.emplace(params_);
  } else {
    individual_head_.emplace(spec_.subset.modalities().front(), params_);
  }
}

BaitRadarModel BaitRadarModel::create(const ModelSpec& spec, Vocabulary vocab, StatsNormalizer normalizer,
                                      std::uint64_t seed) {
  validate_spec(spec);
  ParameterSet params = init_params(spec, vocab.size(), seed);
  return BaitRadarModel(spec, std::move(vocab), normalizer, std::move(params));
}

std::vector<std::string> BaitRadarModel::required_params(const ModelSpec& spec) {
  validate_spec(spec);
  std::vector<std::string> names;
  for (Modality m : spec.subset.modalities()) {
    for (std::string& n : encoder_param_names(m)) names.push_back(std::move(n));
  }
  if (spec.head == HeadKind::shared) {
    for (const char* n : {"head.dense1.weight", "head.dense1.bias", "head.dense2.weight", "head.dense2.bias"}) {
      names.emplace_back(n);
    }
  } else {
    const Modality m = spec.subset.modalities().front();
    names.push_back(param_name(m, "head", "weight"));
    names.push_back(param_name(m, "head", "bias"));
  }
  std::sort(names.begin(), names.end());
  return names;
}

BaitRadarModel BaitRadarModel::assemble(const ModelSpec& spec, Vocabulary vocab, StatsNormalizer normalizer,
                                        ParameterSet params) {
  validate_spec(spec);
  const ParameterSet reference = init_params(spec, vocab.size(), 0);
  std::vector<std::string> missing;
  for (const Parameter& ref : reference) {
    auto idx = params.find(ref.name);
    if (!idx) {
      missing.push_back(ref.name);
      continue;
    }
    if (params[*idx].value.shape() != ref.value.shape()) {
      throw std::invalid_argument("parameter '" + ref.name + "' has shape " + params[*idx].value.shape_string() +
                                  ", expected " + ref.value.shape_string());
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    throw MissingParametersError(std::move(missing));
  }
  for (const Parameter& p : params) {
    if (!reference.find(p.name)) throw std::invalid_argument("unexpected parameter '" + p.name + "'");
  }
  return BaitRadarModel(spec, std::move(vocab), normalizer, std::move(params));
}

PreparedRecord BaitRadarModel::prepare(const VideoRecord& record, const ThumbnailResolver& resolver) const {
  PreparedRecord out;
  out.id = record.id;
  out.label = record.label;
  out.available = record.available() & spec_.subset;
  for (Modality m : out.available.modalities()) {
    if (is_text_modality(m)) {
      const auto text = modality_text(record, m, spec_.encoders.text);
      out.tokens[static_cast<std::size_t>(m)] =
          baitradar::encode(tokenize(*text), vocab_, spec_.encoders.text.max_len(m));
    } else if (m == Modality::thumbnail) {
      out.thumbnail = thumbnail_to_tensor(resolver(*record.thumbnail_path), spec_.encoders.thumbnail_size);
    } else {
      out.stats = stats_to_tensor(*record.stats, normalizer_);
    }
  }
  return out;
}

EncoderOutput BaitRadarModel::encode(Modality m, const PreparedRecord& record, ForwardPass* pass) const {
  if (!record.available.has(m)) {
    throw std::invalid_argument("record '" + record.id + "' has no prepared " + std::string(modality_name(m)));
  }
  const auto idx = static_cast<std::size_t>(m);
  Tensor out;
  if (is_text_modality(m)) {
    out = text_[idx]->forward(record.tokens[idx], params_, pass ? &pass->text[idx] : nullptr);
  } else if (m == Modality::thumbnail) {
    out = thumbnail_->forward(*record.thumbnail, params_, pass ? &pass->thumbnail : nullptr);
  } else {
    out = stats_->forward(*record.stats, params_, pass ? &pass->stats : nullptr);
  }
  const std::size_t d = out.size();
  return EncoderOutput{Tensor({d}, std::vector<double>(out.values().begin(), out.values().end())), m};
}

double BaitRadarModel::head_forward(const Tensor& fused, ForwardPass* pass) const {
  if (head_) return head_->forward(fused, params_, pass ? &pass->head : nullptr);
  return individual_head_->forward(fused, params_, pass ? &pass->individual_head : nullptr);
}

double BaitRadarModel::forward(const PreparedRecord& record, const ModalityMask& mask, ForwardPass* pass) const {
  if (mask.empty()) throw DataError("record '" + record.id + "': no modality to run");
  if (!mask.subset_of(record.available)) {
    throw std::invalid_argument("record '" + record.id + "': mask " + mask.to_string() +
                                " exceeds prepared modalities " + record.available.to_string());
  }
  ForwardPass local;
  ForwardPass& p = pass ? *pass : local;
  p.mask = mask;
  p.outputs.clear();
  for (Modality m : mask.modalities()) p.outputs.push_back(encode(m, record, pass));
  p.fused = fuse(p.outputs, mask);
  p.logit = head_forward(p.fused.vector, pass);
  p.probability = nn::sigmoid(p.logit);
  return p.probability;
}

void BaitRadarModel::backward(const ForwardPass& pass, double grad_logit, Gradients& grads,
                              bool through_encoders) const {
  Tensor grad_fused = head_ ? head_->backward(pass.head, grad_logit, params_, grads)
                            : individual_head_->backward(pass.individual_head, grad_logit, params_, grads);
  if (!through_encoders) return;
  const Tensor grad_each = fuse_backward(grad_fused, pass.fused.n_present);
  for (Modality m : pass.mask.modalities()) {
    const auto idx = static_cast<std::size_t>(m);
    if (is_text_modality(m)) {
      text_[idx]->backward(pass.text[idx], grad_each, params_, grads);
    } else if (m == Modality::thumbnail) {
      thumbnail_->backward(pass.thumbnail, grad_each, params_, grads);
    } else {
      stats_->backward(pass.stats, grad_each, params_, grads);
    }
  }
}

ModalityMask BaitRadarModel::effective_mask(const PreparedRecord& record, const ModalityMask& subset) const {
  if (!subset.subset_of(spec_.subset)) {
    ModalityMask missing;
    for (Modality m : subset.modalities()) {
      if (!spec_.subset.has(m)) missing.set(m);
    }
    throw MissingEncodersError(missing);
  }
  const ModalityMask effective = subset & record.available;
  if (effective.empty()) {
    throw DataError("record '" + record.id + "' has none of the requested modalities (" + subset.to_string() + ")");
  }
  return effective;
}

Prediction BaitRadarModel::predict(const PreparedRecord& record, const ModalityMask& subset) const {
  const ModalityMask effective = effective_mask(record, subset);
  Prediction p;
  p.probability = forward(record, effective);
  p.label = decide(p.probability);
  p.mask_used = effective;
  return p;
}

Prediction BaitRadarModel::predict(const VideoRecord& record, const ModalityMask& subset,
                                   const ThumbnailResolver& resolver) const {
  if (!subset.subset_of(spec_.subset)) {
    ModalityMask missing;
    for (Modality m : subset.modalities()) {
      if (!spec_.subset.has(m)) missing.set(m);
    }
    throw MissingEncodersError(missing);
  }
  // Only decode what the request can use.
  VideoRecord trimmed = record;
  if (!subset.has(Modality::thumbnail)) trimmed.thumbnail_path.reset();
  PreparedRecord prepared = prepare(trimmed, resolver);
  prepared.available = prepared.available & subset;
  return predict(prepared, subset);
}

double BaitRadarModel::individual_probability(Modality m, const PreparedRecord& record) const {
  const EncoderOutput out = encode(m, record);
  return nn::sigmoid(head_forward(out.vector, nullptr));
}

}  // namespace baitradar
