#pragma once

#include <array>
#include <optional>
#include <vector>

#include "baitradar/corpus.hpp"
#include "baitradar/encoders.hpp"
#include "baitradar/fusion.hpp"
#include "baitradar/textpipe.hpp"

namespace baitradar {

enum class HeadKind { shared, individual };

struct ModelSpec {
  EncoderConfig encoders;
  /// Modalities this model has encoders for.
  ModalityMask subset = ModalityMask::all();
  /// `individual` requires a single-modality subset.
  HeadKind head = HeadKind::shared;
};

/// Declared encoders whose parameters are absent.
class MissingParametersError : public DataError {
 public:
  explicit MissingParametersError(std::vector<std::string> names);
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Requested modalities the model has no encoder for.
class MissingEncodersError : public DataError {
 public:
  explicit MissingEncodersError(ModalityMask missing);
  ModalityMask missing() const { return missing_; }

 private:
  ModalityMask missing_;
};

/// A record with every payload the model can use already converted to
/// network input.
struct PreparedRecord {
  std::string id;
  std::optional<Label> label;
  /// Present modalities, restricted to the model's subset.
  ModalityMask available;
  std::array<TokenSequence, kModalityCount> tokens;
  std::optional<Tensor> thumbnail;
  std::optional<Tensor> stats;
};

struct ForwardPass {
  ModalityMask mask;
  std::array<TextEncoder::Cache, kModalityCount> text;
  ThumbnailEncoder::Cache thumbnail;
  StatsEncoder::Cache stats;
  std::vector<EncoderOutput> outputs;
  FusedVector fused;
  ClassifierHead::Cache head;
  IndividualHead::Cache individual_head;
  double logit = 0.0;
  double probability = 0.0;
};

class BaitRadarModel {
 public:
  /// Fresh model with seeded initialization.
  static BaitRadarModel create(const ModelSpec& spec, Vocabulary vocab, StatsNormalizer normalizer,
                               std::uint64_t seed);
  /// Wraps existing parameters; throws MissingParametersError when any
  /// parameter the spec requires is absent, std::invalid_argument on extras
  /// or shape mismatches.
  static BaitRadarModel assemble(const ModelSpec& spec, Vocabulary vocab, StatsNormalizer normalizer,
                                 ParameterSet params);

  /// Names of all parameters a model with `spec` owns.
  static std::vector<std::string> required_params(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  const ModalityMask& subset() const { return spec_.subset; }
  const Vocabulary& vocab() const { return vocab_; }
  const StatsNormalizer& normalizer() const { return normalizer_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& params() { return params_; }

  PreparedRecord prepare(const VideoRecord& record, const ThumbnailResolver& resolver) const;

  EncoderOutput encode(Modality m, const PreparedRecord& record, ForwardPass* pass = nullptr) const;

  /// Runs the encoders in `mask`, fuses, and applies the head. `mask` must
  /// be nonempty and contained in `record.available`.
  double forward(const PreparedRecord& record, const ModalityMask& mask, ForwardPass* pass = nullptr) const;
  /// Accumulates parameter gradients for d loss / d logit = `grad_logit`.
  /// With `through_encoders` false only head gradients are produced.
  void backward(const ForwardPass& pass, double grad_logit, Gradients& grads, bool through_encoders = true) const;

  /// Effective mask = subset ∧ available; throws DataError naming the record
  /// when that is empty and MissingEncodersError when `subset` asks for
  /// encoders this model lacks.
  ModalityMask effective_mask(const PreparedRecord& record, const ModalityMask& subset) const;
  Prediction predict(const PreparedRecord& record, const ModalityMask& subset) const;
  Prediction predict(const VideoRecord& record, const ModalityMask& subset, const ThumbnailResolver& resolver) const;

  /// Encoder for `m` followed directly by the head, with no fusion step.
  double individual_probability(Modality m, const PreparedRecord& record) const;

 private:
  BaitRadarModel(ModelSpec spec, Vocabulary vocab, StatsNormalizer normalizer, ParameterSet params);
  double head_forward(const Tensor& fused, ForwardPass* pass) const;

  ModelSpec spec_;
  Vocabulary vocab_;
  StatsNormalizer normalizer_;
  ParameterSet params_;
  std::array<std::optional<TextEncoder>, kModalityCount> text_;
  std::optional<ThumbnailEncoder> thumbnail_;
  std::optional<StatsEncoder> stats_;
  std::optional<ClassifierHead> head_;
  std::optional<IndividualHead> individual_head_;
};

}  // namespace baitradar
