#pragma once

#include <span>
#include <vector>

#include "baitradar/corpus.hpp"
#include "baitradar/encoders.hpp"
#include "baitradar/modality.hpp"
#include "baitradar/tensor.hpp"

namespace baitradar {

struct FusedVector {
  Tensor vector;  // [d]
  std::size_t n_present = 0;
};

inline constexpr double kDecisionThreshold = 0.5;

struct Prediction {
  double probability = 0.0;
  Label label = Label::non_clickbait;
  ModalityMask mask_used;
};

/// Clickbait iff probability >= 0.5.
Label decide(double probability);

/// Element-wise average of the present encoder outputs: the sum is taken
/// in canonical modality order, then divided by the number present.
/// `outputs` must hold exactly one vector per set flag in `mask`, in any
/// order. Throws ShapeError on an empty mask or mismatched dimensions.
FusedVector fuse(std::span<const EncoderOutput> outputs, const ModalityMask& mask);

/// Gradient of the fused vector w.r.t. each present input: grad / n_present.
Tensor fuse_backward(const Tensor& grad_fused, std::size_t n_present);

/// dense(d -> hidden) -> relu -> dense(hidden -> 1) -> sigmoid.
class ClassifierHead {
 public:
  struct Cache {
    Tensor input;   // [1 x d]
    Tensor hidden;  // after relu
  };

  static void init_params(const EncoderConfig& config, ParameterSet& params, Rng& rng);
  explicit ClassifierHead(const ParameterSet& params);

  /// Returns the logit.
  double forward(const Tensor& fused, const ParameterSet& params, Cache* cache) const;
  /// Returns d logit / d fused, shape [1 x d].
  Tensor backward(const Cache& cache, double grad_logit, const ParameterSet& params, Gradients& grads) const;

  static bool is_head_param(std::string_view name);

 private:
  std::size_t w1_, b1_, w2_, b2_;
};

/// Private single-modality head used for individually trained models:
/// dense(d -> 1) -> sigmoid. Parameters are `<modality>.head.weight|bias`.
class IndividualHead {
 public:
  struct Cache {
    Tensor input;
  };

  static void init_params(Modality m, const EncoderConfig& config, ParameterSet& params, Rng& rng);
  IndividualHead(Modality m, const ParameterSet& params);

  double forward(const Tensor& fused, const ParameterSet& params, Cache* cache) const;
  Tensor backward(const Cache& cache, double grad_logit, const ParameterSet& params, Gradients& grads) const;

 private:
  std::size_t w_, b_;
};

/// Head forward with the threshold applied.
Prediction classify_head(const FusedVector& fused, const ClassifierHead& head, const ParameterSet& params,
                         const ModalityMask& mask_used);

}  // namespace baitradar
