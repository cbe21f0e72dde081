#pragma once

#include <array>
#include <optional>

#include <json.hpp>

#include "baitradar/corpus.hpp"
#include "baitradar/layers.hpp"
#include "baitradar/modality.hpp"
#include "baitradar/tensor.hpp"
#include "baitradar/textpipe.hpp"

namespace baitradar {

/// Layer sizes shared by all six encoders and the head.
struct EncoderConfig {
  std::size_t fusion_dim = 64;
  std::size_t embedding_dim = 32;
  std::size_t thumbnail_size = 64;
  std::size_t conv1_kernels = 8;
  std::size_t conv2_kernels = 16;
  std::size_t kernel_size = 5;
  std::size_t conv_stride = 1;
  std::size_t pool_window = 2;
  std::size_t stats_hidden = 32;
  std::size_t head_hidden = 32;
  TextLimits text;

  /// Width of the flattened second pooling layer.
  std::size_t thumbnail_flat_size() const;
  void validate() const;

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  bool operator==(const EncoderConfig& other) const { return to_json() == other.to_json(); }
};

struct EncoderOutput {
  Tensor vector;  // [d]
  Modality modality = Modality::title;
};

/// log1p + z-score over the five statistics features, fitted on training data.
class StatsNormalizer {
 public:
  StatsNormalizer() = default;
  StatsNormalizer(std::array<double, StatsFeatures::kFeatureCount> mean,
                  std::array<double, StatsFeatures::kFeatureCount> stddev);

  /// Records without statistics are ignored. A feature with zero spread
  /// gets stddev 1.
  static StatsNormalizer fit(const std::vector<VideoRecord>& records);

  bool fitted() const { return fitted_; }
  const std::array<double, StatsFeatures::kFeatureCount>& mean() const { return mean_; }
  const std::array<double, StatsFeatures::kFeatureCount>& stddev() const { return stddev_; }
  /// Throws std::logic_error when unfitted.
  std::array<double, StatsFeatures::kFeatureCount> apply(const StatsFeatures& stats) const;

  bool operator==(const StatsNormalizer&) const = default;

 private:
  bool fitted_ = false;
  std::array<double, StatsFeatures::kFeatureCount> mean_{};
  std::array<double, StatsFeatures::kFeatureCount> stddev_{};
};

/// Parameter name as stored in checkpoints: `<modality>.<layer>.<tensor>`.
std::string param_name(Modality m, std::string_view layer, std::string_view tensor);

/// embedding -> LSTM -> final hidden state (width d).
class TextEncoder {
 public:
  struct Cache {
    TokenSequence ids;
    Tensor embedded;
    nn::LstmCache lstm;
  };

  /// Adds freshly initialized parameters for `m` to `params`.
  static void init_params(Modality m, const EncoderConfig& config, std::size_t vocab_size, ParameterSet& params,
                          Rng& rng);
  /// Binds to parameters already in `params`; throws std::out_of_range if absent.
  TextEncoder(Modality m, const ParameterSet& params);

  Modality modality() const { return modality_; }
  /// Output [1 x d].
  Tensor forward(const TokenSequence& ids, const ParameterSet& params, Cache* cache) const;
  void backward(const Cache& cache, const Tensor& grad_output, const ParameterSet& params, Gradients& grads) const;

 private:
  Modality modality_;
  std::size_t table_, w_input_, w_recurrent_, bias_;
};

/// Resizes to a square input (nearest neighbour) and scales to [0, 1].
/// Result shape [1 x 3 x S x S]. Throws DataError for non-RGB images.
Tensor thumbnail_to_tensor(const ThumbnailImage& image, std::size_t size);

/// conv -> relu -> pool -> conv -> relu -> pool -> flatten -> dense(d).
class ThumbnailEncoder {
 public:
  struct Cache {
    Tensor input;
    Tensor conv1_out;  // after relu
    nn::PoolCache pool1;
    Tensor pool1_out;
    Tensor conv2_out;  // after relu
    nn::PoolCache pool2;
    Tensor flat;
  };

  static void init_params(const EncoderConfig& config, ParameterSet& params, Rng& rng);
  ThumbnailEncoder(const EncoderConfig& config, const ParameterSet& params);

  Tensor forward(const Tensor& image, const ParameterSet& params, Cache* cache) const;
  void backward(const Cache& cache, const Tensor& grad_output, const ParameterSet& params, Gradients& grads) const;

 private:
  std::size_t stride_, pool_;
  std::size_t conv1_k_, conv1_b_, conv2_k_, conv2_b_, dense_w_, dense_b_;
};

/// Normalized statistics [1 x 5].
Tensor stats_to_tensor(const StatsFeatures& stats, const StatsNormalizer& normalizer);

/// dense(5 -> hidden) -> relu -> dense(hidden -> d).
class StatsEncoder {
 public:
  struct Cache {
    Tensor input;
    Tensor hidden;  // after relu
  };

  static void init_params(const EncoderConfig& config, ParameterSet& params, Rng& rng);
  explicit StatsEncoder(const ParameterSet& params);

  Tensor forward(const Tensor& features, const ParameterSet& params, Cache* cache) const;
  void backward(const Cache& cache, const Tensor& grad_output, const ParameterSet& params, Gradients& grads) const;

 private:
  std::size_t w1_, b1_, w2_, b2_;
};

/// Names of every parameter the encoder for `m` owns.
std::vector<std::string> encoder_param_names(Modality m);

}  // namespace baitradar
