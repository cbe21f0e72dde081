#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "baitradar/tensor.hpp"
#include "baitradar/textpipe.hpp"

// Forward/backward pairs for every layer the encoders use. Backward
// functions accumulate (+=) into parameter gradients and overwrite input
// gradients, so a batch can be accumulated record by record.
namespace baitradar::nn {

// --- dense ----------------------------------------------------------------------

/// input [B x I], weight [I x O], bias [O] -> [B x O].
Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                    Tensor* grad_input, Tensor& grad_weight, Tensor& grad_bias);

// --- embedding ------------------------------------------------------------------

/// ids [B x L] -> [B x L x E]. Every position is looked up, padding included.
Tensor embedding_forward(std::span<const TokenSequence> ids, const Tensor& table);
void embedding_backward(std::span<const TokenSequence> ids, const Tensor& grad_output, Tensor& grad_table);

// --- LSTM -----------------------------------------------------------------------

/// Gate blocks are laid out [input | forget | candidate | output], each H wide.
struct LstmWeights {
  const Tensor& input;      // [E x 4H]
  const Tensor& recurrent;  // [H x 4H]
  const Tensor& bias;       // [4H]
};

struct LstmGrads {
  Tensor& input;
  Tensor& recurrent;
  Tensor& bias;
};

struct LstmCache {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t input_size = 0;
  std::size_t hidden = 0;
  std::vector<std::size_t> lengths;
  /// Activated gates, cell and hidden state per (b, t); only t < length is valid.
  std::vector<double> gates;
  std::vector<double> cells;
  std::vector<double> hiddens;
};

/// inputs [B x L x E] -> hidden state after `lengths[b]` steps, [B x H].
/// Steps at or beyond a sequence's length do not touch its state.
Tensor lstm_forward(const Tensor& inputs, const LstmWeights& weights, std::span<const std::size_t> lengths,
                    LstmCache* cache);
void lstm_backward(const Tensor& inputs, const LstmWeights& weights, const LstmCache& cache,
                   const Tensor& grad_hidden, Tensor* grad_inputs, LstmGrads grads);

// --- convolution ----------------------------------------------------------------

/// Valid cross-correlation. input [B x C x H x W], kernels [K x C x kh x kw],
/// bias [K] -> [B x K x OH x OW] with OH = (H - kh) / stride + 1.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride);
void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_output, std::size_t stride,
                     Tensor* grad_input, Tensor& grad_kernels, Tensor& grad_bias);

struct PoolCache {
  std::vector<std::size_t> input_shape;
  std::vector<std::size_t> argmax;
};

/// Non-overlapping window x window max pooling; trailing rows/cols that do
/// not fill a window are dropped.
Tensor max_pool2d_forward(const Tensor& input, std::size_t window, PoolCache* cache);
Tensor max_pool2d_backward(const Tensor& grad_output, const PoolCache& cache);

Tensor relu_forward(const Tensor& input);
/// Uses the forward output as the mask.
Tensor relu_backward(const Tensor& output, const Tensor& grad_output);

// --- classification loss --------------------------------------------------------

inline constexpr double kProbabilityEpsilon = 1e-12;

double sigmoid(double x);
/// Mean of -[y ln p + (1 - y) ln(1 - p)] with p clamped to [eps, 1 - eps].
double binary_cross_entropy(std::span<const double> probs, std::span<const double> labels);
/// d(mean BCE)/d(logit_b) = (p_b - y_b) / B.
std::vector<double> binary_cross_entropy_logit_grad(std::span<const double> probs, std::span<const double> labels);

// --- optimizer ------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update; `t` is the 1-based step count.
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
               std::span<double> second_moment, const AdamConfig& config, std::uint64_t t);
void adam_step(Parameter& param, const Tensor& grad, const AdamConfig& config, std::uint64_t t);

}  // namespace baitradar::nn
