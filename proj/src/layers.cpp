#include "baitradar/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "baitradar/error.hpp"

namespace baitradar::nn {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  require(t.rank() == rank, std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                                t.shape_string());
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// --- dense ----------------------------------------------------------------------

Tensor dense_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "dense input");
  require_rank(weight, 2, "dense weight");
  require_rank(bias, 1, "dense bias");
  const std::size_t batch = input.dim(0), in = input.dim(1), out = weight.dim(1);
  require(weight.dim(0) == in, "dense weight rows " + std::to_string(weight.dim(0)) + " != input width " +
                                   std::to_string(in));
  require(bias.dim(0) == out, "dense bias length does not match weight columns");

  Tensor output({batch, out});
  for (std::size_t b = 0; b < batch; ++b) {
    double* row = output.data() + b * out;
    std::copy_n(bias.data(), out, row);
    const double* x = input.data() + b * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = x[i];
      const double* w = weight.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) row[o] += xi * w[o];
    }
  }
  return output;
}

void dense_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output, Tensor* grad_input,
                    Tensor& grad_weight, Tensor& grad_bias) {
  const std::size_t batch = input.dim(0), in = input.dim(1), out = weight.dim(1);
  require(grad_output.rank() == 2 && grad_output.dim(0) == batch && grad_output.dim(1) == out,
          "dense upstream gradient shape mismatch");
  if (grad_input) *grad_input = Tensor({batch, in});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = grad_output.data() + b * out;
    const double* x = input.data() + b * in;
    for (std::size_t o = 0; o < out; ++o) grad_bias[o] += g[o];
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = x[i];
      double* gw = grad_weight.data() + i * out;
      const double* w = weight.data() + i * out;
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) {
        gw[o] += xi * g[o];
        acc += w[o] * g[o];
      }
      if (grad_input) (*grad_input)[b * in + i] = acc;
    }
  }
}

// --- embedding ------------------------------------------------------------------

Tensor embedding_forward(std::span<const TokenSequence> ids, const Tensor& table) {
  require_rank(table, 2, "embedding table");
  const std::size_t batch = ids.size();
  const std::size_t length = batch ? ids[0].ids.size() : 0;
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  Tensor output({batch, length, width});
  for (std::size_t b = 0; b < batch; ++b) {
    require(ids[b].ids.size() == length, "embedding batch has ragged sequence lengths");
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t id = ids[b].ids[t];
      if (id >= vocab) {
        throw ShapeError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                         std::to_string(vocab));
      }
      std::copy_n(table.data() + id * width, width, output.data() + (b * length + t) * width);
    }
  }
  return output;
}

void embedding_backward(std::span<const TokenSequence> ids, const Tensor& grad_output, Tensor& grad_table) {
  const std::size_t width = grad_table.dim(1);
  const std::size_t length = ids.empty() ? 0 : ids[0].ids.size();
  for (std::size_t b = 0; b < ids.size(); ++b) {
    for (std::size_t t = 0; t < length; ++t) {
      double* dst = grad_table.data() + ids[b].ids[t] * width;
      const double* src = grad_output.data() + (b * length + t) * width;
      for (std::size_t e = 0; e < width; ++e) dst[e] += src[e];
    }
  }
}

// --- LSTM -----------------------------------------------------------------------

Tensor lstm_forward(const Tensor& inputs, const LstmWeights& w, std::span<const std::size_t> lengths,
                    LstmCache* cache) {
  require_rank(inputs, 3, "lstm inputs");
  require_rank(w.input, 2, "lstm input weights");
  require_rank(w.recurrent, 2, "lstm recurrent weights");
  const std::size_t batch = inputs.dim(0), steps = inputs.dim(1), in = inputs.dim(2);
  const std::size_t gates = w.input.dim(1), hidden = gates / 4;
  require(gates % 4 == 0 && gates > 0, "lstm gate width must be a positive multiple of 4");
  require(w.input.dim(0) == in, "lstm input weight rows do not match input width");
  require(w.recurrent.dim(0) == hidden && w.recurrent.dim(1) == gates, "lstm recurrent weights must be [H x 4H]");
  require(w.bias.rank() == 1 && w.bias.dim(0) == gates, "lstm bias must have length 4H");
  require(lengths.size() == batch, "lstm needs one length per batch row");
  for (std::size_t len : lengths) require(len <= steps, "lstm true length exceeds sequence length");

  if (cache) {
    cache->batch = batch;
    cache->steps = steps;
    cache->input_size = in;
    cache->hidden = hidden;
    cache->lengths.assign(lengths.begin(), lengths.end());
    cache->gates.assign(batch * steps * gates, 0.0);
    cache->cells.assign(batch * steps * hidden, 0.0);
    cache->hiddens.assign(batch * steps * hidden, 0.0);
  }

  Tensor output({batch, hidden});
  std::vector<double> z(gates), h(hidden), c(hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    std::fill(h.begin(), h.end(), 0.0);
    std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t t = 0; t < lengths[b]; ++t) {
      std::copy_n(w.bias.data(), gates, z.data());
      const double* x = inputs.data() + (b * steps + t) * in;
      for (std::size_t e = 0; e < in; ++e) {
        const double xe = x[e];
        const double* row = w.input.data() + e * gates;
        for (std::size_t k = 0; k < gates; ++k) z[k] += xe * row[k];
      }
      for (std::size_t j = 0; j < hidden; ++j) {
        const double hj = h[j];
        const double* row = w.recurrent.data() + j * gates;
        for (std::size_t k = 0; k < gates; ++k) z[k] += hj * row[k];
      }
      for (std::size_t j = 0; j < hidden; ++j) {
        const double ig = stable_sigmoid(z[j]);
        const double fg = stable_sigmoid(z[hidden + j]);
        const double gg = std::tanh(z[2 * hidden + j]);
        const double og = stable_sigmoid(z[3 * hidden + j]);
        c[j] = fg * c[j] + ig * gg;
        h[j] = og * std::tanh(c[j]);
        z[j] = ig;
        z[hidden + j] = fg;
        z[2 * hidden + j] = gg;
        z[3 * hidden + j] = og;
      }
      if (cache) {
        const std::size_t slot = b * steps + t;
        std::copy(z.begin(), z.end(), cache->gates.begin() + static_cast<std::ptrdiff_t>(slot * gates));
        std::copy(c.begin(), c.end(), cache->cells.begin() + static_cast<std::ptrdiff_t>(slot * hidden));
        std::copy(h.begin(), h.end(), cache->hiddens.begin() + static_cast<std::ptrdiff_t>(slot * hidden));
      }
    }
    std::copy(h.begin(), h.end(), output.data() + b * hidden);
  }
  return output;
}

void lstm_backward(const Tensor& inputs, const LstmWeights& w, const LstmCache& cache, const Tensor& grad_hidden,
                   Tensor* grad_inputs, LstmGrads grads) {
  const std::size_t batch = cache.batch, steps = cache.steps, in = cache.input_size, hidden = cache.hidden;
  const std::size_t gates = 4 * hidden;
  require(grad_hidden.rank() == 2 && grad_hidden.dim(0) == batch && grad_hidden.dim(1) == hidden,
          "lstm upstream gradient must be [B x H]");
  if (grad_inputs) *grad_inputs = Tensor({batch, steps, in});

  std::vector<double> dh(hidden), dc(hidden), dz(gates), dh_prev(hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(grad_hidden.data() + b * hidden, hidden, dh.begin());
    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t t = cache.lengths[b]; t-- > 0;) {
      const std::size_t slot = b * steps + t;
      const double* gate = cache.gates.data() + slot * gates;
      const double* c = cache.cells.data() + slot * hidden;
      const double* c_prev = t > 0 ? cache.cells.data() + (slot - 1) * hidden : nullptr;
      const double* h_prev = t > 0 ? cache.hiddens.data() + (slot - 1) * hidden : nullptr;
      for (std::size_t j = 0; j < hidden; ++j) {
        const double ig = gate[j], fg = gate[hidden + j], gg = gate[2 * hidden + j], og = gate[3 * hidden + j];
        const double tc = std::tanh(c[j]);
        const double d_o = dh[j] * tc;
        dc[j] += dh[j] * og * (1.0 - tc * tc);
        const double cp = c_prev ? c_prev[j] : 0.0;
        dz[j] = dc[j] * gg * ig * (1.0 - ig);
        dz[hidden + j] = dc[j] * cp * fg * (1.0 - fg);
        dz[2 * hidden + j] = dc[j] * ig * (1.0 - gg * gg);
        dz[3 * hidden + j] = d_o * og * (1.0 - og);
        dc[j] *= fg;
      }
      for (std::size_t k = 0; k < gates; ++k) grads.bias[k] += dz[k];

      const double* x = inputs.data() + slot * in;
      double* dx = grad_inputs ? grad_inputs->data() + slot * in : nullptr;
      for (std::size_t e = 0; e < in; ++e) {
        const double xe = x[e];
        const double* row = w.input.data() + e * gates;
        double* grow = grads.input.data() + e * gates;
        double acc = 0.0;
        for (std::size_t k = 0; k < gates; ++k) {
          grow[k] += xe * dz[k];
          acc += row[k] * dz[k];
        }
        if (dx) dx[e] = acc;
      }
      for (std::size_t j = 0; j < hidden; ++j) {
        const double hp = h_prev ? h_prev[j] : 0.0;
        const double* row = w.recurrent.data() + j * gates;
        double* grow = grads.recurrent.data() + j * gates;
        double acc = 0.0;
        for (std::size_t k = 0; k < gates; ++k) {
          grow[k] += hp * dz[k];
          acc += row[k] * dz[k];
        }
        dh_prev[j] = acc;
      }
      std::swap(dh, dh_prev);
    }
  }
}

// --- convolution ----------------------------------------------------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  require(stride >= 1, "conv2d stride must be at least 1");
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const std::size_t count = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  require(kernels.dim(1) == channels, "conv2d kernel channels do not match input channels");
  require(bias.rank() == 1 && bias.dim(0) == count, "conv2d bias must have one entry per kernel");
  if (kh > height || kw > width) {
    throw ShapeError("conv2d kernel " + kernels.shape_string() + " larger than input " + input.shape_string());
  }
  const std::size_t oh_n = (height - kh) / stride + 1, ow_n = (width - kw) / stride + 1;
  Tensor output({batch, count, oh_n, ow_n});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < count; ++k) {
      double* out = output.data() + (b * count + k) * oh_n * ow_n;
      std::fill_n(out, oh_n * ow_n, bias[k]);
      for (std::size_t c = 0; c < channels; ++c) {
        const double* plane = input.data() + (b * channels + c) * height * width;
        const double* kernel = kernels.data() + (k * channels + c) * kh * kw;
        for (std::size_t i = 0; i < kh; ++i) {
          for (std::size_t j = 0; j < kw; ++j) {
            const double wv = kernel[i * kw + j];
            for (std::size_t oh = 0; oh < oh_n; ++oh) {
              const double* src = plane + (oh * stride + i) * width + j;
              double* dst = out + oh * ow_n;
              if (stride == 1) {
                for (std::size_t ow = 0; ow < ow_n; ++ow) dst[ow] += wv * src[ow];
              } else {
                for (std::size_t ow = 0; ow < ow_n; ++ow) dst[ow] += wv * src[ow * stride];
              }
            }
          }
        }
      }
    }
  }
  return output;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_output, std::size_t stride,
                     Tensor* grad_input, Tensor& grad_kernels, Tensor& grad_bias) {
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const std::size_t count = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const std::size_t oh_n = (height - kh) / stride + 1, ow_n = (width - kw) / stride + 1;
  require(grad_output.rank() == 4 && grad_output.dim(2) == oh_n && grad_output.dim(3) == ow_n,
          "conv2d upstream gradient shape mismatch");
  if (grad_input) *grad_input = Tensor(input.shape());
  // Upstream gradients behind relu and max pooling are mostly exact zeros,
  // so the loops run over output positions and skip those.
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < count; ++k) {
      const double* gout = grad_output.data() + (b * count + k) * oh_n * ow_n;
      double sum = 0.0;
      for (std::size_t p = 0; p < oh_n * ow_n; ++p) sum += gout[p];
      grad_bias[k] += sum;
      for (std::size_t c = 0; c < channels; ++c) {
        const double* plane = input.data() + (b * channels + c) * height * width;
        double* gplane = grad_input ? grad_input->data() + (b * channels + c) * height * width : nullptr;
        const double* kernel = kernels.data() + (k * channels + c) * kh * kw;
        double* gkernel = grad_kernels.data() + (k * channels + c) * kh * kw;
        for (std::size_t oh = 0; oh < oh_n; ++oh) {
          for (std::size_t ow = 0; ow < ow_n; ++ow) {
            const double g = gout[oh * ow_n + ow];
            if (g == 0.0) continue;
            const std::size_t origin = oh * stride * width + ow * stride;
            for (std::size_t i = 0; i < kh; ++i) {
              const double* src = plane + origin + i * width;
              double* gk = gkernel + i * kw;
              for (std::size_t j = 0; j < kw; ++j) gk[j] += g * src[j];
              if (gplane) {
                const double* w = kernel + i * kw;
                double* dst = gplane + origin + i * width;
                for (std::size_t j = 0; j < kw; ++j) dst[j] += w[j] * g;
              }
            }
          }
        }
      }
    }
  }
}

Tensor max_pool2d_forward(const Tensor& input, std::size_t window, PoolCache* cache) {
  require_rank(input, 4, "max_pool2d input");
  require(window >= 1, "pool window must be at least 1");
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  require(height >= window && width >= window, "pool window larger than input");
  const std::size_t oh_n = height / window, ow_n = width / window;
  Tensor output({batch, channels, oh_n, ow_n});
  if (cache) {
    cache->input_shape = input.shape();
    cache->argmax.assign(output.size(), 0);
  }
  for (std::size_t plane = 0; plane < batch * channels; ++plane) {
    const double* src = input.data() + plane * height * width;
    for (std::size_t oh = 0; oh < oh_n; ++oh) {
      for (std::size_t ow = 0; ow < ow_n; ++ow) {
        std::size_t best = (oh * window) * width + ow * window;
        for (std::size_t i = 0; i < window; ++i) {
          for (std::size_t j = 0; j < window; ++j) {
            const std::size_t idx = (oh * window + i) * width + ow * window + j;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t out_idx = (plane * oh_n + oh) * ow_n + ow;
        output[out_idx] = src[best];
        if (cache) cache->argmax[out_idx] = plane * height * width + best;
      }
    }
  }
  return output;
}

Tensor max_pool2d_backward(const Tensor& grad_output, const PoolCache& cache) {
  Tensor grad_input(cache.input_shape);
  for (std::size_t i = 0; i < grad_output.size(); ++i) grad_input[cache.argmax[i]] += grad_output[i];
  return grad_input;
}

Tensor relu_forward(const Tensor& input) {
  Tensor output = input;
  for (double& v : output.values()) v = v > 0.0 ? v : 0.0;
  return output;
}

Tensor relu_backward(const Tensor& output, const Tensor& grad_output) {
  Tensor grad = grad_output;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(output[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

// --- classification loss --------------------------------------------------------

double sigmoid(double x) { return stable_sigmoid(x); }

double binary_cross_entropy(std::span<const double> probs, std::span<const double> labels) {
  require(probs.size() == labels.size() && !probs.empty(), "binary_cross_entropy needs matching nonempty inputs");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    const double y = labels[i];
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

std::vector<double> binary_cross_entropy_logit_grad(std::span<const double> probs, std::span<const double> labels) {
  require(probs.size() == labels.size() && !probs.empty(), "binary_cross_entropy needs matching nonempty inputs");
  std::vector<double> grad(probs.size());
  const double scale = 1.0 / static_cast<double>(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) grad[i] = (probs[i] - labels[i]) * scale;
  return grad;
}

// --- optimizer ------------------------------------------------------------------

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
               std::span<double> second_moment, const AdamConfig& config, std::uint64_t t) {
  if (t < 1) throw std::invalid_argument("adam step count must start at 1");
  require(grads.size() == params.size() && first_moment.size() == params.size() &&
              second_moment.size() == params.size(),
          "adam buffers must match parameter size");
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void adam_step(Parameter& param, const Tensor& grad, const AdamConfig& config, std::uint64_t t) {
  adam_step(param.value.values(), grad.values(), param.first_moment.values(), param.second_moment.values(), config,
            t);
}

}  // namespace baitradar::nn
