#include "baitradar/encoders.hpp"

#include <cmath>
#include <stdexcept>

#include "baitradar/error.hpp"

namespace baitradar {

using nlohmann::json;

std::size_t EncoderConfig::thumbnail_flat_size() const {
  const std::size_t c1 = (thumbnail_size - kernel_size) / conv_stride + 1;
  const std::size_t p1 = c1 / pool_window;
  const std::size_t c2 = (p1 - kernel_size) / conv_stride + 1;
  const std::size_t p2 = c2 / pool_window;
  return conv2_kernels * p2 * p2;
}

void EncoderConfig::validate() const {
  if (fusion_dim == 0 || embedding_dim == 0 || stats_hidden == 0 || head_hidden == 0) {
    throw std::invalid_argument("encoder widths must be positive");
  }
  if (conv1_kernels == 0 || conv2_kernels == 0 || kernel_size == 0 || conv_stride == 0 || pool_window == 0) {
    throw std::invalid_argument("thumbnail conv settings must be positive");
  }
  if (thumbnail_size < kernel_size) throw std::invalid_argument("thumbnail_size smaller than kernel");
  const std::size_t c1 = (thumbnail_size - kernel_size) / conv_stride + 1;
  const std::size_t p1 = c1 / pool_window;
  if (p1 < kernel_size) throw std::invalid_argument("thumbnail_size too small for two conv stages");
  const std::size_t c2 = (p1 - kernel_size) / conv_stride + 1;
  if (c2 < pool_window) throw std::invalid_argument("thumbnail_size too small for second pooling stage");
  if (text.title == 0 || text.tags == 0 || text.comments == 0 || text.transcript == 0) {
    throw std::invalid_argument("text max lengths must be positive");
  }
}

json EncoderConfig::to_json() const {
  return json{{"fusion_dim", fusion_dim},
              {"embedding_dim", embedding_dim},
              {"thumbnail_size", thumbnail_size},
              {"conv1_kernels", conv1_kernels},
              {"conv2_kernels", conv2_kernels},
              {"kernel_size", kernel_size},
              {"conv_stride", conv_stride},
              {"pool_window", pool_window},
              {"stats_hidden", stats_hidden},
              {"head_hidden", head_hidden},
              {"max_len_title", text.title},
              {"max_len_tags", text.tags},
              {"max_len_comments", text.comments},
              {"max_len_transcript", text.transcript},
              {"max_comments", text.max_comments}};
}

EncoderConfig EncoderConfig::from_json(const json& j) {
  EncoderConfig c;
  auto read = [&](const char* key, std::size_t& field) {
    if (j.contains(key)) field = j.at(key).get<std::size_t>();
  };
  read("fusion_dim", c.fusion_dim);
  read("embedding_dim", c.embedding_dim);
  read("thumbnail_size", c.thumbnail_size);
  read("conv1_kernels", c.conv1_kernels);
  read("conv2_kernels", c.conv2_kernels);
  read("kernel_size", c.kernel_size);
  read("conv_stride", c.conv_stride);
  read("pool_window", c.pool_window);
  read("stats_hidden", c.stats_hidden);
  read("head_hidden", c.head_hidden);
  read("max_len_title", c.text.title);
  read("max_len_tags", c.text.tags);
  read("max_len_comments", c.text.comments);
  read("max_len_transcript", c.text.transcript);
  read("max_comments", c.text.max_comments);
  c.validate();
  return c;
}

// --- statistics normalization ---------------------------------------------------

StatsNormalizer::StatsNormalizer(std::array<double, StatsFeatures::kFeatureCount> mean,
                                 std::array<double, StatsFeatures::kFeatureCount> stddev)
    : fitted_(true), mean_(mean), stddev_(stddev) {
  for (double s : stddev_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("normalizer stddev must be positive");
  }
}

StatsNormalizer StatsNormalizer::fit(const std::vector<VideoRecord>& records) {
  constexpr std::size_t n_features = StatsFeatures::kFeatureCount;
  std::array<double, n_features> sum{}, sum_sq{};
  std::size_t n = 0;
  for (const VideoRecord& r : records) {
    if (!r.stats) continue;
    const auto raw = r.stats->as_array();
    for (std::size_t k = 0; k < n_features; ++k) {
      const double v = std::log1p(raw[k]);
      sum[k] += v;
      sum_sq[k] += v * v;
    }
    ++n;
  }
  std::array<double, n_features> mean{}, stddev{};
  for (std::size_t k = 0; k < n_features; ++k) {
    mean[k] = n ? sum[k] / static_cast<double>(n) : 0.0;
    const double var = n ? sum_sq[k] / static_cast<double>(n) - mean[k] * mean[k] : 0.0;
    stddev[k] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return StatsNormalizer(mean, stddev);
}

std::array<double, StatsFeatures::kFeatureCount> StatsNormalizer::apply(const StatsFeatures& stats) const {
  if (!fitted_) throw std::logic_error("statistics normalizer used before fitting");
  auto values = stats.as_array();
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = (std::log1p(values[k]) - mean_[k]) / stddev_[k];
  return values;
}

std::string param_name(Modality m, std::string_view layer, std::string_view tensor) {
  std::string name(modality_name(m));
  name += '.';
  name += layer;
  name += '.';
  name += tensor;
  return name;
}

std::vector<std::string> encoder_param_names(Modality m) {
  switch (m) {
    case Modality::thumbnail:
      return {param_name(m, "conv1", "kernels"), param_name(m, "conv1", "bias"),
              param_name(m, "conv2", "kernels"), param_name(m, "conv2", "bias"),
              param_name(m, "dense", "weight"),  param_name(m, "dense", "bias")};
    case Modality::statistics:
      return {param_name(m, "dense1", "weight"), param_name(m, "dense1", "bias"),
              param_name(m, "dense2", "weight"), param_name(m, "dense2", "bias")};
    default:
      return {param_name(m, "embedding", "table"), param_name(m, "lstm", "w_input"),
              param_name(m, "lstm", "w_recurrent"), param_name(m, "lstm", "bias")};
  }
}

// --- text ------------------------------------------------------------------------

void TextEncoder::init_params(Modality m, const EncoderConfig& config, std::size_t vocab_size,
                              ParameterSet& params, Rng& rng) {
  const std::size_t e = config.embedding_dim, h = config.fusion_dim;
  Tensor table({vocab_size, e});
  glorot_uniform(table, vocab_size, e, rng);
  Tensor w_input({e, 4 * h});
  glorot_uniform(w_input, e, 4 * h, rng);
  Tensor w_recurrent({h, 4 * h});
  glorot_uniform(w_recurrent, h, 4 * h, rng);
  Tensor bias({4 * h});
  for (std::size_t j = h; j < 2 * h; ++j) bias[j] = 1.0;  // forget gate
  params.add(param_name(m, "embedding", "table"), std::move(table));
  params.add(param_name(m, "lstm", "w_input"), std::move(w_input));
  params.add(param_name(m, "lstm", "w_recurrent"), std::move(w_recurrent));
  params.add(param_name(m, "lstm", "bias"), std::move(bias));
}

TextEncoder::TextEncoder(Modality m, const ParameterSet& params)
    : modality_(m),
      table_(params.index_of(param_name(m, "embedding", "table"))),
      w_input_(params.index_of(param_name(m, "lstm", "w_input"))),
      w_recurrent_(params.index_of(param_name(m, "lstm", "w_recurrent"))),
      bias_(params.index_of(param_name(m, "lstm", "bias"))) {}

Tensor TextEncoder::forward(const TokenSequence& ids, const ParameterSet& params, Cache* cache) const {
  const std::span<const TokenSequence> batch(&ids, 1);
  Tensor embedded = nn::embedding_forward(batch, params[table_].value);
  const std::array<std::size_t, 1> lengths = {ids.true_length};
  const nn::LstmWeights weights{params[w_input_].value, params[w_recurrent_].value, params[bias_].value};
  Tensor out = nn::lstm_forward(embedded, weights, lengths, cache ? &cache->lstm : nullptr);
  if (cache) {
    cache->ids = ids;
    cache->embedded = std::move(embedded);
  }
  return out;
}

void TextEncoder::backward(const Cache& cache, const Tensor& grad_output, const ParameterSet& params,
                           Gradients& grads) const {
  const nn::LstmWeights weights{params[w_input_].value, params[w_recurrent_].value, params[bias_].value};
  Tensor grad_embedded;
  nn::lstm_backward(cache.embedded, weights, cache.lstm, grad_output, &grad_embedded,
                    {grads[w_input_], grads[w_recurrent_], grads[bias_]});
  nn::embedding_backward(std::span<const TokenSequence>(&cache.ids, 1), grad_embedded, grads[table_]);
}

// --- thumbnail -------------------------------------------------------------------

Tensor thumbnail_to_tensor(const ThumbnailImage& image, std::size_t size) {
  if (image.channels != 3 || image.width == 0 || image.height == 0 ||
      image.data.size() != image.width * image.height * 3) {
    throw DataError("thumbnail must be a nonempty RGB image");
  }
  Tensor out({1, 3, size, size});
  for (std::size_t r = 0; r < size; ++r) {
    const std::size_t src_r = r * image.height / size;
    for (std::size_t c = 0; c < size; ++c) {
      const std::size_t src_c = c * image.width / size;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        out[(ch * size + r) * size + c] = static_cast<double>(image.at(src_r, src_c, ch)) / 255.0;
      }
    }
  }
  return out;
}

void ThumbnailEncoder::init_params(const EncoderConfig& config, ParameterSet& params, Rng& rng) {
  const std::size_t k = config.kernel_size;
  const Modality m = Modality::thumbnail;
  Tensor conv1({config.conv1_kernels, 3, k, k});
  glorot_uniform(conv1, 3 * k * k, config.conv1_kernels * k * k, rng);
  Tensor conv2({config.conv2_kernels, config.conv1_kernels, k, k});
  glorot_uniform(conv2, config.conv1_kernels * k * k, config.conv2_kernels * k * k, rng);
  const std::size_t flat = config.thumbnail_flat_size();
  Tensor dense({flat, config.fusion_dim});
  glorot_uniform(dense, flat, config.fusion_dim, rng);
  params.add(param_name(m, "conv1", "kernels"), std::move(conv1));
  params.add(param_name(m, "conv1", "bias"), Tensor({config.conv1_kernels}));
  params.add(param_name(m, "conv2", "kernels"), std::move(conv2));
  params.add(param_name(m, "conv2", "bias"), Tensor({config.conv2_kernels}));
  params.add(param_name(m, "dense", "weight"), std::move(dense));
  params.add(param_name(m, "dense", "bias"), Tensor({config.fusion_dim}));
}

ThumbnailEncoder::ThumbnailEncoder(const EncoderConfig& config, const ParameterSet& params)
    : stride_(config.conv_stride),
      pool_(config.pool_window),
      conv1_k_(params.index_of("thumbnail.conv1.kernels")),
      conv1_b_(params.index_of("thumbnail.conv1.bias")),
      conv2_k_(params.index_of("thumbnail.conv2.kernels")),
      conv2_b_(params.index_of("thumbnail.conv2.bias")),
      dense_w_(params.index_of("thumbnail.dense.weight")),
      dense_b_(params.index_of("thumbnail.dense.bias")) {}

Tensor ThumbnailEncoder::forward(const Tensor& image, const ParameterSet& params, Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  c.input = image;
  c.conv1_out = nn::relu_forward(nn::conv2d_forward(image, params[conv1_k_].value, params[conv1_b_].value, stride_));
  c.pool1_out = nn::max_pool2d_forward(c.conv1_out, pool_, &c.pool1);
  c.conv2_out =
      nn::relu_forward(nn::conv2d_forward(c.pool1_out, params[conv2_k_].value, params[conv2_b_].value, stride_));
  Tensor pooled = nn::max_pool2d_forward(c.conv2_out, pool_, &c.pool2);
  c.flat = Tensor({1, pooled.size()}, std::vector<double>(pooled.values().begin(), pooled.values().end()));
  return nn::dense_forward(c.flat, params[dense_w_].value, params[dense_b_].value);
}

void ThumbnailEncoder::backward(const Cache& c, const Tensor& grad_output, const ParameterSet& params,
                                Gradients& grads) const {
  Tensor grad_flat;
  nn::dense_backward(c.flat, params[dense_w_].value, grad_output, &grad_flat, grads[dense_w_], grads[dense_b_]);
  Tensor grad_pooled(std::vector<std::size_t>{1, c.conv2_out.dim(1), c.conv2_out.dim(2) / pool_,
                                              c.conv2_out.dim(3) / pool_},
                     std::vector<double>(grad_flat.values().begin(), grad_flat.values().end()));
  Tensor grad_conv2 = nn::relu_backward(c.conv2_out, nn::max_pool2d_backward(grad_pooled, c.pool2));
  Tensor grad_pool1;
  nn::conv2d_backward(c.pool1_out, params[conv2_k_].value, grad_conv2, stride_, &grad_pool1, grads[conv2_k_],
                      grads[conv2_b_]);
  Tensor grad_conv1 = nn::relu_backward(c.conv1_out, nn::max_pool2d_backward(grad_pool1, c.pool1));
  nn::conv2d_backward(c.input, params[conv1_k_].value, grad_conv1, stride_, nullptr, grads[conv1_k_],
                      grads[conv1_b_]);
}

// --- statistics ------------------------------------------------------------------

Tensor stats_to_tensor(const StatsFeatures& stats, const StatsNormalizer& normalizer) {
  const auto values = normalizer.apply(stats);
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

void StatsEncoder::init_params(const EncoderConfig& config, ParameterSet& params, Rng& rng) {
  const std::size_t in = StatsFeatures::kFeatureCount;
  const Modality m = Modality::statistics;
  Tensor w1({in, config.stats_hidden});
  glorot_uniform(w1, in, config.stats_hidden, rng);
  Tensor w2({config.stats_hidden, config.fusion_dim});
  glorot_uniform(w2, config.stats_hidden, config.fusion_dim, rng);
  params.add(param_name(m, "dense1", "weight"), std::move(w1));
  params.add(param_name(m, "dense1", "bias"), Tensor({config.stats_hidden}));
  params.add(param_name(m, "dense2", "weight"), std::move(w2));
  params.add(param_name(m, "dense2", "bias"), Tensor({config.fusion_dim}));
}

StatsEncoder::StatsEncoder(const ParameterSet& params)
    : w1_(params.index_of("statistics.dense1.weight")),
      b1_(params.index_of("statistics.dense1.bias")),
      w2_(params.index_of("statistics.dense2.weight")),
      b2_(params.index_of("statistics.dense2.bias")) {}

Tensor StatsEncoder::forward(const Tensor& features, const ParameterSet& params, Cache* cache) const {
  Tensor hidden = nn::relu_forward(nn::dense_forward(features, params[w1_].value, params[b1_].value));
  Tensor out = nn::dense_forward(hidden, params[w2_].value, params[b2_].value);
  if (cache) {
    cache->input = features;
    cache->hidden = std::move(hidden);
  }
  return out;
}

void StatsEncoder::backward(const Cache& cache, const Tensor& grad_output, const ParameterSet& params,
                            Gradients& grads) const {
  Tensor grad_hidden;
  nn::dense_backward(cache.hidden, params[w2_].value, grad_output, &grad_hidden, grads[w2_], grads[b2_]);
  const Tensor grad_pre = nn::relu_backward(cache.hidden, grad_hidden);
  nn::dense_backward(cache.input, params[w1_].value, grad_pre, nullptr, grads[w1_], grads[b1_]);
}

}  // namespace baitradar
