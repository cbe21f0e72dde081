#include "baitradar/diagnostics.hpp"

#include <array>
#include <memory>

#include "baitradar/fusion.hpp"
#include "baitradar/layers.hpp"
#include "baitradar/model.hpp"

namespace baitradar {

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

double weighted_sum(const Tensor& out, const Tensor& coeff) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * coeff[i];
  return s;
}

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Each probe owns its parameters and any fixed inputs; the fragment borrows them.
struct Probe {
  ParameterSet params;
  std::vector<TokenSequence> ids;
  Tensor coeff;
};

NamedGradCheck check(std::string name, const std::shared_ptr<Probe>& probe, std::function<double()> loss,
                     std::function<void(Gradients&)> gradient) {
  return {std::move(name), grad_check(GradFragment{&probe->params, std::move(loss), std::move(gradient)}),
          kGradCheckFloor};
}

NamedGradCheck dense_check(Rng& rng, bool corrupt) {
  auto probe = std::make_shared<Probe>();
  ParameterSet& p = probe->params;
  const std::size_t in = p.add("dense.input", random_tensor({2, 3}, rng));
  const std::size_t w = p.add("dense.weight", random_tensor({3, 2}, rng));
  const std::size_t b = p.add("dense.bias", random_tensor({2}, rng));
  probe->coeff = random_tensor({2, 2}, rng);
  return check(
      "dense", probe,
      [probe, in, w, b] {
        const ParameterSet& q = probe->params;
        return weighted_sum(nn::dense_forward(q[in].value, q[w].value, q[b].value), probe->coeff);
      },
      [probe, in, w, b, corrupt](Gradients& g) {
        const ParameterSet& q = probe->params;
        Tensor grad_in;
        nn::dense_backward(q[in].value, q[w].value, probe->coeff, &grad_in, g[w], g[b]);
        add_into(g[in], grad_in);
        if (corrupt) {
          for (double& v : g[w].values()) v *= 2.0;
        }
      });
}

NamedGradCheck embedding_check(Rng& rng) {
  auto probe = std::make_shared<Probe>();
  const std::size_t table = probe->params.add("embedding.table", random_tensor({5, 3}, rng));
  probe->ids = {TokenSequence{{2, 4, 2}, 3}, TokenSequence{{1, 0, 0}, 1}};
  probe->coeff = random_tensor({2, 3, 3}, rng);
  return check(
      "embedding", probe,
      [probe, table] {
        return weighted_sum(nn::embedding_forward(probe->ids, probe->params[table].value), probe->coeff);
      },
      [probe, table](Gradients& g) { nn::embedding_backward(probe->ids, probe->coeff, g[table]); });
}

NamedGradCheck lstm_check(Rng& rng) {
  auto probe = std::make_shared<Probe>();
  ParameterSet& p = probe->params;
  const std::size_t x = p.add("lstm.inputs", random_tensor({2, 4, 3}, rng));
  const std::size_t wi = p.add("lstm.w_input", random_tensor({3, 8}, rng, 0.8));
  const std::size_t wr = p.add("lstm.w_recurrent", random_tensor({2, 8}, rng, 0.8));
  const std::size_t b = p.add("lstm.bias", random_tensor({8}, rng, 0.5));
  probe->coeff = random_tensor({2, 2}, rng);
  static constexpr std::array<std::size_t, 2> lengths = {4, 2};
  return check(
      "lstm", probe,
      [probe, x, wi, wr, b] {
        const ParameterSet& q = probe->params;
        const nn::LstmWeights w{q[wi].value, q[wr].value, q[b].value};
        return weighted_sum(nn::lstm_forward(q[x].value, w, lengths, nullptr), probe->coeff);
      },
      [probe, x, wi, wr, b](Gradients& g) {
        const ParameterSet& q = probe->params;
        const nn::LstmWeights w{q[wi].value, q[wr].value, q[b].value};
        nn::LstmCache cache;
        nn::lstm_forward(q[x].value, w, lengths, &cache);
        Tensor grad_x;
        nn::lstm_backward(q[x].value, w, cache, probe->coeff, &grad_x, {g[wi], g[wr], g[b]});
        add_into(g[x], grad_x);
      });
}

NamedGradCheck conv_check(Rng& rng, std::size_t size, std::size_t stride) {
  auto probe = std::make_shared<Probe>();
  ParameterSet& p = probe->params;
  const std::size_t x = p.add("conv.input", random_tensor({1, 2, size, size}, rng));
  const std::size_t k = p.add("conv.kernels", random_tensor({3, 2, 3, 3}, rng));
  const std::size_t b = p.add("conv.bias", random_tensor({3}, rng, 0.1));
  const std::size_t conv_out = (size - 3) / stride + 1;
  probe->coeff = random_tensor({1, 3, conv_out / 2, conv_out / 2}, rng);
  return check(
      "conv2d+relu+pool/stride" + std::to_string(stride), probe,
      [probe, x, k, b, stride] {
        const ParameterSet& q = probe->params;
        const Tensor act = nn::relu_forward(nn::conv2d_forward(q[x].value, q[k].value, q[b].value, stride));
        return weighted_sum(nn::max_pool2d_forward(act, 2, nullptr), probe->coeff);
      },
      [probe, x, k, b, stride](Gradients& g) {
        const ParameterSet& q = probe->params;
        const Tensor act = nn::relu_forward(nn::conv2d_forward(q[x].value, q[k].value, q[b].value, stride));
        nn::PoolCache pool;
        nn::max_pool2d_forward(act, 2, &pool);
        const Tensor grad_act = nn::relu_backward(act, nn::max_pool2d_backward(probe->coeff, pool));
        Tensor grad_x;
        nn::conv2d_backward(q[x].value, q[k].value, grad_act, stride, &grad_x, g[k], g[b]);
        add_into(g[x], grad_x);
      });
}

EncoderConfig small_config() {
  EncoderConfig c;
  c.fusion_dim = 4;
  c.embedding_dim = 3;
  c.thumbnail_size = 16;
  c.conv1_kernels = 2;
  c.conv2_kernels = 3;
  c.kernel_size = 3;
  c.stats_hidden = 3;
  c.head_hidden = 3;
  c.text.title = 5;
  c.text.tags = 6;
  c.text.comments = 8;
  c.text.transcript = 8;
  return c;
}

NamedGradCheck fusion_head_check(Rng& rng) {
  auto probe = std::make_shared<Probe>();
  ParameterSet& p = probe->params;
  const EncoderConfig config = small_config();
  const std::array<Modality, 3> present = {Modality::title, Modality::thumbnail, Modality::tags};
  std::array<std::size_t, 3> slots{};
  for (std::size_t i = 0; i < present.size(); ++i) {
    slots[i] = p.add("fusion.x_" + std::string(modality_name(present[i])), random_tensor({4}, rng));
  }
  ClassifierHead::init_params(config, p, rng);
  for (Parameter& param : p) {
    if (ClassifierHead::is_head_param(param.name) && param.value.rank() == 1) {
      for (double& v : param.value.values()) v = rng.uniform(-0.3, 0.3);
    }
  }
  ModalityMask mask;
  for (Modality m : present) mask.set(m);

  auto forward = [probe, slots, present, mask](ClassifierHead::Cache* cache, std::size_t* n_present) {
    std::vector<EncoderOutput> outs;
    for (std::size_t i = 0; i < present.size(); ++i) outs.push_back({probe->params[slots[i]].value, present[i]});
    const FusedVector fused = fuse(outs, mask);
    if (n_present) *n_present = fused.n_present;
    return ClassifierHead(probe->params).forward(fused.vector, probe->params, cache);
  };
  return check(
      "fusion+head", probe,
      [forward] {
        const std::array<double, 1> prob{nn::sigmoid(forward(nullptr, nullptr))}, label{1.0};
        return nn::binary_cross_entropy(prob, label);
      },
      [probe, forward, slots](Gradients& g) {
        ClassifierHead::Cache cache;
        std::size_t n = 0;
        const double prob = nn::sigmoid(forward(&cache, &n));
        const Tensor grad_fused = ClassifierHead(probe->params).backward(cache, prob - 1.0, probe->params, g);
        const Tensor grad_each = fuse_backward(grad_fused, n);
        for (std::size_t s : slots) add_into(g[s], grad_each);
      });
}

VideoRecord probe_record() {
  VideoRecord r;
  r.id = "probe";
  r.channel_id = "c";
  r.title = "Mind BLOWN secret trick";
  r.tags = std::vector<std::string>{"secret", "trick", "viral", "mind"};
  r.comments = std::vector<std::string>{"so fake", "mind blown trick", "secret revealed"};
  r.transcript = "today the secret trick is simple mind work";
  r.stats = StatsFeatures{120000, 3000, 400, 250, 610};
  r.thumbnail_path = "probe.ppm";
  r.label = Label::clickbait;
  return r;
}

ThumbnailImage probe_image(Rng& rng) {
  ThumbnailImage image;
  image.width = 12;
  image.height = 10;
  image.data.resize(12 * 10 * 3);
  for (auto& v : image.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return image;
}

NamedGradCheck model_check(const std::string& name, const ModelSpec& spec, Rng& rng) {
  const VideoRecord record = probe_record();
  VideoRecord other = record;
  other.stats = StatsFeatures{900, 20, 1, 3, 120};
  VideoRecord third = record;
  third.stats = StatsFeatures{5000000, 90000, 20000, 8000, 900};
  const Vocabulary vocab = build_vocab(collect_texts({record}, spec.encoders.text), 100, 1);
  const StatsNormalizer normalizer = StatsNormalizer::fit({record, other, third});
  auto model = std::make_shared<BaitRadarModel>(BaitRadarModel::create(spec, vocab, normalizer, rng.next()));
  // Glorot-scale weights shrink the end-to-end gradients towards the
  // roundoff floor of central differences; redraw everything larger.
  for (Parameter& p : model->params()) {
    for (double& v : p.value.values()) v = rng.uniform(-0.8, 0.8);
  }
  const ThumbnailImage image = probe_image(rng);
  const PreparedRecord prepared = model->prepare(record, [&](const std::string&) { return image; });
  const ModalityMask mask = prepared.available;
  auto loss = [model, prepared, mask] {
    const std::array<double, 1> prob{model->forward(prepared, mask)}, label{1.0};
    return nn::binary_cross_entropy(prob, label);
  };
  auto gradient = [model, prepared, mask](Gradients& g) {
    ForwardPass pass;
    const double p = model->forward(prepared, mask, &pass);
    model->backward(pass, p - 1.0, g);
  };
  return {name, grad_check(GradFragment{&model->params(), loss, gradient}, kGradCheckStep, kGradCheckCompositeFloor),
          kGradCheckCompositeFloor};
}

}  // namespace

std::vector<NamedGradCheck> run_grad_check_suite(const GradCheckSuiteOptions& options) {
  Rng rng(options.seed);
  std::vector<NamedGradCheck> out;
  out.push_back(dense_check(rng, options.corrupt_dense));
  out.push_back(embedding_check(rng));
  out.push_back(lstm_check(rng));
  out.push_back(conv_check(rng, 7, 1));
  out.push_back(conv_check(rng, 9, 2));
  out.push_back(fusion_head_check(rng));
  for (Modality m : kAllModalities) {
    ModelSpec spec{small_config(), ModalityMask::only(m), HeadKind::individual};
    out.push_back(model_check("encoder/" + std::string(modality_name(m)), spec, rng));
  }
  out.push_back(model_check("model/all", ModelSpec{small_config(), ModalityMask::all(), HeadKind::shared}, rng));
  return out;
}

}  // namespace baitradar
