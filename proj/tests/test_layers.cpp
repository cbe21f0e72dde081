#include <doctest.h>

#include <cmath>
#include <memory>

#include "baitradar/diagnostics.hpp"
#include "baitradar/error.hpp"
#include "baitradar/gradcheck.hpp"
#include "baitradar/layers.hpp"
#include "baitradar/rng.hpp"

using namespace baitradar;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

double sum_weighted(const Tensor& t, const Tensor& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * c[i];
  return s;
}

// Naive reference convolution written independently of the library loops.
Tensor naive_conv(const Tensor& x, const Tensor& k, const Tensor& bias, std::size_t stride) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t OH = (H - kh) / stride + 1, OW = (W - kw) / stride + 1;
  Tensor out({B, K, OH, OW});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < K; ++o)
      for (std::size_t r = 0; r < OH; ++r)
        for (std::size_t q = 0; q < OW; ++q) {
          double acc = bias[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j)
                acc += x[((b * C + c) * H + r * stride + i) * W + q * stride + j] * k[((o * C + c) * kh + i) * kw + j];
          out[((b * K + o) * OH + r) * OW + q] = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("dense forward") {
  SUBCASE("zero weights give zero output") {
    const Tensor out = nn::dense_forward(Tensor({2, 3}, 1.5), Tensor({3, 4}), Tensor({4}));
    for (double v : out.values()) CHECK(v == 0.0);
  }
  SUBCASE("identity weights reproduce the input") {
    Tensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
    Rng rng(1);
    const Tensor x = random_tensor({2, 3}, rng);
    CHECK(nn::dense_forward(x, eye, Tensor({3})) == x);
  }
  SUBCASE("matches a brute-force matrix product") {
    Rng rng(2);
    const Tensor x = random_tensor({2, 3}, rng), w = random_tensor({3, 2}, rng), b = random_tensor({2}, rng);
    const Tensor out = nn::dense_forward(x, w, b);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) {
        double expect = b[c];
        for (std::size_t k = 0; k < 3; ++k) expect += x[r * 3 + k] * w[k * 2 + c];
        CHECK(std::abs(out[r * 2 + c] - expect) <= 1e-12);
      }
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(nn::dense_forward(Tensor({2, 3}), Tensor({4, 2}), Tensor({2})), ShapeError);
    CHECK_THROWS_AS(nn::dense_forward(Tensor({2, 3}), Tensor({3, 2}), Tensor({3})), ShapeError);
  }
}

TEST_CASE("embedding lookup") {
  const Tensor table({3, 2}, std::vector<double>{0.1, 0.2, 1.1, 1.2, 2.1, 2.2});
  SUBCASE("rows come back in id order") {
    const std::vector<TokenSequence> ids = {TokenSequence{{2, 1}, 2}};
    const Tensor out = nn::embedding_forward(ids, table);
    CHECK(out.shape() == std::vector<std::size_t>{1, 2, 2});
    CHECK(out.values()[0] == 2.1);
    CHECK(out.values()[1] == 2.2);
    CHECK(out.values()[2] == 1.1);
    CHECK(out.values()[3] == 1.2);
  }
  SUBCASE("padding id selects row 0 everywhere") {
    const std::vector<TokenSequence> ids = {TokenSequence{{0, 0, 0}, 0}};
    const Tensor out = nn::embedding_forward(ids, table);
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(out[t * 2] == 0.1);
      CHECK(out[t * 2 + 1] == 0.2);
    }
  }
  SUBCASE("gradient of the output sum counts occurrences") {
    const std::vector<TokenSequence> ids = {TokenSequence{{2, 1, 2}, 3}, TokenSequence{{0, 2, 2}, 3}};
    Tensor grad(table.shape());
    nn::embedding_backward(ids, Tensor({2, 3, 2}, 1.0), grad);
    const double counts[3] = {1, 1, 4};
    Tensor probe = table;
    auto total = [&] {
      const Tensor out = nn::embedding_forward(ids, probe);
      double s = 0.0;
      for (double v : out.values()) s += v;
      return s;
    };
    for (std::size_t r = 0; r < 3; ++r) {
      const double saved = probe[r * 2];
      probe[r * 2] = saved + 1e-5;
      const double plus = total();
      probe[r * 2] = saved - 1e-5;
      const double minus = total();
      probe[r * 2] = saved;
      CHECK(grad[r * 2] == counts[r]);
      CHECK(std::abs((plus - minus) / 2e-5 - counts[r]) < 1e-6);
    }
  }
  SUBCASE("out-of-range id throws") {
    const std::vector<TokenSequence> ids = {TokenSequence{{3}, 1}};
    CHECK_THROWS_AS(nn::embedding_forward(ids, table), ShapeError);
  }
}

TEST_CASE("lstm forward") {
  SUBCASE("zero weights keep the hidden state at zero") {
    const Tensor wi({3, 8}), wr({2, 8}), b({8});
    Rng rng(3);
    const std::array<std::size_t, 2> lengths = {4, 2};
    const Tensor h = nn::lstm_forward(random_tensor({2, 4, 3}, rng), {wi, wr, b}, lengths, nullptr);
    for (double v : h.values()) CHECK(v == 0.0);
  }
  SUBCASE("scalar recurrence matches a hand computation") {
    const Tensor wi({1, 4}, std::vector<double>{0.5, -0.3, 0.8, 0.2});
    const Tensor wr({1, 4}, std::vector<double>{0.1, 0.4, -0.6, 0.3});
    const Tensor b({4}, std::vector<double>{0.0, 1.0, 0.1, -0.1});
    const Tensor x({1, 2, 1}, std::vector<double>{1.0, -2.0});
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double h = 0.0, c = 0.0;
    for (double xt : {1.0, -2.0}) {
      const double i = sig(0.5 * xt + 0.1 * h + 0.0), f = sig(-0.3 * xt + 0.4 * h + 1.0);
      const double g = std::tanh(0.8 * xt - 0.6 * h + 0.1), o = sig(0.2 * xt + 0.3 * h - 0.1);
      c = f * c + i * g;
      h = o * std::tanh(c);
    }
    const std::array<std::size_t, 1> two = {2}, one = {1};
    const double out = nn::lstm_forward(x, {wi, wr, b}, two, nullptr)[0];
    CHECK(std::abs(out - h) <= 1e-12);
    CHECK(std::abs(out - 0.04816898561006717) <= 1e-12);
    CHECK(std::abs(nn::lstm_forward(x, {wi, wr, b}, one, nullptr)[0] - 0.21970125761064394) <= 1e-12);
  }
  SUBCASE("padding content beyond the true length is ignored") {
    Rng rng(4);
    const Tensor wi = random_tensor({3, 8}, rng), wr = random_tensor({2, 8}, rng), b = random_tensor({8}, rng);
    Tensor x = random_tensor({1, 5, 3}, rng);
    const std::array<std::size_t, 1> len = {3};
    const Tensor before = nn::lstm_forward(x, {wi, wr, b}, len, nullptr);
    for (std::size_t i = 9; i < 15; ++i) x[i] = 100.0 + static_cast<double>(i);
    CHECK(nn::lstm_forward(x, {wi, wr, b}, len, nullptr) == before);
  }
  SUBCASE("length beyond the sequence throws") {
    const std::array<std::size_t, 1> len = {6};
    CHECK_THROWS_AS(nn::lstm_forward(Tensor({1, 5, 3}), {Tensor({3, 8}), Tensor({2, 8}), Tensor({8})}, len, nullptr),
                    ShapeError);
  }
}

TEST_CASE("lstm gradient matches central differences for every gate weight") {
  Rng rng(8);
  auto params = std::make_shared<ParameterSet>();
  const std::size_t wi = params->add("wi", random_tensor({2, 12}, rng));
  const std::size_t wr = params->add("wr", random_tensor({3, 12}, rng));
  const std::size_t b = params->add("b", random_tensor({12}, rng));
  const Tensor x = random_tensor({2, 5, 2}, rng), c = random_tensor({2, 3}, rng);
  static constexpr std::array<std::size_t, 2> lengths = {5, 3};
  GradFragment f;
  f.params = params.get();
  f.loss = [&] {
    const ParameterSet& p = *params;
    return sum_weighted(nn::lstm_forward(x, {p[wi].value, p[wr].value, p[b].value}, lengths, nullptr), c);
  };
  f.gradient = [&](Gradients& g) {
    const ParameterSet& p = *params;
    nn::LstmCache cache;
    nn::lstm_forward(x, {p[wi].value, p[wr].value, p[b].value}, lengths, &cache);
    nn::lstm_backward(x, {p[wi].value, p[wr].value, p[b].value}, cache, c, nullptr, {g[wi], g[wr], g[b]});
  };
  CHECK(grad_check(f).max_rel_error() <= 1e-4);
}

TEST_CASE("conv2d forward") {
  SUBCASE("1x1 unit kernel is the identity") {
    Rng rng(5);
    const Tensor x = random_tensor({1, 1, 4, 5}, rng);
    CHECK(nn::conv2d_forward(x, Tensor({1, 1, 1, 1}, 1.0), Tensor({1}), 1) == x);
  }
  SUBCASE("3x3 ones on 4x4 ones gives 9s") {
    const Tensor out = nn::conv2d_forward(Tensor({1, 1, 4, 4}, 1.0), Tensor({1, 1, 3, 3}, 1.0), Tensor({1}), 1);
    CHECK(out.shape() == std::vector<std::size_t>{1, 1, 2, 2});
    for (double v : out.values()) CHECK(v == 9.0);
  }
  SUBCASE("matches a naive quadruple loop") {
    Rng rng(6);
    for (std::size_t stride : {1u, 2u, 3u}) {
      const Tensor x = random_tensor({2, 3, 9, 8}, rng), k = random_tensor({4, 3, 3, 2}, rng),
                   b = random_tensor({4}, rng);
      const Tensor out = nn::conv2d_forward(x, k, b, stride), ref = naive_conv(x, k, b, stride);
      REQUIRE(out.shape() == ref.shape());
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-12);
    }
  }
  SUBCASE("kernel larger than input throws") {
    CHECK_THROWS_AS(nn::conv2d_forward(Tensor({1, 1, 2, 2}), Tensor({1, 1, 3, 3}), Tensor({1}), 1), ShapeError);
  }
}

TEST_CASE("pooling and relu") {
  const Tensor x({1, 1, 2, 4}, std::vector<double>{1, 5, -1, 0, 3, 2, -2, -3});
  nn::PoolCache cache;
  const Tensor pooled = nn::max_pool2d_forward(x, 2, &cache);
  CHECK(pooled.values()[0] == 5.0);
  CHECK(pooled.values()[1] == 0.0);
  const Tensor back = nn::max_pool2d_backward(Tensor({1, 1, 1, 2}, std::vector<double>{7, 8}), cache);
  CHECK(back.values()[1] == 7.0);
  CHECK(back.values()[3] == 8.0);
  CHECK(back.values()[0] == 0.0);

  const Tensor r = nn::relu_forward(Tensor({3}, std::vector<double>{-1, 0, 2}));
  CHECK(r == Tensor({3}, std::vector<double>{0, 0, 2}));
  CHECK(nn::relu_backward(r, Tensor({3}, 1.0)) == Tensor({3}, std::vector<double>{0, 0, 1}));
}

TEST_CASE("sigmoid and binary cross-entropy") {
  CHECK(nn::sigmoid(0.0) == 0.5);
  CHECK(nn::sigmoid(800.0) == 1.0);
  CHECK(nn::sigmoid(-800.0) >= 0.0);
  const std::array<double, 1> half = {0.5}, one = {1.0}, zero = {0.0};
  CHECK(std::abs(nn::binary_cross_entropy(half, one) - std::log(2.0)) < 1e-15);
  CHECK(std::abs(nn::binary_cross_entropy(half, zero) - std::log(2.0)) < 1e-15);
  CHECK(std::isfinite(nn::binary_cross_entropy(zero, one)));
  CHECK(std::abs(nn::binary_cross_entropy(zero, one) + std::log(1e-12)) < 1e-9);

  for (double y : {0.0, 1.0}) {
    for (double z : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
      auto loss = [&](double logit) {
        const std::array<double, 1> p = {nn::sigmoid(logit)}, label = {y};
        return nn::binary_cross_entropy(p, label);
      };
      const std::array<double, 1> p = {nn::sigmoid(z)}, label = {y};
      const double analytic = nn::binary_cross_entropy_logit_grad(p, label)[0];
      const double numeric = (loss(z + 1e-5) - loss(z - 1e-5)) / 2e-5;
      CHECK(analytic == doctest::Approx(p[0] - y).epsilon(1e-15));
      CHECK(std::abs(analytic - numeric) < 1e-8);
    }
  }
  const std::array<double, 2> probs = {0.2, 0.9}, labels = {1.0, 0.0};
  const auto g = nn::binary_cross_entropy_logit_grad(probs, labels);
  CHECK(g[0] == doctest::Approx(-0.4));
  CHECK(g[1] == doctest::Approx(0.45));
}

TEST_CASE("adam update rule") {
  nn::AdamConfig cfg;
  SUBCASE("zero gradient leaves parameters unchanged") {
    std::vector<double> p = {0.3, -1.2}, g = {0, 0}, m = {0, 0}, v = {0, 0};
    for (std::uint64_t t = 1; t <= 5; ++t) nn::adam_step(p, g, m, v, cfg, t);
    CHECK(p == std::vector<double>{0.3, -1.2});
  }
  SUBCASE("first step with unit gradient moves by lr") {
    std::vector<double> p = {0.0}, g = {1.0}, m = {0.0}, v = {0.0};
    nn::adam_step(p, g, m, v, cfg, 1);
    CHECK(std::abs(p[0] + cfg.lr) <= 1e-9);
    CHECK(std::abs(m[0] - 0.1) < 1e-15);
    CHECK(std::abs(v[0] - 0.001) < 1e-15);
  }
  SUBCASE("constant gradient keeps the step near lr") {
    std::vector<double> p = {0.0}, g = {-0.37}, m = {0.0}, v = {0.0};
    for (std::uint64_t t = 1; t <= 200; ++t) {
      const double before = p[0];
      nn::adam_step(p, g, m, v, cfg, t);
      CHECK(std::abs((p[0] - before) - cfg.lr) < 1e-9);
    }
  }
  SUBCASE("zero learning rate is bit-exact") {
    cfg.lr = 0.0;
    std::vector<double> p = {0.123456789, 7.0}, g = {3.0, -2.0}, m = {0, 0}, v = {0, 0};
    nn::adam_step(p, g, m, v, cfg, 1);
    CHECK(p == std::vector<double>{0.123456789, 7.0});
  }
  SUBCASE("step count must start at one") {
    std::vector<double> p = {0.0}, g = {1.0}, m = {0.0}, v = {0.0};
    CHECK_THROWS(nn::adam_step(p, g, m, v, cfg, 0));
  }
}

TEST_CASE("grad_check detects correct and corrupted gradients") {
  Rng rng(12);
  auto params = std::make_shared<ParameterSet>();
  const std::size_t w = params->add("w", random_tensor({3, 2}, rng));
  const std::size_t b = params->add("b", random_tensor({2}, rng));
  const Tensor x = random_tensor({4, 3}, rng), c = random_tensor({4, 2}, rng);
  double corruption = 1.0;
  GradFragment f;
  f.params = params.get();
  f.loss = [&] { return sum_weighted(nn::dense_forward(x, (*params)[w].value, (*params)[b].value), c); };
  f.gradient = [&](Gradients& g) {
    nn::dense_backward(x, (*params)[w].value, c, nullptr, g[w], g[b]);
    for (double& v : g[w].values()) v *= corruption;
  };
  const GradCheckReport good = grad_check(f);
  CHECK(good.entries.size() == 2);
  CHECK(good.max_rel_error() <= 1e-4);
  CHECK(good.passed(kGradCheckTolerance));

  corruption = 2.0;
  const GradCheckReport bad = grad_check(f);
  CHECK(bad.max_rel_error() > 0.3);
  CHECK(std::abs(bad.max_rel_error() - 0.5) < 1e-6);
  CHECK_FALSE(bad.passed(kGradCheckTolerance));
}

TEST_CASE("grad_check edge cases") {
  ParameterSet none;
  GradFragment empty{&none, [] { return 1.0; }, [](Gradients&) {}};
  CHECK(grad_check(empty).entries.empty());
  CHECK(grad_check(GradFragment{}).entries.empty());

  ParameterSet one;
  one.add("x", Tensor({1}, 1.0));
  GradFragment nan{&one, [] { return std::nan(""); }, [](Gradients&) {}};
  CHECK_THROWS_AS(grad_check(nan), std::domain_error);
}

TEST_CASE("grad_check leaves parameter values untouched") {
  Rng rng(1);
  ParameterSet params;
  params.add("w", random_tensor({2, 2}, rng));
  const Tensor before = params[0].value;
  GradFragment f{&params, [&] { return params[0].value[0] * params[0].value[3]; },
                 [&](Gradients& g) {
                   g[0][0] += params[0].value[3];
                   g[0][3] += params[0].value[0];
                 }};
  CHECK(grad_check(f).max_rel_error() <= 1e-4);
  CHECK(params[0].value == before);
}

TEST_CASE("gradient check suite passes at the default seed") {
  const auto suite = run_grad_check_suite();
  CHECK(suite.size() == 13);
  for (const NamedGradCheck& check : suite) {
    INFO(check.name);
    CHECK(check.report.passed(kGradCheckTolerance));
    CHECK_FALSE(check.report.entries.empty());
  }
  GradCheckSuiteOptions corrupt;
  corrupt.corrupt_dense = true;
  CHECK_FALSE(run_grad_check_suite(corrupt).front().report.passed(kGradCheckTolerance));
}
