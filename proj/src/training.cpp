#include "baitradar/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace baitradar {

using nlohmann::json;

std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::individual: return "individual";
    case Regime::head_only: return "head_only";
    case Regime::finetune: return "finetune";
    case Regime::scratch: return "scratch";
  }
  return "unknown";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : {Regime::individual, Regime::head_only, Regime::finetune, Regime::scratch}) {
    if (regime_name(r) == name) return r;
  }
  throw std::invalid_argument("unknown regime '" + std::string(name) + "'");
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::loss_threshold: return "loss_threshold";
    case StopReason::patience: return "patience";
    case StopReason::max_epochs: return "max_epochs";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
  if (!(loss_threshold > 0.0)) throw std::invalid_argument("loss threshold must be positive");
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
  if (!(modality_keep_prob > 0.0 && modality_keep_prob <= 1.0)) {
    throw std::invalid_argument("modality_keep_prob must lie in (0, 1]");
  }
  if (subset.empty()) throw std::invalid_argument("training subset is empty");
  if (regime == Regime::individual && subset.count() != 1) {
    throw std::invalid_argument("individual regime trains exactly one modality");
  }
  if (!(adam.lr >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0)) {
    throw std::invalid_argument("invalid Adam settings");
  }
  encoders.validate();
}

json TrainConfig::to_json() const {
  return json{{"regime", regime_name(regime)},
              {"subset", subset.to_string()},
              {"batch_size", batch_size},
              {"max_epochs", max_epochs},
              {"lr", adam.lr},
              {"beta1", adam.beta1},
              {"beta2", adam.beta2},
              {"epsilon", adam.epsilon},
              {"loss_threshold", loss_threshold},
              {"patience", patience},
              {"seed", seed},
              {"modality_keep_prob", modality_keep_prob},
              {"vocab_max_size", vocab_max_size},
              {"vocab_min_freq", vocab_min_freq},
              {"encoders", encoders.to_json()}};
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const json& j, const TrainConfig& base) {
  TrainConfig c = base;
  if (j.contains("regime")) c.regime = parse_regime(j.at("regime").get<std::string>());
  if (j.contains("subset")) c.subset = ModalityMask::parse(j.at("subset").get<std::string>());
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
  if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<std::size_t>();
  if (j.contains("lr")) c.adam.lr = j.at("lr").get<double>();
  if (j.contains("beta1")) c.adam.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) c.adam.beta2 = j.at("beta2").get<double>();
  if (j.contains("epsilon")) c.adam.epsilon = j.at("epsilon").get<double>();
  if (j.contains("loss_threshold")) c.loss_threshold = j.at("loss_threshold").get<double>();
  if (j.contains("patience")) c.patience = j.at("patience").get<std::size_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("modality_keep_prob")) c.modality_keep_prob = j.at("modality_keep_prob").get<double>();
  if (j.contains("vocab_max_size")) c.vocab_max_size = j.at("vocab_max_size").get<std::size_t>();
  if (j.contains("vocab_min_freq")) c.vocab_min_freq = j.at("vocab_min_freq").get<std::size_t>();
  if (j.contains("encoders")) {
    json merged = c.encoders.to_json();
    merged.update(j.at("encoders"));
    c.encoders = EncoderConfig::from_json(merged);
  }
  c.validate();
  return c;
}

std::string TrainReport::to_jsonl() const {
  std::string out;
  for (const EpochStats& e : epochs) {
    out += json{{"epoch", e.epoch},
                {"train_loss", e.train_loss},
                {"train_accuracy", e.train_accuracy},
                {"validation_accuracy", e.validation_accuracy}}
               .dump();
    out += '\n';
  }
  out += json{{"stop_reason", stop_reason_name(stop_reason)},
              {"epochs_run", epochs_run},
              {"best_epoch", best_epoch},
              {"best_validation_accuracy", best_validation_accuracy},
              {"skipped_records", skipped_records}}
             .dump();
  out += '\n';
  return out;
}

namespace {

// Fixed shard count: gradients are reduced shard by shard in index order,
// so results do not depend on how many threads execute the shards.
constexpr std::size_t kGradientShards = 4;

double label_value(const PreparedRecord& r) {
  if (!r.label) throw DataError("training record '" + r.id + "' has no label");
  return *r.label == Label::clickbait ? 1.0 : 0.0;
}

BaitRadarModel initial_model(const std::vector<VideoRecord>& train_records, const TrainConfig& config,
                             const Checkpoint* init) {
  const bool needs_init = config.regime == Regime::head_only || config.regime == Regime::finetune;
  if (needs_init && !init) {
    throw std::invalid_argument(std::string(regime_name(config.regime)) + " regime needs an initial checkpoint");
  }
  if (!needs_init && init) {
    throw std::invalid_argument(std::string(regime_name(config.regime)) + " regime starts from random weights");
  }
  if (!needs_init) {
    ModelSpec spec{config.encoders, config.subset,
                   config.regime == Regime::individual ? HeadKind::individual : HeadKind::shared};
    Vocabulary vocab = build_vocab(collect_texts(train_records, config.encoders.text), config.vocab_max_size,
                                   config.vocab_min_freq);
    return BaitRadarModel::create(spec, std::move(vocab), StatsNormalizer::fit(train_records), config.seed);
  }

  const BaitRadarModel& base = init->model;
  if (!config.subset.subset_of(base.subset())) {
    ModalityMask missing;
    for (Modality m : config.subset.modalities()) {
      if (!base.subset().has(m)) missing.set(m);
    }
    throw MissingEncodersError(missing);
  }
  ModelSpec spec{base.spec().encoders, config.subset, HeadKind::shared};
  BaitRadarModel model = BaitRadarModel::create(spec, base.vocab(), base.normalizer(), config.seed);
  for (Parameter& p : model.params()) {
    if (auto idx = base.params().find(p.name)) p.value = base.params()[*idx].value;
  }
  return model;
}

struct Shard {
  Gradients grads;
  ForwardPass pass;
};

}  // namespace

TrainResult train(const std::vector<VideoRecord>& train_records, const std::vector<VideoRecord>& validation_records,
                  const TrainConfig& config, const ThumbnailResolver& resolver, const Checkpoint* init) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  if (train_records.empty()) throw DataError("training split is empty");

  BaitRadarModel model = initial_model(train_records, config, init);
  ParameterSet& params = model.params();
  const bool encoders_trainable = config.regime != Regime::head_only;
  std::vector<bool> trainable(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    trainable[i] = encoders_trainable || ClassifierHead::is_head_param(params[i].name);
  }

  TrainReport report;
  std::vector<PreparedRecord> train_set, validation_set;
  for (const VideoRecord& r : train_records) {
    PreparedRecord p = model.prepare(r, resolver);
    if (p.available.empty()) {
      ++report.skipped_records;
      continue;
    }
    label_value(p);
    train_set.push_back(std::move(p));
  }
  for (const VideoRecord& r : validation_records) {
    PreparedRecord p = model.prepare(r, resolver);
    if (p.available.empty()) continue;
    label_value(p);
    validation_set.push_back(std::move(p));
  }
  if (train_set.empty()) throw DataError("no training record has a modality in " + config.subset.to_string());

  std::vector<Shard> shards;
  for (std::size_t s = 0; s < kGradientShards; ++s) shards.push_back(Shard{Gradients(params), {}});
  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  const std::uint64_t dropout_seed = mix64(config.seed ^ 0x64726f70ULL);

  std::vector<Tensor> best_values;
  for (const Parameter& p : params) best_values.push_back(p.value);
  std::uint64_t step = 0;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_set.size());
  std::vector<double> record_loss, record_correct;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::derive(config.seed, 0x73687566ULL, epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0, correct_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t batch = std::min(config.batch_size, order.size() - start);
      record_loss.assign(batch, 0.0);
      record_correct.assign(batch, 0.0);

      auto run_shard = [&](std::size_t s) {
        Shard& shard = shards[s];
        shard.grads.zero();
        const std::size_t lo = s * batch / kGradientShards, hi = (s + 1) * batch / kGradientShards;
        for (std::size_t j = lo; j < hi; ++j) {
          const std::size_t idx = order[start + j];
          const PreparedRecord& rec = train_set[idx];
          ModalityMask mask = rec.available;
          if (config.modality_keep_prob < 1.0) {
            Rng rng = Rng::derive(dropout_seed, epoch, idx);
            const std::vector<Modality> present = mask.modalities();
            ModalityMask kept;
            for (Modality m : present) {
              if (rng.bernoulli(config.modality_keep_prob)) kept.set(m);
            }
            if (kept.empty()) kept.set(present[rng.index(present.size())]);
            mask = kept;
          }
          const double p = model.forward(rec, mask, &shard.pass);
          const double y = label_value(rec);
          const std::array<double, 1> probs{p}, labels{y};
          record_loss[j] = nn::binary_cross_entropy(probs, labels);
          record_correct[j] = (decide(p) == *rec.label) ? 1.0 : 0.0;
          model.backward(shard.pass, (p - y) / static_cast<double>(batch), shard.grads, encoders_trainable);
        }
      };
      if (hardware > 1 && batch >= kGradientShards) {
        std::vector<std::jthread> workers;
        for (std::size_t s = 1; s < kGradientShards; ++s) workers.emplace_back(run_shard, s);
        run_shard(0);
      } else {
        for (std::size_t s = 0; s < kGradientShards; ++s) run_shard(s);
      }

      double batch_loss = 0.0;
      for (std::size_t j = 0; j < batch; ++j) {
        batch_loss += record_loss[j];
        correct_sum += record_correct[j];
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      loss_sum += batch_loss;

      Gradients& total = shards[0].grads;
      for (std::size_t s = 1; s < kGradientShards; ++s) total.accumulate(shards[s].grads);
      ++step;
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!trainable[i]) continue;
        if (!total[i].all_finite()) {
          throw TrainingError("non-finite gradient for '" + params[i].name + "' at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index));
        }
        nn::adam_step(params[i], total[i], config.adam, step);
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.train_accuracy = correct_sum / static_cast<double>(train_set.size());
    if (validation_set.empty()) {
      stats.validation_accuracy = stats.train_accuracy;
    } else {
      std::size_t correct = 0;
      for (const PreparedRecord& rec : validation_set) {
        if (decide(model.forward(rec, rec.available)) == *rec.label) ++correct;
      }
      stats.validation_accuracy = static_cast<double>(correct) / static_cast<double>(validation_set.size());
    }
    report.epochs.push_back(stats);
    report.epochs_run = epoch;

    if (epoch == 1 || stats.validation_accuracy > report.best_validation_accuracy) {
      report.best_validation_accuracy = stats.validation_accuracy;
      report.best_epoch = epoch;
      for (std::size_t i = 0; i < params.size(); ++i) best_values[i] = params[i].value;
      since_best = 0;
    } else {
      ++since_best;
    }

    if (stats.train_loss <= config.loss_threshold) {
      report.stop_reason = StopReason::loss_threshold;
      break;
    }
    if (since_best >= config.patience) {
      report.stop_reason = StopReason::patience;
      break;
    }
    report.stop_reason = StopReason::max_epochs;
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].value = std::move(best_values[i]);
    params[i].first_moment.fill(0.0);
    params[i].second_moment.fill(0.0);
    params[i].grad.fill(0.0);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return TrainResult{Checkpoint{std::move(model), config.to_json()}, std::move(report)};
}

TrainResult train(const std::vector<VideoRecord>& corpus, const DatasetSplit& split, const TrainConfig& config,
                  const ThumbnailResolver& resolver, const Checkpoint* init) {
  return train(select_records(corpus, split.train), select_records(corpus, split.validation), config, resolver,
               init);
}

TrainResult train_individual(Modality m, const std::vector<VideoRecord>& train_records,
                             const std::vector<VideoRecord>& validation_records, TrainConfig config,
                             const ThumbnailResolver& resolver) {
  config.regime = Regime::individual;
  config.subset = ModalityMask::only(m);
  return train(train_records, validation_records, config, resolver);
}

Checkpoint merge_encoders(const std::vector<Checkpoint>& parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to merge");
  const BaitRadarModel& first = parts.front().model;
  ModalityMask subset;
  for (const Checkpoint& part : parts) {
    const BaitRadarModel& m = part.model;
    if (!(m.vocab() == first.vocab())) throw DataError("cannot merge checkpoints with different vocabularies");
    if (!(m.normalizer() == first.normalizer())) {
      throw DataError("cannot merge checkpoints with different statistics normalization");
    }
    if (!(m.spec().encoders == first.spec().encoders)) {
      throw DataError("cannot merge checkpoints with different encoder configurations");
    }
    if (!(subset & m.subset()).empty()) throw DataError("merged checkpoints overlap in " + (subset & m.subset()).to_string());
    subset = subset | m.subset();
  }
  ModelSpec spec{first.spec().encoders, subset, HeadKind::shared};
  BaitRadarModel merged = BaitRadarModel::create(spec, first.vocab(), first.normalizer(), 0);
  for (Parameter& p : merged.params()) {
    if (ClassifierHead::is_head_param(p.name)) continue;
    for (const Checkpoint& part : parts) {
      if (auto idx = part.model.params().find(p.name)) p.value = part.model.params()[*idx].value;
    }
  }
  json sources = json::array();
  for (const Checkpoint& part : parts) sources.push_back(part.config);
  return Checkpoint{std::move(merged), json{{"merged_from", sources}}};
}

}  // namespace baitradar
