#include "baitradar/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <thread>

namespace baitradar {

using nlohmann::json;

void ConfusionMatrix::add(Label truth, Label predicted) {
  if (truth == Label::clickbait) {
    (predicted == Label::clickbait ? tp : fn) += 1;
  } else {
    (predicted == Label::clickbait ? fp : tn) += 1;
  }
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.tp + cm.tn + cm.fp + cm.fn);
}

double recount_accuracy(const std::vector<RecordPrediction>& predictions) {
  if (predictions.empty()) throw std::invalid_argument("no predictions to count");
  std::size_t correct = 0;
  for (const RecordPrediction& p : predictions) {
    if ((p.prediction.probability >= kDecisionThreshold) == (p.truth == Label::clickbait)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

Evaluation evaluate(const Predictor& predict, const std::vector<VideoRecord>& records,
                    const EvaluateOptions& options) {
  for (const VideoRecord& r : records) {
    if (!r.label) throw DataError("cannot evaluate unlabeled record '" + r.id + "'");
  }
  Evaluation eval;
  if (records.empty()) return eval;
  if (options.warm_up) predict(records.front());

  using clock = std::chrono::steady_clock;
  double latency_sum = 0.0;
  for (const VideoRecord& r : records) {
    const auto t0 = clock::now();
    Prediction p = predict(r);
    const double latency = std::chrono::duration<double>(clock::now() - t0).count();
    latency_sum += latency;
    eval.max_latency_seconds = std::max(eval.max_latency_seconds, latency);
    eval.confusion.add(*r.label, p.label);
    eval.predictions.push_back(RecordPrediction{r.id, *r.label, std::move(p), latency});
  }
  eval.accuracy = accuracy(eval.confusion);
  eval.mean_latency_seconds = latency_sum / static_cast<double>(records.size());
  if (eval.confusion.total() != records.size()) throw std::logic_error("confusion matrix total != record count");
  if (options.cross_check && recount_accuracy(eval.predictions) != eval.accuracy) {
    throw std::logic_error("confusion-matrix accuracy disagrees with per-record recount");
  }
  return eval;
}

Evaluation evaluate(const BaitRadarModel& model, const std::vector<VideoRecord>& records, const ModalityMask& subset,
                    const ThumbnailResolver& resolver, const EvaluateOptions& options) {
  return evaluate([&](const VideoRecord& r) { return model.predict(r, subset, resolver); }, records, options);
}

// --- sweep -----------------------------------------------------------------------

std::vector<ModalityMask> SweepConfig::default_combinations() {
  auto combo = [](std::string_view text) { return ModalityMask::parse(text); };
  return {ModalityMask::all(), combo("title"), combo("title+tags"), combo("title+audio_transcript"),
          combo("title+comments+tags")};
}

void SweepConfig::validate() const {
  if (combinations.empty()) throw std::invalid_argument("sweep needs at least one combination");
  for (const ModalityMask& c : combinations) {
    if (!c.has(Modality::title)) {
      throw std::invalid_argument("sweep combination '" + c.to_string() + "' does not contain title");
    }
  }
  base.validate();
}

const SweepEntry* SweepResult::find(const ModalityMask& combination) const {
  for (const SweepEntry& e : entries) {
    if (e.combination == combination) return &e;
  }
  return nullptr;
}

namespace {

std::string format_accuracy(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

}  // namespace

std::string SweepResult::to_csv() const {
  std::string out = "combination,accuracy,epochs,checkpoint\n";
  for (const SweepEntry& e : entries) {
    out += e.combination.to_string() + "," + format_accuracy(e.test_accuracy) + "," + std::to_string(e.epochs) +
           "," + e.checkpoint + "\n";
  }
  return out;
}

json SweepResult::to_json() const {
  json rows = json::array();
  for (const SweepEntry& e : entries) {
    rows.push_back(json{{"combination", e.combination.to_string()},
                        {"modalities", e.combination.names()},
                        {"accuracy", e.test_accuracy},
                        {"epochs", e.epochs},
                        {"stop_reason", stop_reason_name(e.stop_reason)},
                        {"checkpoint", e.checkpoint}});
  }
  return json{{"combinations", rows}};
}

std::string SweepResult::to_gnuplot() const {
  std::string out = "# combination accuracy\n";
  for (const SweepEntry& e : entries) {
    out += "\"" + e.combination.to_string() + "\" " + format_accuracy(e.test_accuracy) + "\n";
  }
  return out;
}

SweepResult sweep_combinations(const std::vector<VideoRecord>& corpus, const DatasetSplit& split,
                               const SweepConfig& config, const ThumbnailResolver& resolver) {
  config.validate();
  std::vector<ModalityMask> combos;
  for (const ModalityMask& c : config.combinations) {
    if (std::find(combos.begin(), combos.end(), c) == combos.end()) combos.push_back(c);
  }
  if (std::find(combos.begin(), combos.end(), ModalityMask::all()) == combos.end()) {
    combos.push_back(ModalityMask::all());
  }

  const std::vector<VideoRecord> train_records = select_records(corpus, split.train);
  const std::vector<VideoRecord> validation_records = select_records(corpus, split.validation);
  const std::vector<VideoRecord> test_records = select_records(corpus, split.test);
  if (config.checkpoint_dir) std::filesystem::create_directories(*config.checkpoint_dir);

  std::vector<SweepEntry> entries(combos.size());
  auto run = [&](std::size_t i) {
    TrainConfig tc = config.base;
    tc.regime = Regime::scratch;
    tc.subset = combos[i];
    TrainResult result = train(train_records, validation_records, tc, resolver);
    const Evaluation eval = evaluate(result.checkpoint.model, test_records, combos[i], resolver);
    SweepEntry& e = entries[i];
    e.combination = combos[i];
    e.test_accuracy = eval.accuracy;
    e.epochs = result.report.epochs_run;
    e.stop_reason = result.report.stop_reason;
    e.max_latency_seconds = eval.max_latency_seconds;
    if (config.checkpoint_dir) {
      const std::filesystem::path path = *config.checkpoint_dir / (combos[i].to_string() + ".ckpt");
      save_checkpoint(result.checkpoint, path);
      e.checkpoint = path.string();
    }
  };
  if (config.parallel) {
    std::vector<std::exception_ptr> errors(combos.size());
    {
      std::vector<std::jthread> workers;
      for (std::size_t i = 0; i < combos.size(); ++i) {
        workers.emplace_back([&, i] {
          try {
            run(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t i = 0; i < combos.size(); ++i) run(i);
  }

  std::stable_sort(entries.begin(), entries.end(), [](const SweepEntry& a, const SweepEntry& b) {
    if (a.test_accuracy != b.test_accuracy) return a.test_accuracy > b.test_accuracy;
    return a.combination.to_string() < b.combination.to_string();
  });
  return SweepResult{std::move(entries)};
}

}  // namespace baitradar
