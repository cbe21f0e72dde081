#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "baitradar/corpus.hpp"
#include "baitradar/fusion.hpp"
#include "baitradar/model.hpp"
#include "baitradar/training.hpp"

namespace baitradar {

/// Positive class is clickbait.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  void add(Label truth, Label predicted);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// (TP + TN) / (TP + TN + FP + FN). Throws std::invalid_argument when empty.
double accuracy(const ConfusionMatrix& cm);

struct RecordPrediction {
  std::string id;
  Label truth = Label::non_clickbait;
  Prediction prediction;
  double latency_seconds = 0.0;
};

struct Evaluation {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double mean_latency_seconds = 0.0;
  double max_latency_seconds = 0.0;
  std::vector<RecordPrediction> predictions;
};

struct EvaluateOptions {
  /// Predict the first record once, untimed, before measuring.
  bool warm_up = true;
  /// Recount accuracy from the stored predictions and throw std::logic_error
  /// on disagreement with the confusion matrix.
  bool cross_check = false;
};

using Predictor = std::function<Prediction(const VideoRecord&)>;

/// Runs `predict` over every record in order. Throws DataError for an
/// unlabeled record.
Evaluation evaluate(const Predictor& predict, const std::vector<VideoRecord>& records,
                    const EvaluateOptions& options = {});
Evaluation evaluate(const BaitRadarModel& model, const std::vector<VideoRecord>& records, const ModalityMask& subset,
                    const ThumbnailResolver& resolver, const EvaluateOptions& options = {});

/// Accuracy recomputed from per-record predictions alone.
double recount_accuracy(const std::vector<RecordPrediction>& predictions);

struct SweepConfig {
  /// Every combination must contain title; the full set is always added.
  std::vector<ModalityMask> combinations = default_combinations();
  TrainConfig base;
  /// When set, each combination's checkpoint is written here.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// Train combinations on separate threads. Results are identical to the
  /// sequential mode.
  bool parallel = false;

  static std::vector<ModalityMask> default_combinations();
  void validate() const;
};

struct SweepEntry {
  ModalityMask combination;
  double test_accuracy = 0.0;
  std::size_t epochs = 0;
  StopReason stop_reason = StopReason::max_epochs;
  std::string checkpoint;
  double max_latency_seconds = 0.0;
};

struct SweepResult {
  /// Sorted by accuracy descending, then by combination name.
  std::vector<SweepEntry> entries;

  const SweepEntry* find(const ModalityMask& combination) const;
  /// `combination,accuracy,epochs,checkpoint`.
  std::string to_csv() const;
  nlohmann::json to_json() const;
  /// Two columns (label, accuracy) for a gnuplot bar chart.
  std::string to_gnuplot() const;
};

/// Trains one scratch model per combination on the split's training part
/// and scores it on the test part.
SweepResult sweep_combinations(const std::vector<VideoRecord>& corpus, const DatasetSplit& split,
                               const SweepConfig& config, const ThumbnailResolver& resolver);

}  // namespace baitradar
