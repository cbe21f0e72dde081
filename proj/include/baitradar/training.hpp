#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "baitradar/checkpoint.hpp"
#include "baitradar/corpus.hpp"
#include "baitradar/layers.hpp"
#include "baitradar/model.hpp"

namespace baitradar {

enum class Regime { individual, head_only, finetune, scratch };
enum class StopReason { loss_threshold, patience, max_epochs };

std::string_view regime_name(Regime r);
Regime parse_regime(std::string_view name);
std::string_view stop_reason_name(StopReason r);

struct TrainConfig {
  Regime regime = Regime::scratch;
  ModalityMask subset = ModalityMask::all();
  std::size_t batch_size = 16;
  std::size_t max_epochs = 300;
  nn::AdamConfig adam;
  /// Stop once the epoch-mean training loss is at or below this.
  double loss_threshold = 0.05;
  /// Stop after this many epochs without a validation-accuracy improvement.
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  /// Per-record probability of keeping each present modality during
  /// training. 1 disables modality dropout.
  double modality_keep_prob = 1.0;
  std::size_t vocab_max_size = 10000;
  std::size_t vocab_min_freq = 2;
  EncoderConfig encoders;

  void validate() const;
  nlohmann::json to_json() const;
  /// Keys absent from `j` keep their values from `base`.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  StopReason stop_reason = StopReason::max_epochs;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_validation_accuracy = 0.0;
  /// Training records skipped because none of their modalities were in the subset.
  std::size_t skipped_records = 0;
  double wall_seconds = 0.0;

  /// One JSON object per epoch, then a summary line. Wall time is omitted
  /// so that reports of identical runs are byte-identical.
  std::string to_jsonl() const;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainReport report;
};

/// Raised for numeric failures during training, e.g. a non-finite loss.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trains per `config.regime` and returns the best-validation checkpoint.
/// head_only and finetune require `init` (pretrained encoders); scratch and
/// individual build the vocabulary and statistics normalization from
/// `train_records`.
TrainResult train(const std::vector<VideoRecord>& train_records, const std::vector<VideoRecord>& validation_records,
                  const TrainConfig& config, const ThumbnailResolver& resolver, const Checkpoint* init = nullptr);

TrainResult train(const std::vector<VideoRecord>& corpus, const DatasetSplit& split, const TrainConfig& config,
                  const ThumbnailResolver& resolver, const Checkpoint* init = nullptr);

/// Encoder for `m` plus a private dense(d -> 1) head.
TrainResult train_individual(Modality m, const std::vector<VideoRecord>& train_records,
                             const std::vector<VideoRecord>& validation_records, TrainConfig config,
                             const ThumbnailResolver& resolver);

/// Combines the encoders of several checkpoints (for example individually
/// trained ones) into one initialization for head_only or finetune. All
/// parts must share vocabulary, normalization and encoder configuration.
Checkpoint merge_encoders(const std::vector<Checkpoint>& parts);

}  // namespace baitradar
