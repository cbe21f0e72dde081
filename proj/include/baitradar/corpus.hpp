#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "baitradar/error.hpp"
#include "baitradar/modality.hpp"

namespace baitradar {

enum class Label { clickbait, non_clickbait };

std::string_view label_name(Label label);

struct StatsFeatures {
  std::uint64_t views = 0;
  std::uint64_t likes = 0;
  std::uint64_t dislikes = 0;
  std::uint64_t comment_count = 0;
  std::uint64_t duration_s = 0;

  static constexpr std::size_t kFeatureCount = 5;
  std::array<double, kFeatureCount> as_array() const;

  bool operator==(const StatsFeatures&) const = default;
};

/// RGB image, row-major, three bytes per pixel.
struct ThumbnailImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> data;

  std::uint8_t at(std::size_t row, std::size_t col, std::size_t channel) const {
    return data[(row * width + col) * channels + channel];
  }
  bool operator==(const ThumbnailImage&) const = default;
};

struct VideoRecord {
  std::string id;
  std::string channel_id;
  std::optional<std::string> title;
  std::optional<std::vector<std::string>> tags;
  std::optional<std::vector<std::string>> comments;
  std::optional<std::string> transcript;
  std::optional<StatsFeatures> stats;
  std::optional<std::string> thumbnail_path;
  std::optional<Label> label;

  /// Modalities whose payload is present in this record.
  ModalityMask available() const;

  bool operator==(const VideoRecord&) const = default;
};

/// Partition of record ids. Each sequence is sorted by the split's
/// shuffle order, not by id.
struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  bool channel_disjoint = false;
};

/// Malformed JSONL input. `line()` is 1-based; 0 when not line-specific.
class CorpusError : public DataError {
 public:
  CorpusError(const std::string& what, std::size_t line = 0) : DataError(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses one JSON object per the corpus schema. Throws CorpusError.
VideoRecord parse_record(const std::string& json_line, std::size_t line_number = 0);
std::string record_to_json(const VideoRecord& record);

/// Loads all records in file order. Blank lines are skipped.
std::vector<VideoRecord> load_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<VideoRecord>& records);

// --- PPM thumbnails ---------------------------------------------------------

enum class PpmErrorKind { io, unsupported_format, bad_maxval, malformed_header, truncated };

class PpmError : public DataError {
 public:
  PpmError(PpmErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
  PpmErrorKind kind() const { return kind_; }

 private:
  PpmErrorKind kind_;
};

ThumbnailImage decode_ppm(const std::string& bytes);
ThumbnailImage load_ppm(const std::filesystem::path& path);
std::string encode_ppm(const ThumbnailImage& image);
void write_ppm(const std::filesystem::path& path, const ThumbnailImage& image);

/// Maps a record's thumbnail path to pixels.
using ThumbnailResolver = std::function<ThumbnailImage(const std::string& path)>;

/// Resolves relative paths against `base_dir` and decodes PPM files,
/// caching nothing.
ThumbnailResolver file_thumbnail_resolver(std::filesystem::path base_dir);

// --- splitting ----------------------------------------------------------------

/// 81/9/10 train/validation/test split. Records are sorted by id, permuted by
/// a seed-keyed shuffle and sliced; with `channel_disjoint`, whole channels are
/// assigned greedily in descending size order instead.
DatasetSplit split_dataset(const std::vector<VideoRecord>& records, std::uint64_t seed,
                           bool channel_disjoint);

/// Looks up split ids in `records`; throws CorpusError on an unknown id.
std::vector<VideoRecord> select_records(const std::vector<VideoRecord>& records,
                                        const std::vector<std::string>& ids);

// --- synthetic corpora -------------------------------------------------------

struct SyntheticConfig {
  std::size_t n_records = 1000;
  double clickbait_ratio = 0.6;
  /// Indexed by Modality; 0 makes a modality label-independent.
  std::array<double, kModalityCount> signal_strengths{1, 1, 1, 1, 1, 1};
  std::size_t general_pool_size = 400;
  std::size_t n_channels = 40;
  std::size_t thumbnail_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<VideoRecord> records;
  /// Keyed by the records' thumbnail_path.
  std::map<std::string, ThumbnailImage> thumbnails;

  ThumbnailResolver resolver() const;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

/// Writes `<dir>/<jsonl_name>` plus the PPM files under `dir`.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& jsonl_path);

/// Provocative words planted in clickbait titles.
const std::vector<std::string>& bait_lexicon();

}  // namespace baitradar
