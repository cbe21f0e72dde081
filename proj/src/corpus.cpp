#include "baitradar/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "baitradar/rng.hpp"

namespace baitradar {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view label_name(Label label) {
  return label == Label::clickbait ? "clickbait" : "non_clickbait";
}

std::array<double, StatsFeatures::kFeatureCount> StatsFeatures::as_array() const {
  return {static_cast<double>(views), static_cast<double>(likes),
          static_cast<double>(dislikes), static_cast<double>(comment_count),
          static_cast<double>(duration_s)};
}

ModalityMask VideoRecord::available() const {
  ModalityMask mask;
  mask.set(Modality::title, title.has_value());
  mask.set(Modality::thumbnail, thumbnail_path.has_value());
  mask.set(Modality::comments, comments.has_value());
  mask.set(Modality::audio_transcript, transcript.has_value());
  mask.set(Modality::tags, tags.has_value());
  mask.set(Modality::statistics, stats.has_value());
  return mask;
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  if (line == 0) throw CorpusError(message);
  throw CorpusError("line " + std::to_string(line) + ": " + message, line);
}

bool is_absent(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null();
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
  if (is_absent(obj, key)) return std::nullopt;
  const json& value = obj.at(key);
  if (!value.is_string()) fail(line, std::string("field '") + key + "' must be a string or null");
  return value.get<std::string>();
}

std::optional<std::vector<std::string>> optional_strings(const json& obj, const char* key,
                                                         std::size_t line) {
  if (is_absent(obj, key)) return std::nullopt;
  const json& value = obj.at(key);
  if (!value.is_array()) fail(line, std::string("field '") + key + "' must be an array or null");
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const json& item : value) {
    if (!item.is_string()) fail(line, std::string("field '") + key + "' must contain only strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::uint64_t count_field(const json& stats, const char* key, std::size_t line) {
  auto it = stats.find(key);
  if (it == stats.end()) fail(line, std::string("stats missing '") + key + "'");
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) {
    if (it->get<std::int64_t>() < 0) fail(line, std::string("stats '") + key + "' must be >= 0");
    return static_cast<std::uint64_t>(it->get<std::int64_t>());
  }
  fail(line, std::string("stats '") + key + "' must be a nonnegative integer");
}

}  // namespace

VideoRecord parse_record(const std::string& json_line, std::size_t line) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    fail(line, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) fail(line, "expected a JSON object");

  VideoRecord record;
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string() || id->get<std::string>().empty()) {
    fail(line, "missing or empty 'id'");
  }
  record.id = id->get<std::string>();
  auto channel = obj.find("channel_id");
  if (channel == obj.end() || !channel->is_string()) fail(line, "missing 'channel_id'");
  record.channel_id = channel->get<std::string>();

  record.title = optional_string(obj, "title", line);
  record.tags = optional_strings(obj, "tags", line);
  record.comments = optional_strings(obj, "comments", line);
  record.transcript = optional_string(obj, "transcript", line);
  record.thumbnail_path = optional_string(obj, "thumbnail", line);

  if (!is_absent(obj, "stats")) {
    const json& stats = obj.at("stats");
    if (!stats.is_object()) fail(line, "field 'stats' must be an object or null");
    StatsFeatures features;
    features.views = count_field(stats, "views", line);
    features.likes = count_field(stats, "likes", line);
    features.dislikes = count_field(stats, "dislikes", line);
    features.comment_count = count_field(stats, "comment_count", line);
    features.duration_s = count_field(stats, "duration_s", line);
    record.stats = features;
  }

  if (auto label = optional_string(obj, "label", line)) {
    if (*label == "clickbait") {
      record.label = Label::clickbait;
    } else if (*label == "non_clickbait") {
      record.label = Label::non_clickbait;
    } else {
      fail(line, "unknown label '" + *label + "'");
    }
  }

  if (record.available().empty()) fail(line, "record '" + record.id + "' has no modality present");
  return record;
}

std::string record_to_json(const VideoRecord& record) {
  ordered_json obj;
  obj["id"] = record.id;
  obj["channel_id"] = record.channel_id;
  auto put = [&](const char* key, const auto& value) {
    if (value) {
      obj[key] = *value;
    } else {
      obj[key] = nullptr;
    }
  };
  put("title", record.title);
  put("tags", record.tags);
  put("comments", record.comments);
  put("transcript", record.transcript);
  if (record.stats) {
    obj["stats"] = {{"views", record.stats->views},
                    {"likes", record.stats->likes},
                    {"dislikes", record.stats->dislikes},
                    {"comment_count", record.stats->comment_count},
                    {"duration_s", record.stats->duration_s}};
  } else {
    obj["stats"] = nullptr;
  }
  put("thumbnail", record.thumbnail_path);
  if (record.label) {
    obj["label"] = label_name(*record.label);
  } else {
    obj["label"] = nullptr;
  }
  return obj.dump();
}

std::vector<VideoRecord> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file '" + path.string() + "'");
  std::vector<VideoRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    VideoRecord record = parse_record(line, line_number);
    if (!seen.insert(record.id).second) fail(line_number, "duplicate id '" + record.id + "'");
    records.push_back(std::move(record));
  }
  return records;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<VideoRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file '" + path.string() + "'");
  for (const VideoRecord& record : records) out << record_to_json(record) << '\n';
  if (!out) throw CorpusError("write failed for '" + path.string() + "'");
}

ThumbnailResolver file_thumbnail_resolver(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](const std::string& path) {
    std::filesystem::path p(path);
    return load_ppm(p.is_absolute() ? p : base / p);
  };
}

// --- splitting ----------------------------------------------------------------

namespace {

constexpr double kTrainFraction = 0.81;
constexpr double kValidationFraction = 0.09;
constexpr double kTestFraction = 0.10;

}  // namespace

DatasetSplit split_dataset(const std::vector<VideoRecord>& records, std::uint64_t seed,
                           bool channel_disjoint) {
  if (records.size() < 10) throw CorpusError("split needs at least 10 records");

  std::vector<const VideoRecord*> sorted;
  sorted.reserve(records.size());
  for (const VideoRecord& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const VideoRecord* a, const VideoRecord* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->id == sorted[i - 1]->id) throw CorpusError("duplicate id '" + sorted[i]->id + "'");
  }

  Rng rng(seed);
  std::span<const VideoRecord*> view(sorted);
  rng.shuffle(view);

  DatasetSplit split;
  split.seed = seed;
  split.channel_disjoint = channel_disjoint;
  const std::size_t n = sorted.size();

  if (!channel_disjoint) {
    const auto n_test = static_cast<std::size_t>(std::llround(kTestFraction * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(kValidationFraction * static_cast<double>(n)));
    const std::size_t n_train = n - n_test - n_val;
    for (std::size_t i = 0; i < n; ++i) {
      auto& part = i < n_train ? split.train : (i < n_train + n_val ? split.validation : split.test);
      part.push_back(sorted[i]->id);
    }
    return split;
  }

  // Channels in first-appearance order of the shuffled records, so ties in
  // size are broken by the seed.
  std::vector<std::string> channel_order;
  std::unordered_map<std::string, std::vector<std::string>> members;
  for (const VideoRecord* r : sorted) {
    auto [it, inserted] = members.try_emplace(r->channel_id);
    if (inserted) channel_order.push_back(r->channel_id);
    it->second.push_back(r->id);
  }
  if (channel_order.size() < 10) {
    throw CorpusError("channel-disjoint split needs at least 10 channels, found " +
                      std::to_string(channel_order.size()));
  }
  std::stable_sort(channel_order.begin(), channel_order.end(),
                   [&](const std::string& a, const std::string& b) {
                     return members[a].size() > members[b].size();
                   });

  const std::array<double, 3> target = {kTrainFraction * static_cast<double>(n),
                                        kValidationFraction * static_cast<double>(n),
                                        kTestFraction * static_cast<double>(n)};
  std::array<std::vector<std::string>*, 3> parts = {&split.train, &split.validation, &split.test};
  for (const std::string& channel : channel_order) {
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t k = 0; k < 3; ++k) {
      const double deficit = target[k] - static_cast<double>(parts[k]->size());
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = k;
      }
    }
    const auto& ids = members[channel];
    parts[best]->insert(parts[best]->end(), ids.begin(), ids.end());
  }
  return split;
}

std::vector<VideoRecord> select_records(const std::vector<VideoRecord>& records,
                                        const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const VideoRecord*> by_id;
  by_id.reserve(records.size());
  for (const VideoRecord& r : records) by_id.emplace(r.id, &r);
  std::vector<VideoRecord> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw CorpusError("split references unknown id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace baitradar
