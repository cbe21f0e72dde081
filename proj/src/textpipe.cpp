#include "baitradar/textpipe.hpp"

#include <algorithm>
#include <stdexcept>

namespace baitradar {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

void Vocabulary::add(std::string token) {
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.index_.clear();
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) throw DataError("vocabulary line without tab");
    const std::string index_text(line.substr(tab + 1));
    std::size_t index = 0;
    try {
      index = std::stoull(index_text);
    } catch (const std::exception&) {
      throw DataError("vocabulary index '" + index_text + "' is not a number");
    }
    if (index != vocab.tokens_.size()) throw DataError("vocabulary indices are not contiguous");
    vocab.add(std::string(line.substr(0, tab)));
  }
  if (vocab.size() < 2 || vocab.tokens_[kPad] != kPadToken || vocab.tokens_[kUnk] != kUnkToken) {
    throw DataError("vocabulary must start with PAD and UNK");
  }
  return vocab;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus_texts, std::size_t max_size,
                       std::size_t min_freq) {
  if (max_size < 2) throw std::invalid_argument("vocabulary max_size must be at least 2");
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& text : corpus_texts) {
    for (std::string& token : tokenize(text)) ++counts[std::move(token)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& [token, count] : counts) {
    if (count >= min_freq && token != kPadToken && token != kUnkToken) ranked.emplace_back(token, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab;
  for (auto& [token, count] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.add(std::move(token));
  }
  return vocab;
}

TokenSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("max_len must be at least 1");
  TokenSequence seq;
  seq.ids.assign(max_len, Vocabulary::kPad);
  seq.true_length = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < seq.true_length; ++i) seq.ids[i] = vocab.index_of(tokens[i]);
  return seq;
}

std::size_t TextLimits::max_len(Modality m) const {
  switch (m) {
    case Modality::title: return title;
    case Modality::tags: return tags;
    case Modality::comments: return comments;
    case Modality::audio_transcript: return transcript;
    default: throw std::invalid_argument("not a text modality: " + std::string(modality_name(m)));
  }
}

namespace {

std::string join(const std::vector<std::string>& parts, std::size_t limit) {
  std::string out;
  const std::size_t n = std::min(parts.size(), limit);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += parts[i];
  }
  return out;
}

}  // namespace

std::optional<std::string> modality_text(const VideoRecord& record, Modality m, const TextLimits& limits) {
  switch (m) {
    case Modality::title: return record.title;
    case Modality::audio_transcript: return record.transcript;
    case Modality::tags:
      if (!record.tags) return std::nullopt;
      return join(*record.tags, record.tags->size());
    case Modality::comments:
      if (!record.comments) return std::nullopt;
      return join(*record.comments, limits.max_comments);
    default: throw std::invalid_argument("not a text modality: " + std::string(modality_name(m)));
  }
}

std::vector<std::string> collect_texts(const std::vector<VideoRecord>& records, const TextLimits& limits) {
  std::vector<std::string> texts;
  for (const VideoRecord& record : records) {
    for (Modality m : kAllModalities) {
      if (!is_text_modality(m)) continue;
      if (auto text = modality_text(record, m, limits)) texts.push_back(std::move(*text));
    }
  }
  return texts;
}

}  // namespace baitradar
