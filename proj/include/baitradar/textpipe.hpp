#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "baitradar/corpus.hpp"
#include "baitradar/modality.hpp"

namespace baitradar {

/// Lowercases and splits on anything that is not an ASCII letter or digit.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  /// PAD and UNK only.
  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  /// UNK for unknown tokens.
  std::size_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token_at(std::size_t index) const { return tokens_.at(index); }

  /// `token<TAB>index` lines, sorted by index.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  friend Vocabulary build_vocab(const std::vector<std::string>&, std::size_t, std::size_t);
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";

/// Ranks tokens by (frequency desc, token asc), drops those below `min_freq`,
/// and keeps at most `max_size` entries counting PAD and UNK.
Vocabulary build_vocab(const std::vector<std::string>& corpus_texts, std::size_t max_size,
                       std::size_t min_freq);

struct TokenSequence {
  std::vector<std::size_t> ids;
  std::size_t true_length = 0;

  bool operator==(const TokenSequence&) const = default;
};

/// Prefix-truncating, PAD-filling encoder.
TokenSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab, std::size_t max_len);

struct TextLimits {
  std::size_t title = 16;
  std::size_t tags = 32;
  std::size_t comments = 128;
  std::size_t transcript = 256;
  /// Comments beyond this count are ignored before concatenation.
  std::size_t max_comments = 20;

  std::size_t max_len(Modality m) const;
};

/// The raw text a record contributes for a text modality, or nullopt when
/// the modality is absent. Tags are joined by spaces; the first
/// `limits.max_comments` comments are concatenated in order.
std::optional<std::string> modality_text(const VideoRecord& record, Modality m, const TextLimits& limits);

/// Every present text payload of every record, for vocabulary building.
std::vector<std::string> collect_texts(const std::vector<VideoRecord>& records, const TextLimits& limits);

}  // namespace baitradar
