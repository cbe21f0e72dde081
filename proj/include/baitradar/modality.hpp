#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace baitradar {

/// The six video attributes, in the order used by masks and fusion.
enum class Modality : std::size_t {
  title = 0,
  thumbnail,
  comments,
  audio_transcript,
  tags,
  statistics,
};

inline constexpr std::size_t kModalityCount = 6;

inline constexpr std::array<Modality, kModalityCount> kAllModalities = {
    Modality::title,    Modality::thumbnail, Modality::comments,
    Modality::audio_transcript, Modality::tags, Modality::statistics};

std::string_view modality_name(Modality m);

/// Accepts canonical names plus "transcript" and "stats" aliases.
/// Throws std::invalid_argument on an unknown name.
Modality parse_modality(std::string_view name);

bool is_text_modality(Modality m);

/// Presence flags for the six modalities.
class ModalityMask {
 public:
  ModalityMask() = default;

  static ModalityMask all();
  static ModalityMask only(Modality m);
  /// Parses "title+tags" or "title,tags"; "all" selects every modality.
  static ModalityMask parse(std::string_view text);

  bool has(Modality m) const { return bits_.test(static_cast<std::size_t>(m)); }
  ModalityMask& set(Modality m, bool on = true) {
    bits_.set(static_cast<std::size_t>(m), on);
    return *this;
  }
  std::size_t count() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }

  std::vector<Modality> modalities() const;
  std::vector<std::string> names() const;
  /// Canonical "title+thumbnail+..." form in modality order.
  std::string to_string() const;

  ModalityMask operator&(const ModalityMask& other) const {
    ModalityMask out;
    out.bits_ = bits_ & other.bits_;
    return out;
  }
  ModalityMask operator|(const ModalityMask& other) const {
    ModalityMask out;
    out.bits_ = bits_ | other.bits_;
    return out;
  }
  bool operator==(const ModalityMask&) const = default;

  /// True when every flag set here is also set in `other`.
  bool subset_of(const ModalityMask& other) const {
    return (bits_ & ~other.bits_).none();
  }

 private:
  std::bitset<kModalityCount> bits_;
};

}  // namespace baitradar
