#include "baitradar/modality.hpp"

#include <stdexcept>

namespace baitradar {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::title: return "title";
    case Modality::thumbnail: return "thumbnail";
    case Modality::comments: return "comments";
    case Modality::audio_transcript: return "audio_transcript";
    case Modality::tags: return "tags";
    case Modality::statistics: return "statistics";
  }
  return "unknown";
}

Modality parse_modality(std::string_view name) {
  for (Modality m : kAllModalities) {
    if (modality_name(m) == name) return m;
  }
  if (name == "transcript") return Modality::audio_transcript;
  if (name == "stats") return Modality::statistics;
  throw std::invalid_argument("unknown modality '" + std::string(name) + "'");
}

bool is_text_modality(Modality m) {
  return m == Modality::title || m == Modality::comments ||
         m == Modality::audio_transcript || m == Modality::tags;
}

ModalityMask ModalityMask::all() {
  ModalityMask mask;
  mask.bits_.set();
  return mask;
}

ModalityMask ModalityMask::only(Modality m) {
  ModalityMask mask;
  mask.set(m);
  return mask;
}

ModalityMask ModalityMask::parse(std::string_view text) {
  if (text == "all") return all();
  ModalityMask mask;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of("+,", start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view part = text.substr(start, end - start);
    if (part.empty()) throw std::invalid_argument("empty modality name in '" + std::string(text) + "'");
    mask.set(parse_modality(part));
    start = end + 1;
  }
  return mask;
}

std::vector<Modality> ModalityMask::modalities() const {
  std::vector<Modality> out;
  for (Modality m : kAllModalities) {
    if (has(m)) out.push_back(m);
  }
  return out;
}

std::vector<std::string> ModalityMask::names() const {
  std::vector<std::string> out;
  for (Modality m : modalities()) out.emplace_back(modality_name(m));
  return out;
}

std::string ModalityMask::to_string() const {
  std::string out;
  for (Modality m : modalities()) {
    if (!out.empty()) out += '+';
    out += modality_name(m);
  }
  return out;
}

}  // namespace baitradar
