#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "baitradar/corpus.hpp"
#include "baitradar/rng.hpp"

namespace baitradar {

namespace {

const std::vector<std::string> kBait = {
    "shocking", "unbelievable", "insane",   "epic",     "crazy",     "secret",
    "exposed",  "omg",          "gone",     "wrong",    "never",     "mind",
    "blown",    "ultimate",     "destroyed", "revealed", "banned",    "extreme",
    "prank",    "impossible",   "terrifying", "hacks",   "truth",     "wow",
    "must",     "see",          "believe",  "warning",  "disaster",  "craziest"};

const std::vector<std::string> kCalmTitle = {
    "tutorial", "review",   "explained", "guide",    "lecture", "analysis",
    "howto",    "walkthrough", "overview", "documentary", "interview", "lesson"};

const std::vector<std::string> kTrendingTags = {
    "viral",  "trending", "prank",    "challenge", "reaction", "shocking",  "funny", "fail",
    "omg",    "2020",     "new",      "best",      "top",      "compilation", "epic", "insane"};

const std::vector<std::string> kFiller = {
    "guys",     "subscribe", "smash", "like",   "bell",      "hey",          "whats",
    "up",       "literally", "button", "merch", "giveaway",  "notification", "comment"};

const std::vector<std::string> kSubstantive = {
    "first",   "step",    "because", "therefore", "example", "data",     "result", "method",
    "consider", "explain", "measure", "process",  "detail",  "reason",   "evidence"};

const std::vector<std::string> kComplaint = {
    "fake",  "misleading", "clickbait", "disappointed", "waste",    "liar",
    "dislike", "scam",     "lies",      "reported",     "pointless", "boring"};

const std::vector<std::string> kPraise = {
    "helpful", "informative", "thanks",     "great",    "learned",  "clear",
    "useful",  "excellent",   "appreciate", "quality",  "accurate", "recommend"};

std::vector<std::string> make_general_pool(std::size_t size) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::set<std::string> reserved;
  for (const auto* list : {&kBait, &kCalmTitle, &kTrendingTags, &kFiller, &kSubstantive, &kComplaint, &kPraise}) {
    reserved.insert(list->begin(), list->end());
  }
  std::vector<std::string> pool;
  pool.reserve(size);
  const std::size_t syllables = consonants.size() * vowels.size();
  for (std::size_t i = 0; pool.size() < size; ++i) {
    // Three syllables in mixed radix; enough for ~343k distinct words.
    std::size_t x = i;
    std::string word;
    for (int s = 0; s < 3; ++s) {
      const std::size_t syl = x % syllables;
      x /= syllables;
      word += consonants[syl % consonants.size()];
      word += vowels[syl / consonants.size()];
    }
    if (!reserved.count(word)) pool.push_back(word);
  }
  return pool;
}

const std::string& pick(Rng& rng, const std::vector<std::string>& words) {
  return words[rng.index(words.size())];
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

/// Mixes capitalization and trailing punctuation into a title; tokenization
/// strips both so this only exercises the text pipeline.
std::string decorate_title(Rng& rng, std::vector<std::string> words) {
  for (std::string& w : words) {
    const double u = rng.uniform();
    if (u < 0.25) {
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    } else if (u < 0.6 && !w.empty()) {
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    }
  }
  std::string title = join(words);
  const double u = rng.uniform();
  if (u < 0.2) title += "!!";
  else if (u < 0.35) title += "?";
  return title;
}

struct Generator {
  const SyntheticConfig& config;
  std::vector<std::string> general;

  double strength(Modality m) const { return config.signal_strengths[static_cast<std::size_t>(m)]; }

  // Each modality draws an "informative" flag with probability equal to its
  // signal strength; uninformative payloads come from one label-independent
  // distribution.
  std::vector<std::string> title_words(Rng& rng, Label label, bool informative) const {
    std::vector<std::string> words;
    if (!informative) {
      const auto n = rng.uniform_int(4, 8);
      for (std::int64_t i = 0; i < n; ++i) words.push_back(pick(rng, general));
    } else if (label == Label::clickbait) {
      const auto n_bait = rng.uniform_int(2, 3);
      const auto n_general = rng.uniform_int(2, 5);
      for (std::int64_t i = 0; i < n_bait; ++i) words.push_back(pick(rng, kBait));
      for (std::int64_t i = 0; i < n_general; ++i) words.push_back(pick(rng, general));
    } else {
      const auto n_calm = rng.uniform_int(1, 2);
      const auto n_general = rng.uniform_int(3, 6);
      for (std::int64_t i = 0; i < n_calm; ++i) words.push_back(pick(rng, kCalmTitle));
      for (std::int64_t i = 0; i < n_general; ++i) words.push_back(pick(rng, general));
    }
    rng.shuffle(std::span<std::string>(words));
    return words;
  }

  std::vector<std::string> tags(Rng& rng, Label label, bool informative) const {
    std::vector<std::string> out;
    if (!informative) {
      const auto n = rng.uniform_int(6, 30);
      for (std::int64_t i = 0; i < n; ++i) out.push_back(pick(rng, general));
    } else if (label == Label::clickbait) {
      const auto n = rng.uniform_int(18, 30);
      for (std::int64_t i = 0; i < n; ++i) {
        out.push_back(rng.bernoulli(0.5) ? pick(rng, kTrendingTags) : pick(rng, general));
      }
    } else {
      const auto n = rng.uniform_int(6, 12);
      for (std::int64_t i = 0; i < n; ++i) out.push_back(pick(rng, general));
    }
    return out;
  }

  std::string transcript(Rng& rng, Label label, bool informative,
                         const std::vector<std::string>& title) const {
    const auto n = rng.uniform_int(40, 90);
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(n) + 2 * title.size());
    if (!informative) {
      for (std::int64_t i = 0; i < n; ++i) words.push_back(pick(rng, general));
      return join(words);
    }
    std::set<std::string> title_set;
    for (const std::string& w : title) {
      std::string lower = w;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      title_set.insert(lower);
    }
    if (label == Label::clickbait) {
      for (std::int64_t i = 0; i < n; ++i) {
        if (rng.bernoulli(0.3)) {
          words.push_back(pick(rng, kFiller));
          continue;
        }
        // Suppress overlap with the title.
        std::string w = pick(rng, general);
        while (title_set.count(w)) w = pick(rng, general);
        words.push_back(w);
      }
    } else {
      for (std::int64_t i = 0; i < n; ++i) {
        words.push_back(rng.bernoulli(0.25) ? pick(rng, kSubstantive) : pick(rng, general));
      }
      for (const std::string& w : title_set) {
        const auto repeats = rng.uniform_int(1, 2);
        for (std::int64_t r = 0; r < repeats; ++r) {
          const auto at = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(words.size())));
          words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), w);
        }
      }
    }
    return join(words);
  }

  std::vector<std::string> comments(Rng& rng, Label label, bool informative) const {
    const auto n = rng.uniform_int(4, 10);
    std::vector<std::string> out;
    for (std::int64_t c = 0; c < n; ++c) {
      std::vector<std::string> words;
      const auto len = rng.uniform_int(3, 8);
      for (std::int64_t i = 0; i < len; ++i) words.push_back(pick(rng, general));
      if (informative) {
        const auto& lexicon = label == Label::clickbait ? kComplaint : kPraise;
        const auto k = rng.uniform_int(1, 2);
        for (std::int64_t i = 0; i < k; ++i) {
          const auto at = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(words.size())));
          words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), pick(rng, lexicon));
        }
      }
      out.push_back(join(words));
    }
    return out;
  }

  ThumbnailImage thumbnail(Rng& rng, Label label, bool informative) const {
    const std::size_t size = config.thumbnail_size;
    ThumbnailImage image;
    image.width = size;
    image.height = size;
    image.data.resize(size * size * 3);
    const double gray = rng.uniform(60, 190);
    std::array<double, 3> base{};
    for (double& c : base) c = gray + rng.uniform(-20, 20);
    for (std::size_t p = 0; p < size * size; ++p) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = base[c] + rng.uniform(-15, 15);
        image.data[p * 3 + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }

    auto fill_block = [&](const std::array<double, 3>& color) {
      const auto side = static_cast<std::size_t>(static_cast<double>(size) * rng.uniform(0.25, 0.45));
      const auto row0 = rng.index(size - side + 1);
      const auto col0 = rng.index(size - side + 1);
      for (std::size_t r = row0; r < row0 + side; ++r) {
        for (std::size_t col = col0; col < col0 + side; ++col) {
          for (std::size_t c = 0; c < 3; ++c) {
            image.data[(r * size + col) * 3 + c] = static_cast<std::uint8_t>(std::clamp(color[c], 0.0, 255.0));
          }
        }
      }
    };

    if (informative && label == Label::clickbait) {
      static const std::array<std::array<double, 3>, 4> saturated = {
          {{255, 0, 0}, {255, 230, 0}, {0, 255, 0}, {255, 0, 255}}};
      fill_block(saturated[rng.index(saturated.size())]);
    } else {
      const double g = rng.uniform(40, 210);
      fill_block({g + rng.uniform(-15, 15), g + rng.uniform(-15, 15), g + rng.uniform(-15, 15)});
    }
    return image;
  }

  StatsFeatures stats(Rng& rng, Label label, bool informative) const {
    double log_views_mean = 10.0, log_views_sd = 1.5;
    double like_lo = 0.01, like_hi = 0.05, dislike_lo = 0.001, dislike_hi = 0.01;
    std::int64_t dur_lo = 60, dur_hi = 1200;
    if (informative && label == Label::clickbait) {
      log_views_mean = 11.5;
      log_views_sd = 2.2;
      like_lo = 0.005;
      like_hi = 0.03;
      dislike_lo = 0.01;
      dislike_hi = 0.04;
      dur_lo = 300;
    } else if (informative) {
      log_views_mean = 9.5;
      log_views_sd = 1.0;
      like_lo = 0.03;
      like_hi = 0.07;
      dislike_lo = 0.0005;
      dislike_hi = 0.004;
    }
    const double views = std::min(std::exp(rng.normal(log_views_mean, log_views_sd)), 1e10);
    StatsFeatures s;
    s.views = static_cast<std::uint64_t>(views);
    s.likes = static_cast<std::uint64_t>(views * rng.uniform(like_lo, like_hi));
    s.dislikes = static_cast<std::uint64_t>(views * rng.uniform(dislike_lo, dislike_hi));
    s.comment_count = static_cast<std::uint64_t>(views * rng.uniform(0.001, 0.005));
    s.duration_s = static_cast<std::uint64_t>(rng.uniform_int(dur_lo, dur_hi));
    return s;
  }
};

std::string padded(std::size_t value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return digits;
}

}  // namespace

const std::vector<std::string>& bait_lexicon() { return kBait; }

void SyntheticConfig::validate() const {
  if (n_records == 0) throw std::invalid_argument("n_records must be positive");
  if (!(clickbait_ratio >= 0.0 && clickbait_ratio <= 1.0)) {
    throw std::invalid_argument("clickbait_ratio must lie in [0, 1]");
  }
  for (double s : signal_strengths) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("signal strengths must lie in [0, 1]");
  }
  if (general_pool_size < 20) throw std::invalid_argument("general_pool_size must be at least 20");
  if (n_channels == 0) throw std::invalid_argument("n_channels must be positive");
  if (thumbnail_size < 16) throw std::invalid_argument("thumbnail_size must be at least 16");
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Generator gen{config, make_general_pool(config.general_pool_size)};

  const auto n_clickbait = static_cast<std::size_t>(
      std::llround(config.clickbait_ratio * static_cast<double>(config.n_records)));
  std::vector<Label> labels(config.n_records, Label::non_clickbait);
  std::fill_n(labels.begin(), n_clickbait, Label::clickbait);
  Rng label_rng = Rng::derive(config.seed, 0x6c6162656cULL);
  label_rng.shuffle(std::span<Label>(labels));

  SyntheticCorpus corpus;
  corpus.records.reserve(config.n_records);
  const int width = std::max<int>(6, static_cast<int>(std::to_string(config.n_records).size()));
  for (std::size_t i = 0; i < config.n_records; ++i) {
    Rng rng = Rng::derive(config.seed, 0x7265636f7264ULL, i);
    const Label label = labels[i];
    std::array<bool, kModalityCount> informative{};
    for (Modality m : kAllModalities) {
      informative[static_cast<std::size_t>(m)] = rng.bernoulli(gen.strength(m));
    }
    auto inf = [&](Modality m) { return informative[static_cast<std::size_t>(m)]; };

    VideoRecord record;
    record.id = "vid" + padded(i, width);
    record.channel_id = "ch" + padded(rng.index(config.n_channels), 3);
    const std::vector<std::string> title = gen.title_words(rng, label, inf(Modality::title));
    record.title = decorate_title(rng, title);
    record.tags = gen.tags(rng, label, inf(Modality::tags));
    record.transcript = gen.transcript(rng, label, inf(Modality::audio_transcript), title);
    record.comments = gen.comments(rng, label, inf(Modality::comments));
    record.stats = gen.stats(rng, label, inf(Modality::statistics));
    record.thumbnail_path = "thumbs/" + record.id + ".ppm";
    record.label = label;
    corpus.thumbnails.emplace(*record.thumbnail_path, gen.thumbnail(rng, label, inf(Modality::thumbnail)));
    corpus.records.push_back(std::move(record));
  }
  return corpus;
}

ThumbnailResolver SyntheticCorpus::resolver() const {
  return [this](const std::string& path) -> ThumbnailImage {
    auto it = thumbnails.find(path);
    if (it == thumbnails.end()) throw PpmError(PpmErrorKind::io, "no synthetic thumbnail '" + path + "'");
    return it->second;
  };
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& jsonl_path) {
  const std::filesystem::path dir = jsonl_path.has_parent_path() ? jsonl_path.parent_path() : ".";
  std::filesystem::create_directories(dir);
  write_jsonl(jsonl_path, corpus.records);
  for (const auto& [path, image] : corpus.thumbnails) {
    const std::filesystem::path target = dir / path;
    std::filesystem::create_directories(target.parent_path());
    write_ppm(target, image);
  }
}

}  // namespace baitradar
