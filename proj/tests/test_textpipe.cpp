#include <doctest.h>

#include <algorithm>

#include "baitradar/rng.hpp"
#include "baitradar/textpipe.hpp"

using namespace baitradar;

using Tokens = std::vector<std::string>;

namespace {

std::string join(const Tokens& tokens) {
  std::string out;
  for (const std::string& t : tokens) out += (out.empty() ? "" : " ") + t;
  return out;
}

std::string random_text(Rng& rng) {
  static const std::string alphabet = "abcXYZ019 ,.!?-'\t\n\xc3\xa9";
  std::string s;
  const auto n = rng.uniform_int(0, 40);
  for (std::int64_t i = 0; i < n; ++i) s += alphabet[rng.index(alphabet.size())];
  return s;
}

}  // namespace

TEST_CASE("tokenize examples") {
  CHECK(tokenize("Mind BLOWN!!") == Tokens{"mind", "blown"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Top-10 tricks, 2020") == Tokens{"top", "10", "tricks", "2020"});
  CHECK(tokenize("  \t\n ").empty());
  CHECK(tokenize("caf\xc3\xa9 ol\xc3\xa9!") == Tokens{"caf\xc3\xa9", "ol\xc3\xa9"});
}

TEST_CASE("tokenize is idempotent under re-joining") {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const Tokens once = tokenize(random_text(rng));
    CHECK(tokenize(join(once)) == once);
  }
}

TEST_CASE("build_vocab ranking and thresholds") {
  const Vocabulary v = build_vocab({"a a b", "b c"}, 4, 1);
  CHECK(v.size() == 4);
  CHECK(v.token_at(0) == "<pad>");
  CHECK(v.token_at(1) == "<unk>");
  CHECK(v.index_of("a") == 2);
  CHECK(v.index_of("b") == 3);
  CHECK_FALSE(v.contains("c"));

  const Vocabulary frequent = build_vocab({"a a b", "b c"}, 10, 2);
  CHECK(frequent.size() == 4);
  CHECK_FALSE(frequent.contains("c"));

  const Vocabulary empty = build_vocab({}, 10, 1);
  CHECK(empty.size() == 2);
  CHECK(empty == Vocabulary());
}

TEST_CASE("vocabulary is independent of text order") {
  std::vector<std::string> texts = {"the cat sat", "on the mat", "a cat and a hat", "zebra", "the end"};
  const Vocabulary reference = build_vocab(texts, 100, 1);
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    rng.shuffle(std::span<std::string>(texts));
    CHECK(build_vocab(texts, 100, 1) == reference);
  }
}

TEST_CASE("vocabulary serialization round trip") {
  const Vocabulary v = build_vocab({"one two two three three three"}, 10, 1);
  const std::string text = v.serialize();
  CHECK(text.rfind("<pad>\t0\n<unk>\t1\nthree\t2\n", 0) == 0);
  CHECK(Vocabulary::parse(text) == v);
  CHECK_THROWS(Vocabulary::parse("<pad>\t0\nfoo\t5\n"));
}

TEST_CASE("encode pads, truncates and maps unknowns") {
  const Vocabulary v = build_vocab({"mind blown mind blown"}, 10, 1);
  const TokenSequence s = encode({"mind", "blown"}, v, 4);
  CHECK(s.ids == std::vector<std::size_t>{v.index_of("mind"), v.index_of("blown"), 0, 0});
  CHECK(s.true_length == 2);
  CHECK(encode({"mind", "nope"}, v, 3).ids[1] == Vocabulary::kUnk);

  Tokens ten;
  for (int i = 0; i < 10; ++i) ten.push_back(i % 2 ? "mind" : "blown");
  const TokenSequence cut = encode(ten, v, 4);
  CHECK(cut.true_length == 4);
  CHECK(cut.ids.size() == 4);
  CHECK(cut.ids[0] == v.index_of("blown"));
}

TEST_CASE("encode never exceeds the vocabulary") {
  Rng rng(5);
  const Vocabulary v = build_vocab({"a b c d e f g"}, 5, 1);
  for (int i = 0; i < 200; ++i) {
    const TokenSequence s = encode(tokenize(random_text(rng)), v, 8);
    CHECK(s.ids.size() == 8);
    for (std::size_t t = 0; t < s.ids.size(); ++t) {
      CHECK(s.ids[t] < v.size());
      if (t >= s.true_length) CHECK(s.ids[t] == Vocabulary::kPad);
    }
  }
}

TEST_CASE("modality text assembly") {
  VideoRecord r;
  r.id = "x";
  r.title = "Hello";
  r.tags = std::vector<std::string>{"one", "two words"};
  r.comments = std::vector<std::string>{"c1", "c2", "c3"};
  TextLimits limits;
  limits.max_comments = 2;
  CHECK(modality_text(r, Modality::tags, limits) == "one two words");
  CHECK(modality_text(r, Modality::comments, limits) == "c1 c2");
  CHECK(modality_text(r, Modality::title, limits) == "Hello");
  CHECK_FALSE(modality_text(r, Modality::audio_transcript, limits).has_value());
  CHECK(collect_texts({r}, limits).size() == 3);
  CHECK(TextLimits{}.max_len(Modality::title) == 16);
  CHECK(TextLimits{}.max_len(Modality::tags) == 32);
  CHECK(TextLimits{}.max_len(Modality::comments) == 128);
  CHECK(TextLimits{}.max_len(Modality::audio_transcript) == 256);
}
