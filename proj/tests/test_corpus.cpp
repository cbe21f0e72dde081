#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "baitradar/corpus.hpp"
#include "baitradar/textpipe.hpp"
#include "support.hpp"

using namespace baitradar;

namespace {

const char* kThreeRecords =
    R"({"id":"a","channel_id":"c1","title":"First video","tags":["x","y"],"comments":null,"transcript":null,"stats":null,"thumbnail":null,"label":"clickbait"}
{"id":"b","channel_id":"c1","title":"Second","stats":{"views":10,"likes":2,"dislikes":0,"comment_count":1,"duration_s":60},"label":"non_clickbait"}

{"id":"c","channel_id":"c2","transcript":"spoken words","thumbnail":"thumbs/c.ppm"}
)";

std::vector<VideoRecord> numbered_records(std::size_t n, std::size_t channels) {
  std::vector<VideoRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    VideoRecord r;
    r.id = "r" + std::to_string(1000 + i);
    r.channel_id = "ch" + std::to_string(i % channels);
    r.title = "t";
    r.label = i % 3 == 0 ? Label::clickbait : Label::non_clickbait;
    out.push_back(r);
  }
  return out;
}

std::string ppm(const std::string& header, std::size_t payload_bytes, unsigned char fill = 255) {
  return header + std::string(payload_bytes, static_cast<char>(fill));
}

// Total variation distance between the token distributions of the two labels.
double label_token_distance(const std::vector<VideoRecord>& records) {
  std::map<std::string, double> freq[2];
  double total[2] = {0, 0};
  for (const VideoRecord& r : records) {
    const int k = *r.label == Label::clickbait ? 0 : 1;
    for (Modality m : {Modality::title, Modality::tags, Modality::comments, Modality::audio_transcript}) {
      const auto text = modality_text(r, m, TextLimits{});
      if (!text) continue;
      for (const std::string& tok : tokenize(*text)) {
        freq[k][tok] += 1;
        total[k] += 1;
      }
    }
  }
  std::set<std::string> keys;
  for (auto& f : freq)
    for (auto& [t, _] : f) keys.insert(t);
  double tv = 0.0;
  for (const std::string& t : keys) tv += std::abs(freq[0][t] / total[0] - freq[1][t] / total[1]);
  return tv / 2.0;
}

}  // namespace

TEST_CASE("load_jsonl reads well-formed lines in order and skips blanks") {
  test::TempDir dir;
  test::write_file(dir / "c.jsonl", kThreeRecords);
  const auto records = load_jsonl(dir / "c.jsonl");
  REQUIRE(records.size() == 3);
  CHECK(records[0].id == "a");
  CHECK(records[1].id == "b");
  CHECK(records[2].id == "c");
  CHECK(records[0].tags == std::vector<std::string>{"x", "y"});
  CHECK_FALSE(records[0].comments.has_value());
  CHECK(records[1].stats->views == 10);
  CHECK(records[1].stats->duration_s == 60);
  CHECK_FALSE(records[2].label.has_value());
  CHECK(records[2].thumbnail_path == "thumbs/c.ppm");
}

TEST_CASE("a record with only a title is accepted") {
  const VideoRecord r = parse_record(R"({"id":"t","channel_id":"c","title":"only"})");
  CHECK(r.available() == ModalityMask::only(Modality::title));
}

TEST_CASE("malformed corpus lines are reported with their line number") {
  test::TempDir dir;
  test::write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"channel_id\":\"c\",\"title\":\"x\"}\n{\"channel_id\":\"c\",\"title\":\"y\"}\n");
  try {
    load_jsonl(dir / "bad.jsonl");
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  test::write_file(dir / "syntax.jsonl", "{\"id\":\"a\",\"title\":\"x\"}\n{not json}\n");
  CHECK_THROWS_AS(load_jsonl(dir / "syntax.jsonl"), CorpusError);
}

TEST_CASE("duplicate ids and empty records are rejected") {
  test::TempDir dir;
  test::write_file(dir / "dup.jsonl", "{\"id\":\"a\",\"channel_id\":\"c\",\"title\":\"x\"}\n{\"id\":\"a\",\"channel_id\":\"c\",\"title\":\"y\"}\n");
  CHECK_THROWS_AS(load_jsonl(dir / "dup.jsonl"), CorpusError);
  CHECK_THROWS_AS(parse_record(R"({"id":"e","channel_id":"c","title":null,"label":"clickbait"})"), CorpusError);
  CHECK_THROWS_AS(parse_record(R"({"id":"","channel_id":"c","title":"x"})"), CorpusError);
  CHECK_THROWS_AS(parse_record(R"({"id":"s","channel_id":"c","stats":{"views":-1,"likes":0,"dislikes":0,"comment_count":0,"duration_s":0}})"),
                  CorpusError);
  CHECK_THROWS_AS(parse_record(R"({"id":"l","channel_id":"c","title":"x","label":"maybe"})"), CorpusError);
}

TEST_CASE("null and omitted modalities are equivalent") {
  const VideoRecord a = parse_record(R"({"id":"a","channel_id":"c","title":"x","tags":null,"stats":null})");
  const VideoRecord b = parse_record(R"({"id":"a","channel_id":"c","title":"x"})");
  CHECK(a == b);
}

TEST_CASE("synthetic corpus survives a JSONL round trip") {
  test::TempDir dir;
  const SyntheticCorpus corpus = generate_synthetic(test::synthetic(80, 4));
  write_corpus(corpus, dir / "corpus.jsonl");
  const auto loaded = load_jsonl(dir / "corpus.jsonl");
  REQUIRE(loaded.size() == corpus.records.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) CHECK(loaded[i] == corpus.records[i]);
  const auto resolver = file_thumbnail_resolver(dir.path());
  const VideoRecord& first = loaded.front();
  CHECK(resolver(*first.thumbnail_path) == corpus.thumbnails.at(*first.thumbnail_path));
  CHECK(record_to_json(parse_record(record_to_json(first))) == record_to_json(first));
}

TEST_CASE("PPM decoding") {
  SUBCASE("2x2 all-white image") {
    const ThumbnailImage img = decode_ppm(ppm("P6\n2 2\n255\n", 12));
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.data == std::vector<std::uint8_t>(12, 255));
  }
  SUBCASE("header comments are skipped") {
    CHECK(decode_ppm(ppm("P6\n# made by hand\n2 2\n# another\n255\n", 12)) == decode_ppm(ppm("P6\n2 2\n255\n", 12)));
  }
  SUBCASE("error kinds are distinct") {
    auto kind_of = [](const std::string& bytes) {
      try {
        decode_ppm(bytes);
      } catch (const PpmError& e) {
        return e.kind();
      }
      FAIL("expected PpmError");
      return PpmErrorKind::io;
    };
    CHECK(kind_of("P3\n2 2\n255\n255 255 255\n") == PpmErrorKind::unsupported_format);
    CHECK(kind_of(ppm("P6\n2 2\n65535\n", 24)) == PpmErrorKind::bad_maxval);
    CHECK(kind_of(ppm("P6\n2 2\n255\n", 11)) == PpmErrorKind::truncated);
    CHECK(kind_of("P6\n2 x\n255\n") == PpmErrorKind::malformed_header);
    CHECK(kind_of("P6\n2") == PpmErrorKind::truncated);
    CHECK_THROWS_AS(load_ppm("/nonexistent/thumb.ppm"), PpmError);
  }
  SUBCASE("encode and decode are inverse") {
    ThumbnailImage img;
    img.width = 3;
    img.height = 2;
    for (int i = 0; i < 18; ++i) img.data.push_back(static_cast<std::uint8_t>(i * 13));
    CHECK(decode_ppm(encode_ppm(img)) == img);
  }
}

TEST_CASE("split proportions follow 81/9/10") {
  const auto records = numbered_records(1000, 50);
  const DatasetSplit split = split_dataset(records, 7, false);
  CHECK(split.train.size() == 810);
  CHECK(split.validation.size() == 90);
  CHECK(split.test.size() == 100);
  std::set<std::string> all(split.train.begin(), split.train.end());
  all.insert(split.validation.begin(), split.validation.end());
  all.insert(split.test.begin(), split.test.end());
  CHECK(all.size() == 1000);
}

TEST_CASE("split sizes stay within one record of the proportions") {
  for (std::size_t n : {10u, 11u, 37u, 99u, 101u, 333u}) {
    const DatasetSplit s = split_dataset(numbered_records(n, 5), 1, false);
    CHECK(s.train.size() + s.validation.size() + s.test.size() == n);
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.10 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.validation.size()) - 0.09 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.train.size()) - 0.81 * n) <= 1.0);
  }
}

TEST_CASE("split is deterministic, order-independent and label-blind") {
  auto records = numbered_records(200, 20);
  const DatasetSplit a = split_dataset(records, 3, false);
  CHECK(split_dataset(records, 3, false).train == a.train);
  std::reverse(records.begin(), records.end());
  const DatasetSplit reversed = split_dataset(records, 3, false);
  CHECK(reversed.train == a.train);
  CHECK(reversed.test == a.test);
  for (VideoRecord& r : records) r.label = Label::clickbait;
  const DatasetSplit relabeled = split_dataset(records, 3, false);
  CHECK(relabeled.validation == a.validation);
  CHECK(relabeled.test == a.test);
  CHECK(split_dataset(records, 4, false).test != a.test);
}

TEST_CASE("channel-disjoint split keeps channels whole") {
  const auto records = numbered_records(1000, 40);
  const DatasetSplit split = split_dataset(records, 7, true);
  std::map<std::string, std::string> channel_of;
  for (const VideoRecord& r : records) channel_of[r.id] = r.channel_id;
  std::map<std::string, std::set<int>> parts;
  const std::vector<std::string>* partitions[] = {&split.train, &split.validation, &split.test};
  for (int p = 0; p < 3; ++p)
    for (const std::string& id : *partitions[p]) parts[channel_of[id]].insert(p);
  for (const auto& [channel, where] : parts) CHECK(where.size() == 1);
  CHECK(split.train.size() + split.validation.size() + split.test.size() == 1000);
  CHECK(!split.test.empty());
  CHECK(!split.validation.empty());
}

TEST_CASE("split preconditions") {
  CHECK_THROWS_AS(split_dataset(numbered_records(9, 3), 1, false), CorpusError);
  CHECK_THROWS_AS(split_dataset(numbered_records(100, 3), 1, true), CorpusError);
  CHECK_THROWS_AS(select_records(numbered_records(10, 2), {"missing"}), CorpusError);
}

TEST_CASE("synthetic label counts follow the ratio") {
  SyntheticConfig c = test::synthetic(100, 5);
  c.clickbait_ratio = 0.6;
  const auto corpus = generate_synthetic(c);
  REQUIRE(corpus.records.size() == 100);
  const auto clickbait = std::count_if(corpus.records.begin(), corpus.records.end(),
                                       [](const VideoRecord& r) { return r.label == Label::clickbait; });
  CHECK(clickbait == 60);
}

TEST_CASE("synthetic generation is a pure function of its config") {
  test::TempDir a, b;
  write_corpus(generate_synthetic(test::synthetic(60, 9)), a / "c.jsonl");
  write_corpus(generate_synthetic(test::synthetic(60, 9)), b / "c.jsonl");
  CHECK(test::read_file(a / "c.jsonl") == test::read_file(b / "c.jsonl"));
  CHECK(test::read_file(a / "thumbs/vid000003.ppm") == test::read_file(b / "thumbs/vid000003.ppm"));
  CHECK(generate_synthetic(test::synthetic(60, 10)).records != generate_synthetic(test::synthetic(60, 9)).records);
}

TEST_CASE("zero signal makes payloads label-independent") {
  SyntheticConfig c = test::synthetic(1500, 2, 0.0);
  c.clickbait_ratio = 0.5;
  const auto silent = generate_synthetic(c);
  c.signal_strengths.fill(1.0);
  const auto loud = generate_synthetic(c);
  CHECK(label_token_distance(silent.records) < 0.05);
  CHECK(label_token_distance(loud.records) > 0.3);

  auto mean_log_views = [](const std::vector<VideoRecord>& records, Label label) {
    double sum = 0.0;
    int n = 0;
    for (const VideoRecord& r : records) {
      if (r.label != label || !r.stats) continue;
      sum += std::log1p(static_cast<double>(r.stats->views));
      ++n;
    }
    return sum / n;
  };
  CHECK(std::abs(mean_log_views(silent.records, Label::clickbait) -
                 mean_log_views(silent.records, Label::non_clickbait)) < 0.2);
  CHECK(mean_log_views(loud.records, Label::clickbait) - mean_log_views(loud.records, Label::non_clickbait) > 1.0);
}

TEST_CASE("clickbait records carry more tags on average") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto corpus = generate_synthetic(test::synthetic(200, seed));
    double tags[2] = {0, 0}, count[2] = {0, 0};
    for (const VideoRecord& r : corpus.records) {
      const int k = r.label == Label::clickbait ? 0 : 1;
      tags[k] += r.tags ? static_cast<double>(r.tags->size()) : 0.0;
      count[k] += 1;
    }
    CHECK(tags[0] / count[0] > tags[1] / count[1]);
  }
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig c;
  c.clickbait_ratio = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SyntheticConfig{};
  c.signal_strengths[2] = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SyntheticConfig{};
  c.n_records = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("bait lexicon words appear in informative clickbait titles") {
  const auto corpus = generate_synthetic(test::synthetic(50, 12));
  const std::set<std::string> bait(bait_lexicon().begin(), bait_lexicon().end());
  for (const VideoRecord& r : corpus.records) {
    if (r.label != Label::clickbait || !r.title) continue;
    const auto tokens = tokenize(*r.title);
    CHECK(std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return bait.count(t) > 0; }));
  }
}
