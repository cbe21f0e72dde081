#include <doctest.h>

#include <sstream>

#include "baitradar/checkpoint.hpp"
#include "baitradar/cli.hpp"
#include "support.hpp"

using namespace baitradar;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "baitradar");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

/// Small corpus plus a config file with test-sized encoders.
struct Workspace {
  test::TempDir dir;
  std::string corpus = (dir / "corpus.jsonl").string();
  std::string config = (dir / "config.json").string();

  Workspace() {
    REQUIRE(run({"gen-data", "--n", "40", "--seed", "3", "--thumbnail-size", "16", "--out", corpus}).code == kExitOk);
    test::write_file(config, test::quick_train(3, 2).to_json().dump());
  }
};

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  Run r = run({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK_FALSE(r.err.empty());
  r = run({"gen-data", "--out", "x.jsonl", "--bogus"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("--bogus") != std::string::npos);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"sweep", "--in", "a.jsonl", "--out-dir", "d"}).code == kExitUsage);
  CHECK(run({"train", "--in", "a.jsonl", "--out", "m.ckpt", "--regime", "sideways"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("gen-data is deterministic") {
  test::TempDir dir;
  const std::string a = (dir / "a" / "c.jsonl").string(), b = (dir / "b" / "c.jsonl").string();
  CHECK(run({"gen-data", "--n", "12", "--seed", "5", "--thumbnail-size", "16", "--out", a}).code == kExitOk);
  CHECK(run({"gen-data", "--n", "12", "--seed", "5", "--thumbnail-size", "16", "--out", b}).code == kExitOk);
  CHECK(test::read_file(a) == test::read_file(b));
  CHECK(test::read_file(a).size() > 0);
  const auto records = load_jsonl(a);
  CHECK(records.size() == 12);
  CHECK(run({"gen-data", "--n", "12", "--ratio", "1.5", "--out", a}).code != kExitOk);
}

TEST_CASE("data errors exit with code 2") {
  test::TempDir dir;
  test::write_file(dir / "bad.jsonl", "{\"id\": \"a\"\n");
  CHECK(run({"eval", "--model", (dir / "none.ckpt").string(), "--in", (dir / "bad.jsonl").string()}).code ==
        kExitData);
  CHECK(run({"train", "--in", (dir / "bad.jsonl").string(), "--out", (dir / "m.ckpt").string()}).code == kExitData);
  CHECK(run({"train", "--in", (dir / "absent.jsonl").string(), "--out", (dir / "m.ckpt").string()}).code ==
        kExitData);
}

TEST_CASE("train, eval and predict end to end") {
  Workspace ws;
  const std::string model = (ws.dir / "m.ckpt").string(), report = (ws.dir / "r.jsonl").string();
  Run r = run({"train", "--in", ws.corpus, "--out", model, "--report", report, "--config", ws.config,
               "--max-epochs", "1", "--patience", "3"});
  REQUIRE(r.code == kExitOk);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["epochs_run"] == 1);
  CHECK(std::filesystem::exists(report));

  SUBCASE("flags override the config file, which overrides defaults") {
    const Checkpoint ckpt = load_checkpoint(model);
    CHECK(ckpt.config["max_epochs"] == 1);
    CHECK(ckpt.config["patience"] == 3);
    CHECK(ckpt.config["lr"] == 0.01);
    CHECK(ckpt.model.spec().encoders.fusion_dim == 8);
  }

  SUBCASE("eval") {
    const std::string preds = (ws.dir / "p.jsonl").string();
    r = run({"eval", "--model", model, "--in", ws.corpus, "--predictions", preds});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["records"] == 40);
    CHECK(j["tp"].get<int>() + j["tn"].get<int>() + j["fp"].get<int>() + j["fn"].get<int>() == 40);
    const std::string lines = test::read_file(preds);
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 40);
    r = run({"eval", "--model", model, "--in", ws.corpus, "--split-seed", "3"});
    CHECK(nlohmann::json::parse(r.out)["records"] == 4);
  }

  SUBCASE("predict from flags omits absent modalities") {
    r = run({"predict", "--model", model, "--id", "v1", "--title", "you will not believe this", "--tags", "shock,wow",
             "--views", "100", "--likes", "3", "--dislikes", "1", "--comment-count", "2", "--duration", "60"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["id"] == "v1");
    CHECK(j["modalities_used"] == nlohmann::json{"title", "tags", "statistics"});
    CHECK(r.out.find("{\"id\":\"v1\",\"probability\":") == 0);
    const double p = j["probability"];
    CHECK(j["label"] == (p >= 0.5 ? "clickbait" : "non_clickbait"));

    r = run({"predict", "--model", model, "--title", "hello", "--modalities", "title"});
    CHECK(nlohmann::json::parse(r.out)["modalities_used"] == nlohmann::json{"title"});
    r = run({"predict", "--model", model, "--tags", "a"});
    CHECK(nlohmann::json::parse(r.out)["modalities_used"] == nlohmann::json{"tags"});
    CHECK(run({"predict", "--model", model, "--id", "empty"}).code == kExitUsage);
    CHECK(run({"predict", "--model", model, "--tags", "a", "--modalities", "title"}).code == kExitData);
  }

  SUBCASE("predict from a file") {
    r = run({"predict", "--model", model, "--in", ws.corpus});
    REQUIRE(r.code == kExitOk);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 40);
  }

  SUBCASE("head-only training from the checkpoint") {
    r = run({"train", "--in", ws.corpus, "--out", (ws.dir / "h.ckpt").string(), "--config", ws.config, "--regime",
             "head_only", "--init", model, "--max-epochs", "1"});
    CHECK(r.code == kExitOk);
    CHECK(run({"train", "--in", ws.corpus, "--out", (ws.dir / "h.ckpt").string(), "--regime", "head_only"}).code ==
          kExitUsage);
  }
}

TEST_CASE("build-vocab and sweep") {
  Workspace ws;
  const std::string vocab = (ws.dir / "vocab.txt").string();
  REQUIRE(run({"build-vocab", "--in", ws.corpus, "--out", vocab, "--min-freq", "1"}).code == kExitOk);
  CHECK(test::read_file(vocab).find("<pad>") != std::string::npos);

  const std::string out_dir = (ws.dir / "sweep").string();
  const Run r = run({"sweep", "--in", ws.corpus, "--out-dir", out_dir, "--config", ws.config, "--seed", "3",
                     "--max-epochs", "1", "--combinations", "title;title+tags"});
  REQUIRE(r.code == kExitOk);
  const std::string csv = test::read_file(std::filesystem::path(out_dir) / "sweep.csv");
  CHECK(csv.rfind("combination,accuracy,epochs,checkpoint\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(std::filesystem::exists(std::filesystem::path(out_dir) / "sweep.json"));
  CHECK(std::filesystem::exists(std::filesystem::path(out_dir) / "sweep.dat"));
}

TEST_CASE("grad-check exit status") {
  Run r = run({"grad-check"});
  CHECK(r.code == kExitOk);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 13);
  r = run({"grad-check", "--corrupt-dense"});
  CHECK(r.code == kExitGradCheck);
  CHECK(r.out.find("\"passed\":false") != std::string::npos);
}
