#include "baitradar/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "baitradar/checkpoint.hpp"
#include "baitradar/corpus.hpp"
#include "baitradar/diagnostics.hpp"
#include "baitradar/error.hpp"
#include "baitradar/metrics.hpp"
#include "baitradar/training.hpp"

namespace baitradar {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

ThumbnailResolver resolver_for(const fs::path& jsonl) { return file_thumbnail_resolver(jsonl.parent_path()); }

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

// Optional values stay unset unless given on the command line, so they can
// be layered over a config file.
struct TrainFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> regime;
  std::optional<std::string> modalities;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> vocab_max_size;
  std::optional<std::size_t> vocab_min_freq;
  std::optional<std::size_t> fusion_dim;
  std::optional<double> lr;
  std::optional<double> loss_threshold;
  std::optional<double> keep_prob;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> split_seed;
  bool channel_disjoint = false;
};

CLI::Option* add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--config", f.config_path, "JSON training config; flags override it");
  app->add_option("--regime", f.regime, "individual | head_only | finetune | scratch");
  app->add_option("--modalities", f.modalities, "Modality subset, e.g. title+tags or all");
  app->add_option("--batch-size", f.batch_size);
  app->add_option("--max-epochs", f.max_epochs);
  app->add_option("--patience", f.patience);
  app->add_option("--lr", f.lr);
  app->add_option("--loss-threshold", f.loss_threshold);
  app->add_option("--keep-prob", f.keep_prob, "Per-modality keep probability during training");
  app->add_option("--vocab-max-size", f.vocab_max_size);
  app->add_option("--vocab-min-freq", f.vocab_min_freq);
  app->add_option("--fusion-dim", f.fusion_dim);
  app->add_option("--split-seed", f.split_seed, "Seed for the train/validation/test split (default: --seed)");
  app->add_flag("--channel-disjoint", f.channel_disjoint, "Keep every channel inside one partition");
  return app->add_option("--seed", f.seed);
}

TrainConfig resolve_config(const TrainFlags& f) {
  TrainConfig config;
  if (f.config_path) config = TrainConfig::from_json(read_json_file(*f.config_path), config);
  json overlay = json::object();
  if (f.regime) overlay["regime"] = *f.regime;
  if (f.modalities) overlay["subset"] = *f.modalities;
  if (f.batch_size) overlay["batch_size"] = *f.batch_size;
  if (f.max_epochs) overlay["max_epochs"] = *f.max_epochs;
  if (f.patience) overlay["patience"] = *f.patience;
  if (f.lr) overlay["lr"] = *f.lr;
  if (f.loss_threshold) overlay["loss_threshold"] = *f.loss_threshold;
  if (f.keep_prob) overlay["modality_keep_prob"] = *f.keep_prob;
  if (f.vocab_max_size) overlay["vocab_max_size"] = *f.vocab_max_size;
  if (f.vocab_min_freq) overlay["vocab_min_freq"] = *f.vocab_min_freq;
  if (f.fusion_dim) overlay["encoders"]["fusion_dim"] = *f.fusion_dim;
  if (f.seed) overlay["seed"] = *f.seed;
  return TrainConfig::from_json(overlay, config);
}

DatasetSplit split_for(const std::vector<VideoRecord>& records, const TrainFlags& f, const TrainConfig& config) {
  return split_dataset(records, f.split_seed.value_or(config.seed), f.channel_disjoint);
}

ordered_json mask_json(const ModalityMask& mask) {
  ordered_json names = ordered_json::array();
  for (const std::string& n : mask.names()) names.push_back(n);
  return names;
}

ordered_json prediction_json(const std::string& id, const Prediction& p) {
  ordered_json j;
  j["id"] = id;
  j["probability"] = p.probability;
  j["label"] = std::string(label_name(p.label));
  j["modalities_used"] = mask_json(p.mask_used);
  return j;
}

// --- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  SyntheticConfig config;
  std::optional<double> signal;
  std::optional<std::string> signals;
  std::string out;
};

int run_gen_data(const GenDataArgs& a, std::ostream& out) {
  SyntheticConfig config = a.config;
  if (a.signal) config.signal_strengths.fill(*a.signal);
  if (a.signals) {
    for (const std::string& item : split_list(*a.signals, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw UsageError("expected modality=strength, got '" + item + "'");
      const Modality m = parse_modality(item.substr(0, eq));
      try {
        config.signal_strengths[static_cast<std::size_t>(m)] = std::stod(item.substr(eq + 1));
      } catch (const std::logic_error&) {
        throw UsageError("bad strength in '" + item + "'");
      }
    }
  }
  config.validate();
  const SyntheticCorpus corpus = generate_synthetic(config);
  write_corpus(corpus, a.out);
  std::size_t clickbait = 0;
  for (const VideoRecord& r : corpus.records) clickbait += r.label == Label::clickbait;
  ordered_json summary;
  summary["records"] = corpus.records.size();
  summary["clickbait"] = clickbait;
  summary["out"] = a.out;
  out << summary.dump() << '\n';
  return kExitOk;
}

// --- build-vocab ------------------------------------------------------------

struct VocabArgs {
  std::string in;
  std::string out;
  std::size_t max_size = 10000;
  std::size_t min_freq = 2;
  std::optional<std::uint64_t> split_seed;
  bool channel_disjoint = false;
};

int run_build_vocab(const VocabArgs& a, std::ostream& out) {
  std::vector<VideoRecord> records = load_jsonl(a.in);
  if (a.split_seed) records = select_records(records, split_dataset(records, *a.split_seed, a.channel_disjoint).train);
  const Vocabulary vocab = build_vocab(collect_texts(records, TextLimits{}), a.max_size, a.min_freq);
  write_text(a.out, vocab.serialize());
  ordered_json summary;
  summary["records"] = records.size();
  summary["vocab_size"] = vocab.size();
  summary["out"] = a.out;
  out << summary.dump() << '\n';
  return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  TrainFlags flags;
  std::string in;
  std::string out;
  std::optional<std::string> report;
  std::vector<std::string> init;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  const TrainConfig config = resolve_config(a.flags);
  const std::vector<VideoRecord> records = load_jsonl(a.in);
  const DatasetSplit split = split_for(records, a.flags, config);

  std::optional<Checkpoint> init;
  if (!a.init.empty()) {
    std::vector<Checkpoint> parts;
    for (const std::string& path : a.init) parts.push_back(load_checkpoint(path));
    init = parts.size() == 1 ? std::move(parts.front()) : merge_encoders(parts);
  }
  const TrainResult result = train(records, split, config, resolver_for(a.in), init ? &*init : nullptr);
  save_checkpoint(result.checkpoint, a.out);
  if (a.report) write_text(*a.report, result.report.to_jsonl());

  ordered_json summary;
  summary["checkpoint"] = a.out;
  summary["regime"] = std::string(regime_name(config.regime));
  summary["modalities"] = mask_json(config.subset);
  summary["stop_reason"] = std::string(stop_reason_name(result.report.stop_reason));
  summary["epochs_run"] = result.report.epochs_run;
  summary["best_epoch"] = result.report.best_epoch;
  summary["best_validation_accuracy"] = result.report.best_validation_accuracy;
  summary["wall_seconds"] = result.report.wall_seconds;
  out << summary.dump() << '\n';
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string in;
  std::optional<std::string> modalities;
  std::optional<std::uint64_t> split_seed;
  bool channel_disjoint = false;
  std::optional<std::string> predictions;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint checkpoint = load_checkpoint(a.model);
  std::vector<VideoRecord> records = load_jsonl(a.in);
  if (a.split_seed) records = select_records(records, split_dataset(records, *a.split_seed, a.channel_disjoint).test);
  const ModalityMask subset = a.modalities ? ModalityMask::parse(*a.modalities) : checkpoint.model.subset();
  const Evaluation eval =
      evaluate(checkpoint.model, records, subset, resolver_for(a.in), EvaluateOptions{true, true});

  if (a.predictions) {
    std::string lines;
    for (const RecordPrediction& p : eval.predictions) lines += prediction_json(p.id, p.prediction).dump() + '\n';
    write_text(*a.predictions, lines);
  }
  ordered_json summary;
  summary["records"] = eval.confusion.total();
  summary["modalities"] = mask_json(subset);
  summary["accuracy"] = eval.accuracy;
  summary["tp"] = eval.confusion.tp;
  summary["tn"] = eval.confusion.tn;
  summary["fp"] = eval.confusion.fp;
  summary["fn"] = eval.confusion.fn;
  summary["mean_latency_seconds"] = eval.mean_latency_seconds;
  summary["max_latency_seconds"] = eval.max_latency_seconds;
  out << summary.dump() << '\n';
  return kExitOk;
}

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  TrainFlags flags;
  std::string in;
  std::string out_dir;
  std::optional<std::string> combinations;
  bool parallel = false;
};

int run_sweep(const SweepArgs& a, std::ostream& out) {
  SweepConfig config;
  config.base = resolve_config(a.flags);
  if (a.combinations) {
    config.combinations.clear();
    for (const std::string& c : split_list(*a.combinations, ';')) config.combinations.push_back(ModalityMask::parse(c));
  }
  const fs::path dir = a.out_dir;
  config.checkpoint_dir = dir / "checkpoints";
  config.parallel = a.parallel;
  config.validate();

  const std::vector<VideoRecord> records = load_jsonl(a.in);
  const DatasetSplit split = split_for(records, a.flags, config.base);
  const SweepResult result = sweep_combinations(records, split, config, resolver_for(a.in));
  write_text(dir / "sweep.csv", result.to_csv());
  write_text(dir / "sweep.json", result.to_json().dump(2) + '\n');
  write_text(dir / "sweep.dat", result.to_gnuplot());
  out << result.to_csv();
  return kExitOk;
}

// --- predict ----------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::optional<std::string> in;
  std::optional<std::string> modalities;
  std::string id = "cli";
  std::optional<std::string> title;
  std::optional<std::string> tags;
  std::vector<std::string> comments;
  std::optional<std::string> transcript;
  std::optional<std::string> thumbnail;
  std::optional<std::uint64_t> views, likes, dislikes, comment_count, duration_s;
};

VideoRecord record_from_flags(const PredictArgs& a) {
  VideoRecord r;
  r.id = a.id;
  r.title = a.title;
  if (a.tags) r.tags = split_list(*a.tags, ',');
  if (!a.comments.empty()) r.comments = a.comments;
  r.transcript = a.transcript;
  r.thumbnail_path = a.thumbnail;
  if (a.views || a.likes || a.dislikes || a.comment_count || a.duration_s) {
    r.stats = StatsFeatures{a.views.value_or(0), a.likes.value_or(0), a.dislikes.value_or(0),
                            a.comment_count.value_or(0), a.duration_s.value_or(0)};
  }
  return r;
}

int run_predict(const PredictArgs& a, std::ostream& out) {
  std::vector<VideoRecord> records;
  ThumbnailResolver resolver;
  if (a.in) {
    records = load_jsonl(*a.in);
    resolver = resolver_for(*a.in);
  } else {
    VideoRecord r = record_from_flags(a);
    if (r.available().empty()) throw UsageError("predict needs --in or at least one modality flag");
    records.push_back(std::move(r));
    resolver = file_thumbnail_resolver(fs::path{});
  }
  const Checkpoint checkpoint = load_checkpoint(a.model);
  const ModalityMask subset = a.modalities ? ModalityMask::parse(*a.modalities) : checkpoint.model.subset();
  for (const VideoRecord& r : records) {
    out << prediction_json(r.id, checkpoint.model.predict(r, subset, resolver)).dump() << '\n';
  }
  return kExitOk;
}

// --- grad-check -------------------------------------------------------------

int run_grad_check(const GradCheckSuiteOptions& options, std::ostream& out) {
  bool all_passed = true;
  for (const NamedGradCheck& check : run_grad_check_suite(options)) {
    const bool passed = check.report.passed(kGradCheckTolerance);
    all_passed = all_passed && passed;
    ordered_json line;
    line["check"] = check.name;
    line["max_rel_error"] = check.report.max_rel_error();
    line["tolerance"] = kGradCheckTolerance;
    line["floor"] = check.floor;
    line["passed"] = passed;
    out << line.dump() << '\n';
  }
  return all_passed ? kExitOk : kExitGradCheck;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal clickbait detector: data generation, training, evaluation and inference", "baitradar"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Write a seeded synthetic corpus with PPM thumbnails");
  gen_cmd->add_option("--n", gen.config.n_records, "Number of records")->capture_default_str();
  gen_cmd->add_option("--ratio", gen.config.clickbait_ratio, "Clickbait fraction")->capture_default_str();
  gen_cmd->add_option("--seed", gen.config.seed)->capture_default_str();
  gen_cmd->add_option("--signal", gen.signal, "Signal strength applied to every modality");
  gen_cmd->add_option("--signals", gen.signals, "Per-modality strengths, e.g. title=1,tags=0.5");
  gen_cmd->add_option("--channels", gen.config.n_channels)->capture_default_str();
  gen_cmd->add_option("--pool", gen.config.general_pool_size, "General vocabulary pool size")->capture_default_str();
  gen_cmd->add_option("--thumbnail-size", gen.config.thumbnail_size)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output JSONL; thumbnails go beside it")->required();

  VocabArgs vocab;
  CLI::App* vocab_cmd = app.add_subcommand("build-vocab", "Build the shared text vocabulary");
  vocab_cmd->add_option("--in", vocab.in)->required();
  vocab_cmd->add_option("--out", vocab.out)->required();
  vocab_cmd->add_option("--max-size", vocab.max_size)->capture_default_str();
  vocab_cmd->add_option("--min-freq", vocab.min_freq)->capture_default_str();
  vocab_cmd->add_option("--split-seed", vocab.split_seed, "Use only the training part of this split");
  vocab_cmd->add_flag("--channel-disjoint", vocab.channel_disjoint);

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model on the training part of a split");
  train_cmd->add_option("--in", tr.in, "Corpus JSONL")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--report", tr.report, "Per-epoch JSONL report");
  train_cmd->add_option("--init", tr.init, "Pretrained checkpoint(s) for head_only or finetune");
  add_train_flags(train_cmd, tr.flags);

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on labeled records");
  eval_cmd->add_option("--model", ev.model)->required();
  eval_cmd->add_option("--in", ev.in)->required();
  eval_cmd->add_option("--modalities", ev.modalities, "Inference mask (default: the model's subset)");
  eval_cmd->add_option("--split-seed", ev.split_seed, "Evaluate only the test part of this split");
  eval_cmd->add_flag("--channel-disjoint", ev.channel_disjoint);
  eval_cmd->add_option("--predictions", ev.predictions, "Write per-record predictions as JSONL");

  SweepArgs sw;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Train and score each title-anchored modality combination");
  sweep_cmd->add_option("--in", sw.in)->required();
  sweep_cmd->add_option("--out-dir", sw.out_dir)->required();
  sweep_cmd->add_option("--combinations", sw.combinations, "Semicolon-separated sets, e.g. 'title;title+tags'");
  sweep_cmd->add_flag("--parallel", sw.parallel);
  add_train_flags(sweep_cmd, sw.flags)->required();

  PredictArgs pr;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Classify records from a JSONL file or from flags");
  predict_cmd->add_option("--model", pr.model)->required();
  predict_cmd->add_option("--in", pr.in);
  predict_cmd->add_option("--modalities", pr.modalities);
  predict_cmd->add_option("--id", pr.id)->capture_default_str();
  predict_cmd->add_option("--title", pr.title);
  predict_cmd->add_option("--tags", pr.tags, "Comma-separated");
  predict_cmd->add_option("--comment", pr.comments, "Repeatable");
  predict_cmd->add_option("--transcript", pr.transcript);
  predict_cmd->add_option("--thumbnail", pr.thumbnail, "PPM path");
  predict_cmd->add_option("--views", pr.views);
  predict_cmd->add_option("--likes", pr.likes);
  predict_cmd->add_option("--dislikes", pr.dislikes);
  predict_cmd->add_option("--comment-count", pr.comment_count);
  predict_cmd->add_option("--duration", pr.duration_s);

  GradCheckSuiteOptions gc;
  CLI::App* grad_cmd = app.add_subcommand("grad-check", "Compare analytic and numerical gradients");
  grad_cmd->add_option("--seed", gc.seed)->capture_default_str();
  grad_cmd->add_flag("--corrupt-dense", gc.corrupt_dense, "Deliberately break one gradient")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == gen_cmd) return run_gen_data(gen, out);
    if (active == vocab_cmd) return run_build_vocab(vocab, out);
    if (active == train_cmd) return run_train(tr, out);
    if (active == eval_cmd) return run_eval(ev, out);
    if (active == sweep_cmd) return run_sweep(sw, out);
    if (active == predict_cmd) return run_predict(pr, out);
    return run_grad_check(gc, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace baitradar
