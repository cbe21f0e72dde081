#include "baitradar/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace baitradar {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'B', 'R', 'D', 'R'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void block(std::string_view s) {
    u64(s.size());
    bytes(s);
  }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  void need(std::size_t n, const std::string& context) const {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(CheckpointErrorKind::truncated, "checkpoint truncated while reading " + context);
    }
  }
  std::string_view bytes(std::size_t n, const std::string& context) {
    need(n, context);
    std::string_view out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8(const std::string& context) { return static_cast<std::uint8_t>(bytes(1, context)[0]); }
  std::uint32_t u32(const std::string& context) {
    const std::string_view b = bytes(4, context);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const std::string& context) {
    const std::string_view b = bytes(8, context);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  double f64(const std::string& context) { return std::bit_cast<double>(u64(context)); }
  std::string_view block(const std::string& context) {
    const std::uint64_t n = u64(context + " length");
    need(n, context);
    return bytes(static_cast<std::size_t>(n), context);
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  const BaitRadarModel& model = checkpoint.model;
  Writer w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);

  json meta;
  meta["fusion_dim"] = model.spec().encoders.fusion_dim;
  meta["subset"] = model.subset().names();
  meta["head"] = model.spec().head == HeadKind::shared ? "shared" : "individual";
  meta["encoders"] = model.spec().encoders.to_json();
  meta["config"] = checkpoint.config;
  w.block(meta.dump());
  w.block(model.vocab().serialize());

  const StatsNormalizer& norm = model.normalizer();
  w.u8(norm.fitted() ? 1 : 0);
  for (double v : norm.mean()) w.f64(v);
  for (double v : norm.stddev()) w.f64(v);

  const ParameterSet& params = model.params();
  const std::vector<std::string> names = params.sorted_names();
  w.u32(static_cast<std::uint32_t>(names.size()));
  for (const std::string& name : names) {
    const Tensor& t = params.value(name);
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (double v : t.values()) w.f64(v);
  }
  w.u64(fnv1a(w.str()));
  return std::move(w.str());
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::string_view(bytes).substr(0, 4) != std::string_view(kMagic, 4)) {
    throw CheckpointError(CheckpointErrorKind::bad_magic, "not a checkpoint file (bad magic)");
  }
  r.bytes(4, "magic");
  const std::uint32_t version = r.u32("format version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrorKind::unsupported_version,
                          "unsupported checkpoint version " + std::to_string(version) + " (expected " +
                              std::to_string(kCheckpointVersion) + ")");
  }

  json meta;
  try {
    meta = json::parse(r.block("metadata"));
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointErrorKind::malformed, std::string("checkpoint metadata: ") + e.what());
  }
  const std::string_view vocab_text = r.block("vocabulary");

  const bool fitted = r.u8("normalization") != 0;
  std::array<double, StatsFeatures::kFeatureCount> mean{}, stddev{};
  for (double& v : mean) v = r.f64("normalization");
  for (double& v : stddev) v = r.f64("normalization");

  ParameterSet params;
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "tensor #" + std::to_string(i);
    const std::uint32_t name_len = r.u32(where + " name");
    const std::string name(r.bytes(name_len, where + " name"));
    const std::string context = "tensor '" + name + "'";
    const std::uint32_t rank = r.u32(context);
    std::vector<std::size_t> shape(rank);
    for (std::size_t& d : shape) d = static_cast<std::size_t>(r.u64(context));
    const std::size_t n = shape_product(shape);
    r.need(n * 8, context);
    std::vector<double> values(n);
    for (double& v : values) v = r.f64(context);
    try {
      params.add(name, Tensor(std::move(shape), std::move(values)));
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(CheckpointErrorKind::malformed, e.what());
    }
  }
  const std::size_t payload_end = r.pos();
  const std::uint64_t stored = r.u64("checksum");
  if (stored != fnv1a(std::string_view(bytes).substr(0, payload_end))) {
    throw CheckpointError(CheckpointErrorKind::checksum, "checkpoint checksum mismatch");
  }
  if (r.remaining() != 0) throw CheckpointError(CheckpointErrorKind::malformed, "trailing bytes after checkpoint");

  try {
    ModelSpec spec;
    spec.encoders = EncoderConfig::from_json(meta.at("encoders"));
    spec.subset = ModalityMask();
    for (const auto& name : meta.at("subset")) spec.subset.set(parse_modality(name.get<std::string>()));
    spec.head = meta.at("head").get<std::string>() == "individual" ? HeadKind::individual : HeadKind::shared;
    Vocabulary vocab = Vocabulary::parse(vocab_text);
    StatsNormalizer normalizer = fitted ? StatsNormalizer(mean, stddev) : StatsNormalizer();
    BaitRadarModel model = BaitRadarModel::assemble(spec, std::move(vocab), normalizer, std::move(params));
    return Checkpoint{std::move(model), meta.value("config", json::object())};
  } catch (const MissingParametersError& e) {
    throw CheckpointError(CheckpointErrorKind::missing_tensor, e.what());
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(CheckpointErrorKind::malformed, std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(CheckpointErrorKind::io, "cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrorKind::io, "write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrorKind::io, "cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace baitradar
