#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>

#include "baitradar/corpus.hpp"
#include "baitradar/encoders.hpp"
#include "baitradar/training.hpp"

namespace test {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("baitradar_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

/// Layer sizes small enough for unit tests to train in seconds.
inline baitradar::EncoderConfig tiny_encoders() {
  baitradar::EncoderConfig c;
  c.fusion_dim = 8;
  c.embedding_dim = 6;
  c.thumbnail_size = 16;
  c.conv1_kernels = 2;
  c.conv2_kernels = 3;
  c.kernel_size = 3;
  c.stats_hidden = 6;
  c.head_hidden = 6;
  c.text.title = 8;
  c.text.tags = 16;
  c.text.comments = 24;
  c.text.transcript = 24;
  return c;
}

inline baitradar::SyntheticConfig synthetic(std::size_t n, std::uint64_t seed, double signal = 1.0) {
  baitradar::SyntheticConfig c;
  c.n_records = n;
  c.seed = seed;
  c.signal_strengths.fill(signal);
  c.thumbnail_size = 16;
  return c;
}

inline baitradar::TrainConfig quick_train(std::uint64_t seed, std::size_t epochs) {
  baitradar::TrainConfig c;
  c.seed = seed;
  c.max_epochs = epochs;
  c.encoders = tiny_encoders();
  c.adam.lr = 0.01;
  c.vocab_min_freq = 1;
  return c;
}

}  // namespace test
