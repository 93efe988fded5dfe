#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "flowmon/broker/core.hpp"
#include "flowmon/broker/wire.hpp"

namespace support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("flowmon-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Session sink that keeps every frame the broker sends.
class RecordingSink final : public flowmon::broker::SessionSink {
 public:
  void send_line(const std::string& line) override {
    std::lock_guard lock(mu_);
    frames_.push_back(flowmon::broker::decode(line));
  }
  void close() override { closed_ = true; }

  std::vector<flowmon::broker::Frame> take() {
    std::lock_guard lock(mu_);
    return std::exchange(frames_, {});
  }
  bool closed() const { return closed_; }

 private:
  std::mutex mu_;
  std::vector<flowmon::broker::Frame> frames_;
  std::atomic<bool> closed_{false};
};

inline std::vector<flowmon::broker::Frame> of_type(const std::vector<flowmon::broker::Frame>& frames,
                                                   flowmon::broker::FrameType type) {
  std::vector<flowmon::broker::Frame> out;
  for (const auto& f : frames)
    if (f.type == type) out.push_back(f);
  return out;
}

}  // namespace support
