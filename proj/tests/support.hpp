#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ferkit/datasets.hpp"
#include "ferkit/image.hpp"

namespace ferkit::testkit {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ferkit") {
    static std::mt19937_64 gen{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

/// Deterministic 48x48 test pattern.
inline Image pattern_image(int variant) {
  Image img(kSampleSide, kSampleSide);
  for (int y = 0; y < kSampleSide; ++y) {
    for (int x = 0; x < kSampleSide; ++x) img.at(x, y) = static_cast<std::uint8_t>((x * 5 + y * 3 + variant * 17) % 256);
  }
  return img;
}

inline ImageSample make_sample(const std::string& key, Emotion label, Split split = Split::Unassigned,
                               DatasetId source = DatasetId::FerPlus, int variant = 0) {
  ImageSample s;
  s.pixels = pattern_image(variant);
  s.label = label;
  s.source = source;
  s.source_key = key;
  s.split = split;
  return s;
}

}  // namespace ferkit::testkit
