#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sys/wait.h>
#include <unistd.h>

#include "ferkit/image_io.hpp"
#include "ferkit/preprocess.hpp"

namespace fs = std::filesystem;

namespace ferkit {

namespace {

std::vector<SidecarEntry> read_sidecar(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open golden detections " + path.string());
  std::vector<SidecarEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
    entries.push_back(parse_sidecar_line(line));
  }
  return entries;
}

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

}  // namespace

FixtureDetector::FixtureDetector(const fs::path& golden_path) : FixtureDetector(golden_path, Options{}) {}

FixtureDetector::FixtureDetector(const fs::path& golden_path, Options options)
    : FixtureDetector(read_sidecar(golden_path), options) {}

FixtureDetector::FixtureDetector(std::vector<SidecarEntry> golden) : FixtureDetector(std::move(golden), Options{}) {}

FixtureDetector::FixtureDetector(std::vector<SidecarEntry> golden, Options options) : options_(options) {
  for (auto& e : golden) golden_.insert_or_assign(std::move(e.key), std::move(e.detection));
}

std::optional<FaceDetection> FixtureDetector::detect(const DetectionKey& key, const Image& image) {
  if (options_.reject_blank) {
    const auto px = image.pixels();
    if (std::all_of(px.begin(), px.end(), [](std::uint8_t v) { return v == 0; })) return std::nullopt;
  }
  const auto it = golden_.find(key);
  if (it == golden_.end()) {
    throw DetectorError("fixture detector has no golden entry for " + std::string(dataset_name(key.source)) +
                        "/" + key.source_key);
  }
  return it->second;
}

ExternalDetector::ExternalDetector(std::string command) : command_(std::move(command)) {
  if (command_.empty()) throw std::invalid_argument("external detector command is empty");
}

std::optional<FaceDetection> ExternalDetector::detect(const DetectionKey& key, const Image& image) {
  const fs::path tmp = fs::temp_directory_path() /
                       ("ferkit-detect-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++) + ".png");
  try {
    write_png(tmp, image);
  } catch (const std::exception& e) {
    throw DetectorError(std::string("external detector: ") + e.what());
  }
  const std::string cmd = command_ + " " + shell_quote(dataset_name(key.source)) + " " +
                          shell_quote(key.source_key) + " " + shell_quote(tmp.string());

  std::string output;
  int status = -1;
  {
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(::popen(cmd.c_str(), "r"), ::pclose);
    if (!pipe) {
      fs::remove(tmp);
      throw DetectorError("external detector: cannot start '" + command_ + "'");
    }
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) output.append(buf.data(), n);
    status = ::pclose(pipe.release());
  }
  std::error_code ec;
  fs::remove(tmp, ec);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw DetectorError("external detector exited abnormally for " + key.source_key);
  }

  std::size_t pos = 0;
  while (pos < output.size()) {
    auto nl = output.find('\n', pos);
    std::string line = output.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? output.size() : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return parse_sidecar_line(line).detection;
    } catch (const std::invalid_argument& e) {
      throw DetectorError(std::string("external detector produced a malformed line: ") + e.what());
    }
  }
  throw DetectorError("external detector produced no output for " + key.source_key);
}

std::unique_ptr<FaceDetector> make_detector(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("detector must be fixture:PATH or external:CMD");
  }
  const auto kind = spec.substr(0, colon);
  const std::string arg(spec.substr(colon + 1));
  if (kind == "fixture") return std::make_unique<FixtureDetector>(fs::path(arg));
  if (kind == "external") return std::make_unique<ExternalDetector>(arg);
  throw std::invalid_argument("unknown detector kind '" + std::string(kind) + "'");
}

}  // namespace ferkit
