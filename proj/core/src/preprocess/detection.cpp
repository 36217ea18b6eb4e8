#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ferkit/preprocess.hpp"

namespace fs = std::filesystem;

namespace ferkit {

namespace {

void append_real(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out += ',';
  out.append(buf, end);
}

double parse_real(std::string_view tok) {
  while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
  while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw std::invalid_argument("sidecar: bad number '" + std::string(tok) + "'");
  }
  return v;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_sidecar_line(const DetectionKey& key, const std::optional<FaceDetection>& det) {
  std::string line(dataset_name(key.source));
  line += ',';
  line += key.source_key;
  if (!det) {
    line += ",none";
    return line;
  }
  line += ",ok";
  append_real(line, det->box.x);
  append_real(line, det->box.y);
  append_real(line, det->box.w);
  append_real(line, det->box.h);
  append_real(line, det->confidence);
  if (det->landmarks) {
    for (const auto& p : det->landmarks->points()) {
      append_real(line, p.x);
      append_real(line, p.y);
    }
  }
  return line;
}

SidecarEntry parse_sidecar_line(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    f.push_back(strip(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() < 3) throw std::invalid_argument("sidecar: too few fields");
  const auto source = parse_dataset(f[0]);
  if (!source) throw std::invalid_argument("sidecar: unknown source '" + std::string(f[0]) + "'");
  SidecarEntry entry{{*source, std::string(f[1])}, std::nullopt};
  if (f[2] == "none") return entry;
  if (f[2] != "ok") throw std::invalid_argument("sidecar: status must be ok or none");
  if (f.size() != 8 && f.size() != 18) throw std::invalid_argument("sidecar: ok lines need 8 or 18 fields");

  FaceDetection d;
  d.box = {parse_real(f[3]), parse_real(f[4]), parse_real(f[5]), parse_real(f[6])};
  d.confidence = parse_real(f[7]);
  if (!(d.box.w > 0 && d.box.h > 0)) throw std::invalid_argument("sidecar: box must have positive size");
  if (d.confidence < 0.0 || d.confidence > 1.0) throw std::invalid_argument("sidecar: confidence outside [0,1]");
  if (f.size() == 18) {
    std::array<Point2, 5> pts;
    for (std::size_t i = 0; i < 5; ++i) pts[i] = {parse_real(f[8 + 2 * i]), parse_real(f[9 + 2 * i])};
    d.landmarks = LandmarkSet::from_points(pts);
  }
  entry.detection = d;
  return entry;
}

const std::optional<FaceDetection>* DetectionCache::find(const DetectionKey& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void DetectionCache::store(const DetectionKey& key, std::optional<FaceDetection> detection) {
  entries_.insert_or_assign(key, std::move(detection));
}

DetectionCache DetectionCache::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detection cache " + path.string());
  DetectionCache cache;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty() || strip(line).front() == '#') continue;
    try {
      auto e = parse_sidecar_line(line);
      cache.store(e.key, std::move(e.detection));
    } catch (const std::invalid_argument& ex) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return cache;
}

void DetectionCache::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write detection cache " + path.string());
  for (const auto& [key, det] : entries_) os << format_sidecar_line(key, det) << '\n';
}

std::optional<FaceDetection> detect(FaceDetector* detector, DetectionCache& cache, const ImageSample& sample) {
  const DetectionKey key = detection_key(sample);
  if (const auto* hit = cache.find(key)) return *hit;
  if (detector == nullptr) {
    throw DetectorError("no cached detection for " + sample.group_id() + " and no live detector configured");
  }
  auto result = detector->detect(key, sample.pixels);
  cache.store(key, result);
  return result;
}

}  // namespace ferkit
