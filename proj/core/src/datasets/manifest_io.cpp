#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ferkit/datasets.hpp"
#include "ferkit/hashing.hpp"
#include "ferkit/image_io.hpp"

namespace fs = std::filesystem;

namespace ferkit {

namespace {

constexpr std::string_view kMagic = "#ferkit-manifest";
constexpr std::string_view kColumns = "# source,source_key,variant,label_index,split,relative_pixel_path";

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string header_line(const ManifestInfo& info) {
  std::ostringstream os;
  os << kMagic << " v1 toolkit=" << info.toolkit_version << " luma=" << shortest(info.luma.r) << ','
     << shortest(info.luma.g) << ',' << shortest(info.luma.b) << " resize=" << info.resize_method
     << " seed=" << (info.seed ? std::to_string(*info.seed) : std::string("none"));
  return os.str();
}

ManifestInfo parse_header(const std::string& line, const fs::path& path) {
  std::istringstream is(line);
  std::string magic, version;
  is >> magic >> version;
  if (magic != kMagic || version != "v1") {
    throw std::runtime_error("not a ferkit manifest (bad header): " + path.string());
  }
  ManifestInfo info;
  std::string kv;
  while (is >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (key == "toolkit") {
      info.toolkit_version = value;
    } else if (key == "resize") {
      info.resize_method = value;
    } else if (key == "seed") {
      if (value != "none") info.seed = std::stoull(value);
    } else if (key == "luma") {
      double w[3];
      std::size_t pos = 0;
      for (double& x : w) {
        const auto comma = value.find(',', pos);
        x = std::stod(value.substr(pos, comma - pos));
        pos = comma + 1;
      }
      info.luma = {w[0], w[1], w[2]};
    }
  }
  return info;
}

}  // namespace

std::string pixel_digest(const Image& img) { return sha256_hex(img.pixels()); }

void save_manifest(const DatasetManifest& manifest, const fs::path& manifest_path) {
  const fs::path root = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();
  fs::create_directories(root);

  std::ostringstream body;
  body << header_line(manifest.info()) << '\n' << kColumns << '\n';
  for (const auto& s : manifest.samples()) {
    if (s.source_key.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("source key contains a separator: " + s.source_key);
    }
    const std::string digest = pixel_digest(s.pixels);
    const fs::path rel = fs::path("pixels") / digest.substr(0, 2) / (digest + ".png");
    const fs::path abs = root / rel;
    if (!fs::exists(abs)) {
      fs::create_directories(abs.parent_path());
      write_png(abs, s.pixels);
    }
    body << dataset_name(s.source) << ',' << s.source_key << ',' << variant_name(s.variant) << ','
         << index_of(s.label) << ',' << split_name(s.split) << ',' << rel.generic_string() << '\n';
  }

  // Write-then-rename so a crashed run never leaves a truncated manifest.
  const fs::path tmp = manifest_path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write manifest " + tmp.string());
    const std::string text = body.str();
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, manifest_path);
}

DatasetManifest load_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
  const fs::path root = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty manifest " + manifest_path.string());
  ManifestInfo info = parse_header(line, manifest_path);

  std::vector<ImageSample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      std::string field = line.substr(start, comma - start);
      while (!field.empty() && field.front() == ' ') field.erase(field.begin());
      f.push_back(std::move(field));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const auto where = manifest_path.string() + ":" + std::to_string(lineno);
    if (f.size() != 6) throw std::runtime_error(where + ": expected 6 fields");
    ImageSample s;
    const auto source = parse_dataset(f[0]);
    const auto variant = parse_variant(f[2]);
    const auto split = parse_split(f[4]);
    long label_index = -1;
    std::from_chars(f[3].data(), f[3].data() + f[3].size(), label_index);
    const auto label = emotion_from_index(label_index);
    if (!source || !variant || !split || !label) throw std::runtime_error(where + ": malformed record");
    s.source = *source;
    s.source_key = f[1];
    s.variant = *variant;
    s.split = *split;
    s.label = *label;
    s.pixels = read_image(root / f[5]);
    if (!s.pixels.is_canonical()) throw std::runtime_error(where + ": pixel file is not 48x48 grayscale");
    samples.push_back(std::move(s));
  }
  return DatasetManifest(std::move(samples), std::move(info));
}

}  // namespace ferkit
