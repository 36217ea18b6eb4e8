#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "ferkit/datasets.hpp"
#include "ferkit/image_io.hpp"

namespace fs = std::filesystem;

namespace ferkit {

namespace {

constexpr int kFerPixels = kSampleSide * kSampleSide;
constexpr std::size_t kRawLabels = 10;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<RawLabel> vote_column(const std::string& header) {
  const std::string h = lower(header);
  if (h == "contempt") return RawLabel::Contempt;
  if (h == "unknown") return RawLabel::Unknown;
  if (h == "nf" || h == "not_face" || h == "notaface") return RawLabel::NotAFace;
  if (auto e = parse_emotion(h)) return to_raw(*e);
  return std::nullopt;
}

bool parse_int(std::string_view token, int& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::optional<std::string> parse_pixels(const std::string& field, std::vector<std::uint8_t>& out) {
  out.clear();
  out.reserve(kFerPixels);
  std::size_t i = 0;
  while (i < field.size()) {
    while (i < field.size() && field[i] == ' ') ++i;
    if (i >= field.size()) break;
    std::size_t j = i;
    while (j < field.size() && field[j] != ' ') ++j;
    int v = 0;
    if (!parse_int(std::string_view(field).substr(i, j - i), v) || v < 0 || v > 255) {
      return "non-integer or out-of-range pixel token '" + field.substr(i, j - i) + "'";
    }
    out.push_back(static_cast<std::uint8_t>(v));
    i = j;
  }
  if (out.size() != static_cast<std::size_t>(kFerPixels)) {
    return "expected 2304 pixel values, found " + std::to_string(out.size());
  }
  return std::nullopt;
}

bool is_image_file(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".pgm" ||
         ext == ".tif" || ext == ".tiff";
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  return entries;
}

}  // namespace

std::optional<RawLabel> majority_vote(std::span<const int> votes) {
  std::optional<RawLabel> best;
  int best_votes = 0;
  for (std::size_t i = 0; i < votes.size() && i < kRawLabels; ++i) {
    if (votes[i] > best_votes) {
      best_votes = votes[i];
      best = static_cast<RawLabel>(i);
    }
  }
  return best;
}

LoadReport load_ferplus(const fs::path& csv_path, VotePolicy policy) {
  if (policy != VotePolicy::Majority) throw std::invalid_argument("unsupported vote policy");
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open FER+ table " + csv_path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("FER+ table is empty: " + csv_path.string());
  const auto header = split_fields(line);

  std::optional<std::size_t> pixel_col;
  std::array<std::optional<std::size_t>, kRawLabels> vote_cols{};
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (lower(header[c]) == "pixels") {
      pixel_col = c;
    } else if (auto label = vote_column(header[c])) {
      vote_cols[static_cast<std::size_t>(*label)] = c;
    }
  }
  if (!pixel_col) throw std::runtime_error("FER+ table has no 'pixels' column");
  for (std::size_t l = 0; l < kNumEmotions; ++l) {
    if (!vote_cols[l]) {
      throw std::runtime_error("FER+ table lacks a vote column for " +
                               std::string(emotion_name(static_cast<Emotion>(l))));
    }
  }

  LoadReport report;
  std::vector<std::uint8_t> pixels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = "row " + std::to_string(row);
    if (fields.size() != header.size()) {
      report.issues.push_back({where, "expected " + std::to_string(header.size()) + " fields, found " +
                                          std::to_string(fields.size())});
      continue;
    }
    if (auto err = parse_pixels(fields[*pixel_col], pixels)) {
      report.issues.push_back({where, *err});
      continue;
    }
    std::array<int, kRawLabels> votes{};
    bool votes_ok = true;
    for (std::size_t l = 0; l < kRawLabels; ++l) {
      if (!vote_cols[l]) continue;
      const auto& tok = fields[*vote_cols[l]];
      if (tok.empty()) continue;
      if (!parse_int(tok, votes[l]) || votes[l] < 0) {
        report.issues.push_back({where, "bad vote count '" + tok + "'"});
        votes_ok = false;
        break;
      }
    }
    if (!votes_ok) continue;
    const auto label = majority_vote(votes);
    if (!label || !to_emotion(*label)) continue;  // contempt / unknown / not-a-face / no votes

    char key[32];
    std::snprintf(key, sizeof key, "row-%06zu", row);
    report.records.push_back(
        RawRecord{Image(kSampleSide, kSampleSide, 1, pixels), *label, DatasetId::FerPlus, key});
  }
  for (const auto& issue : report.issues) {
    spdlog::warn("FER+ {}: {}: {}", csv_path.string(), issue.location, issue.message);
  }
  return report;
}

LoadReport load_ckplus(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("CK+ root is not a directory: " + root.string());
  LoadReport report;
  for (const auto& dir : sorted_entries(root)) {
    if (!fs::is_directory(dir)) continue;
    const std::string name = dir.filename().string();
    if (lower(name) == "contempt") continue;
    const auto label = parse_emotion(name);
    if (!label) {
      spdlog::warn("CK+: skipping unknown emotion directory '{}'", name);
      report.issues.push_back({dir.string(), "unknown emotion directory"});
      continue;
    }
    for (const auto& file : sorted_entries(dir)) {
      if (!fs::is_regular_file(file) || !is_image_file(file)) continue;
      try {
        report.records.push_back(RawRecord{read_image(file), to_raw(*label), DatasetId::CkPlus,
                                           fs::relative(file, root).generic_string()});
      } catch (const std::exception& e) {
        spdlog::warn("CK+: {}", e.what());
        report.issues.push_back({file.string(), e.what()});
      }
    }
  }
  return report;
}

LoadReport load_kdef(const fs::path& root, const std::set<std::string>& pose_filter) {
  if (!fs::is_directory(root)) throw std::runtime_error("KDEF root is not a directory: " + root.string());
  LoadReport report;
  if (pose_filter.empty()) return report;

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  static const std::regex kName(R"(^([AB])([FM])(\d\d)([A-Z]{2})(S|HL|HR|FL|FR)$)", std::regex::icase);
  for (const auto& file : files) {
    std::string stem = file.stem().string();
    std::transform(stem.begin(), stem.end(), stem.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    std::smatch m;
    std::optional<Emotion> emotion;
    if (std::regex_match(stem, m, kName)) {
      const std::string code = m[4].str();
      if (code == "AF") emotion = Emotion::Fear;
      else if (code == "AN") emotion = Emotion::Angry;
      else if (code == "DI") emotion = Emotion::Disgust;
      else if (code == "HA") emotion = Emotion::Happy;
      else if (code == "NE") emotion = Emotion::Neutral;
      else if (code == "SA") emotion = Emotion::Sad;
      else if (code == "SU") emotion = Emotion::Surprise;
    }
    if (!emotion) {
      spdlog::warn("KDEF: cannot decode file name '{}'", file.filename().string());
      report.issues.push_back({file.string(), "undecodable KDEF file name"});
      continue;
    }
    if (!pose_filter.contains(m[5].str())) continue;
    try {
      report.records.push_back(RawRecord{read_image(file), to_raw(*emotion), DatasetId::Kdef,
                                         fs::relative(file, root).generic_string()});
    } catch (const std::exception& e) {
      spdlog::warn("KDEF: {}", e.what());
      report.issues.push_back({file.string(), e.what()});
    }
  }
  return report;
}

}  // namespace ferkit
