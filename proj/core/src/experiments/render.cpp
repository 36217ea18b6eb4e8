#include <fstream>

#include <fmt/format.h>

#include "ferkit/experiments.hpp"
#include "ferkit/image_io.hpp"

namespace ferkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slug(const std::string& row, const std::string& col) {
  std::string s = row + "__" + col;
  for (auto& ch : s) {
    const bool keep = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_' ||
                      ch == '-';
    if (!keep) ch = '_';
  }
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

const ResultCell* ResultsTable::find(const std::string& row, const std::string& col) const {
  for (const auto& c : cells) {
    if (c.row == row && c.col == col) return &c;
  }
  return nullptr;
}

std::size_t ResultsTable::failed() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.ok ? 0 : 1;
  return n;
}

json to_json(const ResultsTable& t) {
  json cells = json::array();
  for (const auto& c : t.cells) {
    json j = {{"row", c.row}, {"col", c.col}, {"ok", c.ok}};
    if (!c.ok) {
      j["error"] = c.error;
    } else {
      j["accuracy"] = c.accuracy;
      j["confusion"] = to_json(c.confusion);
      j["report"] = to_json(report(c.confusion));
      j["provenance"] = {{"run_id", c.run_id},
                         {"checkpoint", c.checkpoint},
                         {"train_fingerprint", c.train_fingerprint},
                         {"test_fingerprint", c.test_fingerprint},
                         {"seed", c.seed},
                         {"best_epoch", c.best_epoch},
                         {"val_accuracy", c.val_accuracy}};
    }
    cells.push_back(std::move(j));
  }
  return {{"title", t.title}, {"rows", t.rows}, {"cols", t.cols}, {"cells", cells}};
}

ResultsTable results_from_json(const json& j) {
  ResultsTable t;
  t.title = j.at("title").get<std::string>();
  t.rows = j.at("rows").get<std::vector<std::string>>();
  t.cols = j.at("cols").get<std::vector<std::string>>();
  for (const auto& cj : j.at("cells")) {
    ResultCell c;
    c.row = cj.at("row").get<std::string>();
    c.col = cj.at("col").get<std::string>();
    c.ok = cj.at("ok").get<bool>();
    if (!c.ok) {
      c.error = cj.value("error", "");
    } else {
      c.confusion = confusion_from_json(cj.at("confusion"));
      c.accuracy = cj.at("accuracy").get<double>();
      const auto& p = cj.at("provenance");
      c.run_id = p.at("run_id").get<std::string>();
      c.checkpoint = p.at("checkpoint").get<std::string>();
      c.train_fingerprint = p.at("train_fingerprint").get<std::string>();
      c.test_fingerprint = p.at("test_fingerprint").get<std::string>();
      c.seed = p.at("seed").get<std::uint64_t>();
      c.best_epoch = p.at("best_epoch").get<int>();
      c.val_accuracy = p.at("val_accuracy").get<double>();
    }
    t.cells.push_back(std::move(c));
  }
  return t;
}

std::optional<RenderFormat> parse_render_format(std::string_view s) noexcept {
  if (s == "text") return RenderFormat::Text;
  if (s == "json") return RenderFormat::Json;
  if (s == "csv") return RenderFormat::Csv;
  if (s == "heatmap") return RenderFormat::Heatmap;
  if (s == "all") return RenderFormat::All;
  return std::nullopt;
}

std::string render_text(const ResultsTable& t) {
  std::size_t w0 = 5;
  for (const auto& r : t.rows) w0 = std::max(w0, r.size());
  std::vector<std::size_t> w;
  for (const auto& c : t.cols) w.push_back(std::max<std::size_t>(c.size(), 7));

  std::string out = t.title + "\n\n" + fmt::format("{:<{}}", "", w0);
  for (std::size_t c = 0; c < t.cols.size(); ++c) out += fmt::format("  {:>{}}", t.cols[c], w[c]);
  out += '\n';
  for (const auto& r : t.rows) {
    out += fmt::format("{:<{}}", r, w0);
    for (std::size_t c = 0; c < t.cols.size(); ++c) {
      const auto* cell = t.find(r, t.cols[c]);
      const std::string v = !cell ? "-" : cell->ok ? fmt::format("{:.2f}", 100.0 * cell->accuracy) : "ERROR";
      out += fmt::format("  {:>{}}", v, w[c]);
    }
    out += '\n';
  }
  out += "\nvalues are test accuracy in percent\n";

  for (const auto& cell : t.cells) {
    out += fmt::format("\n== {} x {} ==\n", cell.row, cell.col);
    if (!cell.ok) {
      out += "error: " + cell.error + "\n";
      continue;
    }
    out += fmt::format("run {}  checkpoint {}  best epoch {}  val acc {:.4f}  seed {}\n", cell.run_id,
                       cell.checkpoint, cell.best_epoch, cell.val_accuracy, cell.seed);
    out += fmt::format("train manifest {}\ntest manifest  {}\n\n", cell.train_fingerprint, cell.test_fingerprint);
    out += render_report_text(report(cell.confusion)) + "\n" + render_confusion_text(cell.confusion);
  }
  return out;
}

std::string render_csv(const ResultsTable& t) {
  std::string out = "train";
  for (const auto& c : t.cols) out += "," + c;
  out += '\n';
  for (const auto& r : t.rows) {
    out += r;
    for (const auto& c : t.cols) {
      const auto* cell = t.find(r, c);
      out += "," + (!cell ? std::string() : cell->ok ? fmt::format("{:.4f}", cell->accuracy) : std::string("error"));
    }
    out += '\n';
  }
  return out;
}

std::vector<fs::path> render(const ResultsTable& table, RenderFormat format, const fs::path& out_dir) {
  if (table.cells.empty()) throw std::invalid_argument("render: empty results table");
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const bool all = format == RenderFormat::All;
  if (all || format == RenderFormat::Text) {
    write_file(out_dir / "results.txt", render_text(table));
    written.push_back(out_dir / "results.txt");
  }
  if (all || format == RenderFormat::Json) {
    write_file(out_dir / "results.json", to_json(table).dump(2) + "\n");
    written.push_back(out_dir / "results.json");
  }
  if (all || format == RenderFormat::Csv) {
    write_file(out_dir / "results.csv", render_csv(table));
    written.push_back(out_dir / "results.csv");
  }
  if (all || format == RenderFormat::Heatmap) {
    fs::create_directories(out_dir / "heatmaps");
    for (const auto& cell : table.cells) {
      if (!cell.ok) continue;
      const auto path = out_dir / "heatmaps" / (slug(cell.row, cell.col) + ".png");
      write_png(path, confusion_heatmap(cell.confusion));
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace ferkit
