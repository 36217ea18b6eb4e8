#include "ferkit/image_io.hpp"

#include <fstream>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace ferkit {

Image read_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw std::runtime_error("cannot decode image: " + path.string());
  if (m.depth() != CV_8U) {
    throw std::runtime_error("unsupported bit depth (expected 8-bit): " + path.string());
  }
  int channels = 1;
  switch (m.channels()) {
    case 1: break;
    case 3: cv::cvtColor(m, m, cv::COLOR_BGR2RGB); channels = 3; break;
    case 4: cv::cvtColor(m, m, cv::COLOR_BGRA2RGB); channels = 3; break;
    default: throw std::runtime_error("unsupported channel count: " + path.string());
  }
  if (!m.isContinuous()) m = m.clone();
  std::vector<std::uint8_t> data(m.datastart, m.dataend);
  return Image(m.cols, m.rows, channels, std::move(data));
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  // const_cast is safe: cv::imencode only reads from the Mat.
  cv::Mat m(img.height(), img.width(), img.channels() == 1 ? CV_8UC1 : CV_8UC3,
            const_cast<std::uint8_t*>(img.pixels().data()));
  cv::Mat bgr;
  if (img.channels() == 3) {
    cv::cvtColor(m, bgr, cv::COLOR_RGB2BGR);
  } else {
    bgr = m;
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw std::runtime_error("PNG encoding failed");
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("short write to " + path.string());
}

}  // namespace ferkit
