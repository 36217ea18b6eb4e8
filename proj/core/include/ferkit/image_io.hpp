#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ferkit/image.hpp"

namespace ferkit {

/// Decodes any format OpenCV understands. Colour images come back as RGB,
/// grayscale as one channel. Throws std::runtime_error when unreadable.
Image read_image(const std::filesystem::path& path);

/// Lossless PNG. Output bytes depend only on the pixels.
std::vector<std::uint8_t> encode_png(const Image& img);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace ferkit
