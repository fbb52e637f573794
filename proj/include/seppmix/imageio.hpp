#pragma once

#include <filesystem>

#include "seppmix/types.hpp"

namespace seppmix::imageio {

// Decodes a PNG or JPEG file (sniffed by magic bytes) into a 3-channel
// image scaled to [0, 1]. Grayscale expands to RGB, alpha is dropped.
// Throws IngestError naming the file on any decode failure.
Image load_image(const std::filesystem::path& path);

// Writes an 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void save_png(const std::filesystem::path& path, const Image& image);

// Writes an 8-bit RGB JPEG (quality 95). Used by tests to exercise the
// JPEG ingestion path.
void save_jpeg(const std::filesystem::path& path, const Image& image);

} // namespace seppmix::imageio
