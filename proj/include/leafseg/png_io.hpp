#pragma once

#include <filesystem>

#include "leafseg/image.hpp"

namespace leafseg {

/// Decodes any PNG colour type to 8-bit RGB. 16-bit samples are scaled down,
/// grey is replicated to three channels and alpha is dropped.
RgbImage load_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG; output bytes depend only on the pixels.
void save_png(const std::filesystem::path& path, const RgbImage& img);

/// Ground-truth style label PNG: black is background, every distinct
/// non-black colour a leaf, numbered 1.. in first-occurrence scan order.
LabelImage load_label_png(const std::filesystem::path& path);
LabelImage labels_from_colors(const RgbImage& img);

/// Inverse of `labels_from_colors` up to renumbering.
void save_label_png(const std::filesystem::path& path, const LabelImage& labels);

}  // namespace leafseg
