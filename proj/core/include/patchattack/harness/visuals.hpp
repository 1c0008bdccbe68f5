#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "patchattack/image.hpp"
#include "patchattack/texture/backbone.hpp"

namespace patchattack::harness {

enum class VisualMode {
  kGrid,       // clean | attacked
  kAttention,  // clean | attacked | attention(clean) | attention(attacked)
};

struct VisualRow {
  Image clean;
  Image adversarial;
  int true_label = 0;
  int adversarial_label = 0;
};

/// Blends a [0,1] map onto an image as a blue-to-red heat overlay.
Image attention_overlay(const Image& image, const std::vector<float>& map);

/// One row per entry. Attention mode needs a backbone.
Image compose_grid(std::span<const VisualRow> rows, VisualMode mode, const texture::BackboneExtractor* backbone);

/// One grid per (network, attack) group of a results file, written as
/// <out_dir>/<network>__<attack>_<grid|attention>.png. Returns the written files;
/// records without a stored image are skipped and empty results write nothing.
std::vector<std::filesystem::path> export_visuals(const std::filesystem::path& results_file,
                                                  const std::filesystem::path& out_dir, VisualMode mode,
                                                  const texture::BackboneExtractor* backbone = nullptr,
                                                  int max_rows = 0);

}  // namespace patchattack::harness
