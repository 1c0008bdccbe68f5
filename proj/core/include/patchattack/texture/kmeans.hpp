#pragma once

#include <random>
#include <vector>

#include "patchattack/texture/gram.hpp"

namespace patchattack::texture {

struct KMeansConfig {
  int k = 30;
  int restarts = 10;
  int max_iters = 100;
};

struct KMeansResult {
  std::vector<GramEmbedding> centroids;
  std::vector<double> cluster_inertia;
  double inertia = 0.0;
};

/// k-means++ seeding with `restarts` runs; the lowest total inertia wins.
/// Centroids are returned sorted by (cluster inertia, original index).
/// Throws InsufficientSamples when fewer than k embeddings are given.
KMeansResult cluster_category(const std::vector<GramEmbedding>& embeddings, const KMeansConfig& cfg,
                              std::mt19937_64& rng);

}  // namespace patchattack::texture
