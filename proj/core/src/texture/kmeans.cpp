#include "patchattack/texture/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "patchattack/error.hpp"

namespace patchattack::texture {

namespace {

using Centroid = std::vector<double>;

double dist2(const std::vector<float>& p, const Centroid& c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = static_cast<double>(p[i]) - c[i];
    acc += d * d;
  }
  return acc;
}

Centroid to_centroid(const std::vector<float>& p) { return {p.begin(), p.end()}; }

struct Run {
  std::vector<Centroid> centroids;
  std::vector<int> assignment;
  std::vector<double> cluster_inertia;
  double inertia = 0.0;
};

std::vector<Centroid> seed_plus_plus(const std::vector<GramEmbedding>& pts, int k, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  std::vector<Centroid> centers;
  centers.push_back(to_centroid(pts[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)].values));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(pts[i].values, centers.back());
  while (static_cast<int>(centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (u < d2[i]) {
          pick = i;
          break;
        }
        u -= d2[i];
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    centers.push_back(to_centroid(pts[pick].values));
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], dist2(pts[i].values, centers.back()));
  }
  return centers;
}

Run lloyd(const std::vector<GramEmbedding>& pts, std::vector<Centroid> centers, int max_iters) {
  const std::size_t n = pts.size();
  const std::size_t k = centers.size();
  const std::size_t dim = centers.front().size();
  Run run;
  run.assignment.assign(n, -1);
  std::vector<double> best_d(n);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = dist2(pts[i].values, centers[c]);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      best_d[i] = bd;
      if (run.assignment[i] != best) {
        run.assignment[i] = best;
        changed = true;
      }
    }
    // Empty clusters take the point farthest from its own centroid.
    std::vector<std::size_t> counts(k, 0);
    for (const int a : run.assignment) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (best_d[i] > best_d[far] && counts[static_cast<std::size_t>(run.assignment[i])] > 1) far = i;
      }
      if (counts[static_cast<std::size_t>(run.assignment[far])] <= 1) continue;
      --counts[static_cast<std::size_t>(run.assignment[far])];
      run.assignment[far] = static_cast<int>(c);
      best_d[far] = 0.0;
      counts[c] = 1;
      changed = true;
    }
    std::vector<Centroid> next(k, Centroid(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = next[static_cast<std::size_t>(run.assignment[i])];
      for (std::size_t d = 0; d < dim; ++d) dst[d] += pts[i].values[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        next[c] = centers[c];
        continue;
      }
      for (auto& v : next[c]) v /= static_cast<double>(counts[c]);
    }
    centers = std::move(next);
    if (!changed && iter > 0) break;
  }
  run.cluster_inertia.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(run.assignment[i]);
    run.cluster_inertia[c] += dist2(pts[i].values, centers[c]);
  }
  run.inertia = std::accumulate(run.cluster_inertia.begin(), run.cluster_inertia.end(), 0.0);
  run.centroids = std::move(centers);
  return run;
}

}  // namespace

KMeansResult cluster_category(const std::vector<GramEmbedding>& embeddings, const KMeansConfig& cfg,
                              std::mt19937_64& rng) {
  if (cfg.k <= 0 || cfg.restarts <= 0) throw InvalidArgument("cluster_category: k and restarts must be positive");
  if (embeddings.size() < static_cast<std::size_t>(cfg.k)) {
    throw InsufficientSamples("cluster_category: " + std::to_string(embeddings.size()) + " embeddings for k=" +
                              std::to_string(cfg.k));
  }
  const std::size_t dim = embeddings.front().values.size();
  for (const auto& e : embeddings) {
    if (e.values.size() != dim) throw ShapeMismatch("cluster_category: embeddings differ in length");
  }

  Run best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    Run run = lloyd(embeddings, seed_plus_plus(embeddings, cfg.k, rng), cfg.max_iters);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(cfg.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return best.cluster_inertia[a] < best.cluster_inertia[b]; });

  KMeansResult result;
  result.inertia = best.inertia;
  for (const std::size_t c : order) {
    GramEmbedding e;
    e.tap_channels = embeddings.front().tap_channels;
    e.values.reserve(dim);
    for (const double v : best.centroids[c]) e.values.push_back(static_cast<float>(v));
    result.centroids.push_back(std::move(e));
    result.cluster_inertia.push_back(best.cluster_inertia[c]);
  }
  return result;
}

}  // namespace patchattack::texture
