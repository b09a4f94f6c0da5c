#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "facereid/engine.hpp"
#include "facereid/scenario.hpp"

namespace facereid::testing {

// Cosine distance recomputed from raw (unnormalized) vectors: 1 - a.b / (|a| |b|).
inline double oracle_cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(1.0L - dot / (std::sqrt(na) * std::sqrt(nb)));
}

// IoU by counting unit pixels of integer-aligned boxes.
inline double oracle_iou_grid(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2,
                              int by2) {
  const int lo_x = std::min(ax1, bx1), hi_x = std::max(ax2, bx2);
  const int lo_y = std::min(ay1, by1), hi_y = std::max(ay2, by2);
  long inter = 0, uni = 0;
  for (int y = lo_y; y < hi_y; ++y) {
    for (int x = lo_x; x < hi_x; ++x) {
      const bool in_a = x >= ax1 && x < ax2 && y >= ay1 && y < ay2;
      const bool in_b = x >= bx1 && x < bx2 && y >= by1 && y < by2;
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::vector<double> random_raw(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

inline FaceEmbedding unit(std::initializer_list<double> raw) {
  std::vector<double> v(raw);
  return FaceEmbedding::from_raw(v);
}

inline FaceEmbedding axis(std::size_t dim, std::size_t k, double sign = 1.0) {
  std::vector<double> v(dim, 0.0);
  v[k] = sign;
  return FaceEmbedding::from_raw(v);
}

inline FaceDetection det(double x1, double y1, double x2, double y2, double score,
                         FrameIndex frame) {
  return FaceDetection{BoundingBox(x1, y1, x2, y2), score, std::nullopt, frame};
}

inline Frame frame_of(FrameIndex index, std::vector<FaceDetection> dets,
                      std::vector<FaceEmbedding> embs) {
  Frame f;
  f.index = index;
  for (auto& d : dets) d.frame_index = index;
  f.detections = std::move(dets);
  for (auto& e : embs) f.embeddings.emplace_back(std::move(e));
  return f;
}

// Persons enter one after another at distinct, non-overlapping positions.
inline ScenarioScript staggered_script(int persons, std::int64_t frames, std::uint64_t seed,
                                       std::int64_t dim = 512) {
  ScenarioScript s;
  s.frame_count = frames;
  s.seed = seed;
  s.embedding_dim = dim;
  for (int i = 0; i < persons; ++i) {
    PersonTrack p;
    p.true_id = i;
    p.enter_frame = std::min<std::int64_t>(i * 40, frames - 1);
    p.exit_frame = frames;
    const double x = 60.0 + 300.0 * (i % 4);
    const double y = 80.0 + 300.0 * (i / 4);
    p.trajectory = Trajectory{BoundingBox(x, y, x + 120, y + 150), 0.1, 0.05, 0.5};
    s.persons.push_back(p);
  }
  return s;
}

// Noise tuned so ablated configurations fragment identities: heavy
// occlusions with scores straddling sigma_h, plus random false positives.
inline ScenarioScript noisy_four_person_script(std::uint64_t seed = 2025,
                                              std::int64_t frames = 600) {
  auto s = staggered_script(4, frames, seed);
  s.noise.embedding_noise_sigma = 0.8;
  s.noise.occlusion_prob = 0.03;
  s.noise.occlusion_sigma = 4.0;
  s.noise.occluded_score = {0.45, 0.85};
  s.noise.miss_prob = 0.02;
  s.noise.false_positive_rate = 0.03;
  s.noise.false_positive_score = {0.4, 0.8};
  s.noise.score = {0.75, 0.99};
  return s;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("facereid_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace facereid::testing
