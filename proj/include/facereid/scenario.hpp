#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facereid/engine.hpp"
#include "facereid/rng.hpp"
#include "facereid/types.hpp"

namespace facereid {

struct Trajectory {
  BoundingBox start{0, 0, 1, 1};
  double vx = 0.0;  // pixels per frame
  double vy = 0.0;
  double jitter = 0.0;  // uniform +-jitter pixel shift per frame
};

struct PersonTrack {
  std::int64_t true_id = 0;
  FrameIndex enter_frame = 0;
  FrameIndex exit_frame = 0;  // exclusive
  Trajectory trajectory;
};

struct ScoreRange {
  double low = 0.0;
  double high = 1.0;
  bool operator==(const ScoreRange&) const = default;
};

struct NoiseModel {
  // Norm-relative isotropic perturbation: each component gets N(0, s^2 / d),
  // so the noise vector has expected norm ~s before renormalization.
  double embedding_noise_sigma = 0.0;
  double occlusion_prob = 0.0;
  double occlusion_sigma = 3.0;
  ScoreRange occluded_score{0.3, 0.7};
  double miss_prob = 0.0;
  double false_positive_rate = 0.0;  // expected spurious detections per frame
  ScoreRange false_positive_score{0.3, 0.8};
  ScoreRange score{0.8, 0.99};
};

struct ScenarioScript {
  std::int64_t frame_count = 0;
  std::int64_t frame_width = 1280;
  std::int64_t frame_height = 720;
  double fps = 25.0;
  std::int64_t embedding_dim = 512;
  std::uint64_t seed = 0;
  NoiseModel noise;
  std::vector<PersonTrack> persons;
};

// Throws InvalidArgument describing the first violated constraint.
void validate_script(const ScenarioScript& script);

ScenarioScript parse_scenario(std::string_view text);
ScenarioScript load_scenario_file(const std::filesystem::path& path);
std::string format_scenario(const ScenarioScript& script);

// Per-detection ground truth, kept out of band from the engine-facing Frame.
struct DetectionTruth {
  std::int64_t true_id = -1;  // -1 for false positives
  bool occluded = false;
};

struct SimulatedFrame {
  Frame frame;
  std::vector<DetectionTruth> truth;  // parallel to frame.detections
};

// Deterministic synthetic scene generator. Each person and the false-positive
// process draw from their own sub-stream of the script seed.
class ScenarioSimulator {
 public:
  explicit ScenarioSimulator(ScenarioScript script);

  std::optional<SimulatedFrame> next();

  const ScenarioScript& script() const { return script_; }
  const FaceEmbedding& base_embedding(std::size_t person) const { return bases_.at(person); }

 private:
  FaceEmbedding perturb(const FaceEmbedding& base, double sigma, Rng& rng) const;
  FaceEmbedding random_embedding(Rng& rng) const;

  ScenarioScript script_;
  std::vector<FaceEmbedding> bases_;
  std::vector<Rng> person_rngs_;
  Rng fp_rng_;
  FrameIndex next_frame_ = 0;
};

std::vector<SimulatedFrame> simulate(const ScenarioScript& script);

// Landmark layout used for synthetic faces, proportional to the box.
Landmarks synthetic_landmarks(const BoundingBox& box);

}  // namespace facereid
