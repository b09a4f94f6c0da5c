#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "facereid/engine.hpp"
#include "facereid/log.hpp"
#include "facereid/scenario.hpp"

namespace facereid {

// Serves frames from memory.
class VectorSource final : public FrameSource {
 public:
  VectorSource(std::vector<Frame> frames, std::string descriptor, SourceInfo info = {});

  std::optional<Frame> next() override;
  std::string descriptor() const override { return descriptor_; }
  SourceInfo info() const override { return info_; }

 private:
  std::vector<Frame> frames_;
  std::size_t pos_ = 0;
  std::string descriptor_;
  SourceInfo info_;
};

// Streams a synthetic scenario. Ground truth is recorded on the side and is
// only reachable through this concrete type.
class ScenarioSource final : public FrameSource {
 public:
  explicit ScenarioSource(ScenarioScript script);

  std::optional<Frame> next() override;
  std::string descriptor() const override;
  SourceInfo info() const override;

  // Truth for every frame delivered so far, keyed by frame index.
  const std::map<FrameIndex, std::vector<DetectionTruth>>& ground_truth() const {
    return truth_;
  }

 private:
  ScenarioSimulator sim_;
  std::map<FrameIndex, std::vector<DetectionTruth>> truth_;
};

std::string scenario_descriptor(const ScenarioScript& script);
SourceInfo scenario_info(const ScenarioScript& script);

// Reconstructs the detection/embedding stream recorded in an analysis log.
// The log must carry embeddings (analyze --embed-in-log).
class ReplaySource final : public FrameSource {
 public:
  explicit ReplaySource(const std::filesystem::path& log_path);
  explicit ReplaySource(const ParsedLog& log);

  std::optional<Frame> next() override;
  std::string descriptor() const override { return descriptor_; }
  SourceInfo info() const override { return info_; }

  const HeaderRecord& header() const { return header_; }

 private:
  void build(const ParsedLog& log);

  HeaderRecord header_;
  std::vector<Frame> frames_;
  std::size_t pos_ = 0;
  std::string descriptor_;
  SourceInfo info_;
};

// Face detector over a decoded image. Model-backed implementations plug in
// here; they must return boxes, scores and 5-point landmarks.
class DetectionProvider {
 public:
  virtual ~DetectionProvider() = default;
  virtual std::vector<FaceDetection> detect(const cv::Mat& image,
                                            const std::filesystem::path& image_path,
                                            FrameIndex frame) = 0;
  virtual std::string descriptor() const = 0;
};

// Image files in a directory, ordered by the numeric value of their stem
// (then by name). Frame index is the position in that listing, so indices
// stay tied to filenames; unreadable files are skipped with a warning.
class FrameDirSource final : public FrameSource {
 public:
  FrameDirSource(const std::filesystem::path& directory, DetectionProvider& detector);

  std::optional<Frame> next() override;
  std::string descriptor() const override;
  SourceInfo info() const override;
  std::vector<std::string> warnings() const override { return warnings_; }

 private:
  std::filesystem::path directory_;
  DetectionProvider& detector_;
  std::vector<std::filesystem::path> files_;
  std::size_t pos_ = 0;
  std::vector<std::string> warnings_;
  SourceInfo info_;
};

bool is_image_file(const std::filesystem::path& p);

// Image files of `directory` in frame order (see FrameDirSource).
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& directory);

// Reads precomputed faces from a JSON sidecar next to each image
// (`<stem>.faces.json`): {"faces": [{"box": [...], "score": s,
// "landmarks": [[x,y] x5], "embedding": [...]}]}. A missing sidecar means no
// faces. Serves as both detector and embedder, so a frame directory can be
// analyzed without bundling any model.
class SidecarProvider final : public DetectionProvider, public EmbeddingProvider {
 public:
  std::vector<FaceDetection> detect(const cv::Mat& image, const std::filesystem::path& image_path,
                                    FrameIndex frame) override;
  FaceEmbedding embed(const Frame& frame, std::size_t detection) override;
  std::string descriptor() const override { return "sidecar"; }

  static std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

 private:
  std::filesystem::path cached_image_;
  std::vector<std::optional<FaceEmbedding>> cached_;
};

}  // namespace facereid
