#include "facereid/sources.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>

#include <json.hpp>

namespace facereid {

namespace fs = std::filesystem;

VectorSource::VectorSource(std::vector<Frame> frames, std::string descriptor, SourceInfo info)
    : frames_(std::move(frames)), descriptor_(std::move(descriptor)), info_(info) {}

std::optional<Frame> VectorSource::next() {
  if (pos_ >= frames_.size()) return std::nullopt;
  return frames_[pos_++];
}

std::string scenario_descriptor(const ScenarioScript& script) {
  return fmt::format("synthetic:seed={}:frames={}:persons={}", script.seed, script.frame_count,
                     script.persons.size());
}

SourceInfo scenario_info(const ScenarioScript& script) {
  return {script.fps, script.frame_width, script.frame_height};
}

ScenarioSource::ScenarioSource(ScenarioScript script) : sim_(std::move(script)) {}

std::optional<Frame> ScenarioSource::next() {
  auto sim = sim_.next();
  if (!sim) return std::nullopt;
  truth_.emplace(sim->frame.index, std::move(sim->truth));
  return std::move(sim->frame);
}

std::string ScenarioSource::descriptor() const { return scenario_descriptor(sim_.script()); }

SourceInfo ScenarioSource::info() const { return scenario_info(sim_.script()); }

ReplaySource::ReplaySource(const fs::path& log_path) { build(read_log(log_path)); }

ReplaySource::ReplaySource(const ParsedLog& log) { build(log); }

void ReplaySource::build(const ParsedLog& log) {
  header_ = log.header();
  if (!header_.embeddings_included) {
    throw LogError(log.lines.front(),
                   "replay requires embeddings; re-run analyze with --embed-in-log");
  }
  descriptor_ = header_.provider;
  info_ = {header_.fps, header_.frame_width, header_.frame_height};

  struct Pending {
    std::int64_t det;
    FaceDetection detection;
    std::optional<FaceEmbedding> embedding;
  };
  std::vector<Pending> pending;
  std::optional<FrameIndex> current;

  auto flush = [&] {
    if (!current) return;
    std::sort(pending.begin(), pending.end(),
              [](const Pending& a, const Pending& b) { return a.det < b.det; });
    Frame f;
    f.index = *current;
    for (auto& p : pending) {
      f.detections.push_back(std::move(p.detection));
      f.embeddings.push_back(std::move(p.embedding));
    }
    frames_.push_back(std::move(f));
    pending.clear();
  };

  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& rec = log.records[i];
    if (const auto* fr = std::get_if<FrameRecord>(&rec)) {
      flush();
      current = fr->frame;
    } else if (const auto* obs = std::get_if<ObsRecord>(&rec)) {
      std::optional<FaceEmbedding> emb;
      if (obs->embedding) {
        try {
          emb = FaceEmbedding::from_normalized(*obs->embedding);
        } catch (const InvalidArgument& e) {
          throw LogError(log.lines[i], e.what());
        }
      } else if (obs->outcome != Outcome::RejectedLowScore) {
        throw LogError(log.lines[i], "observation has no embedding; replay requires embeddings");
      }
      pending.push_back({obs->detection_index,
                         FaceDetection{obs->box, obs->score, obs->landmarks, obs->frame},
                         std::move(emb)});
    }
  }
  flush();
}

std::optional<Frame> ReplaySource::next() {
  if (pos_ >= frames_.size()) return std::nullopt;
  return frames_[pos_++];
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  static const char* kExts[] = {".png", ".jpg", ".jpeg", ".bmp", ".tif",
                                ".tiff", ".webp", ".pgm", ".ppm", ".pnm"};
  return std::any_of(std::begin(kExts), std::end(kExts), [&](const char* e) { return ext == e; });
}

std::vector<fs::path> list_frame_files(const fs::path& directory) {
  if (!fs::is_directory(directory)) {
    throw InvalidArgument(fmt::format("'{}' is not a directory", directory.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  auto numeric_stem = [](const fs::path& p) -> std::optional<std::uint64_t> {
    const auto stem = p.stem().string();
    if (stem.empty() || stem.size() > 18 ||
        !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
      return std::nullopt;
    }
    return std::stoull(stem);
  };
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    const auto na = numeric_stem(a);
    const auto nb = numeric_stem(b);
    if (na && nb && *na != *nb) return *na < *nb;
    if (na.has_value() != nb.has_value()) return na.has_value();
    return a.filename() < b.filename();
  });
  return files;
}

FrameDirSource::FrameDirSource(const fs::path& directory, DetectionProvider& detector)
    : directory_(directory), detector_(detector), files_(list_frame_files(directory)) {
  for (const auto& f : files_) {
    const cv::Mat probe = cv::imread(f.string(), cv::IMREAD_UNCHANGED);
    if (!probe.empty()) {
      info_.frame_width = probe.cols;
      info_.frame_height = probe.rows;
      break;
    }
  }
}

std::optional<Frame> FrameDirSource::next() {
  while (pos_ < files_.size()) {
    const auto index = static_cast<FrameIndex>(pos_);
    const auto& path = files_[pos_++];
    const cv::Mat image = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (image.empty()) {
      warnings_.push_back(fmt::format("skipped unreadable frame '{}'", path.filename().string()));
      continue;
    }
    Frame frame;
    frame.index = index;
    frame.image_path = path;
    try {
      frame.detections = detector_.detect(image, path, index);
    } catch (const ProviderError& e) {
      warnings_.push_back(e.what());
    }
    for (auto& d : frame.detections) d.frame_index = index;
    return frame;
  }
  return std::nullopt;
}

std::string FrameDirSource::descriptor() const {
  return fmt::format("frames:{}:{}", directory_.filename().string(), detector_.descriptor());
}

SourceInfo FrameDirSource::info() const { return info_; }

fs::path SidecarProvider::sidecar_path(const fs::path& image_path) {
  auto p = image_path;
  p.replace_extension(".faces.json");
  return p;
}

std::vector<FaceDetection> SidecarProvider::detect(const cv::Mat&, const fs::path& image_path,
                                                   FrameIndex frame) {
  cached_image_ = image_path;
  cached_.clear();
  const auto path = sidecar_path(image_path);
  std::vector<FaceDetection> out;
  if (!fs::exists(path)) return out;

  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
    for (const auto& face : j.at("faces")) {
      const auto& b = face.at("box");
      FaceDetection det{BoundingBox(b.at(0).get<double>(), b.at(1).get<double>(),
                                    b.at(2).get<double>(), b.at(3).get<double>()),
                        face.at("score").get<double>(), std::nullopt, frame};
      if (face.contains("landmarks")) {
        Landmarks lm;
        const auto& pts = face.at("landmarks");
        if (pts.size() != 5) throw InvalidArgument("landmarks must hold 5 points");
        for (std::size_t i = 0; i < 5; ++i) {
          lm[i] = {pts.at(i).at(0).get<double>(), pts.at(i).at(1).get<double>()};
        }
        det.landmarks = lm;
      }
      validate_detection(det);
      out.push_back(det);
      if (face.contains("embedding")) {
        cached_.emplace_back(
            FaceEmbedding::from_raw(face.at("embedding").get<std::vector<double>>()));
      } else {
        cached_.emplace_back(std::nullopt);
      }
    }
  } catch (const std::exception& e) {
    throw ProviderError(fmt::format("bad sidecar '{}': {}", path.string(), e.what()));
  }
  return out;
}

FaceEmbedding SidecarProvider::embed(const Frame& frame, std::size_t detection) {
  if (frame.image_path != cached_image_ || detection >= cached_.size() || !cached_[detection]) {
    throw ProviderError(fmt::format("no sidecar embedding for frame {} detection {}", frame.index,
                                    detection));
  }
  return *cached_[detection];
}

}  // namespace facereid
