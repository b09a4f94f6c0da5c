#include "facereid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "facereid/config.hpp"

namespace facereid {

namespace {

constexpr std::uint64_t kFalsePositiveStream = 0;

std::uint64_t person_motion_stream(std::size_t i) { return 2 * i + 1; }
std::uint64_t person_identity_stream(std::size_t i) { return 2 * i + 2; }

void check_prob(std::string_view name, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument(fmt::format("{} must be in [0, 1], got {}", name, p));
  }
}

void check_range(std::string_view name, const ScoreRange& r) {
  check_prob(name, r.low);
  check_prob(name, r.high);
  if (r.low > r.high) throw InvalidArgument(fmt::format("{}: low exceeds high", name));
}

ScoreRange parse_range(std::string_view key, std::string_view value) {
  const auto v = parse_doubles(key, value);
  if (v.size() != 2) throw InvalidArgument(fmt::format("{}: expected 'low high'", key));
  return {v[0], v[1]};
}

// Clips to the frame; nullopt when nothing visible remains.
std::optional<BoundingBox> clip(double x1, double y1, double x2, double y2, double w, double h) {
  x1 = std::max(x1, 0.0);
  y1 = std::max(y1, 0.0);
  x2 = std::min(x2, w);
  y2 = std::min(y2, h);
  if (!(x1 < x2) || !(y1 < y2)) return std::nullopt;
  return BoundingBox(x1, y1, x2, y2);
}

}  // namespace

void validate_script(const ScenarioScript& s) {
  if (s.frame_count < 0) throw InvalidArgument("frame_count must be >= 0");
  if (s.frame_width <= 0 || s.frame_height <= 0) {
    throw InvalidArgument("frame_width and frame_height must be positive");
  }
  if (!(s.fps > 0.0)) throw InvalidArgument("fps must be positive");
  if (s.embedding_dim < 1) throw InvalidArgument("embedding_dim must be >= 1");

  const auto& n = s.noise;
  if (!(n.embedding_noise_sigma >= 0.0)) throw InvalidArgument("embedding_noise_sigma must be >= 0");
  if (!(n.occlusion_sigma >= 0.0)) throw InvalidArgument("occlusion_sigma must be >= 0");
  if (!(n.false_positive_rate >= 0.0)) throw InvalidArgument("false_positive_rate must be >= 0");
  check_prob("occlusion_prob", n.occlusion_prob);
  check_prob("miss_prob", n.miss_prob);
  check_range("score", n.score);
  check_range("occluded_score", n.occluded_score);
  check_range("false_positive_score", n.false_positive_score);

  std::set<std::int64_t> ids;
  for (const auto& p : s.persons) {
    if (p.true_id < 0) throw InvalidArgument("person true_id must be >= 0");
    if (!ids.insert(p.true_id).second) {
      throw InvalidArgument(fmt::format("duplicate person true_id {}", p.true_id));
    }
    if (!(p.enter_frame < p.exit_frame)) {
      throw InvalidArgument(fmt::format("person {}: enter_frame must be < exit_frame", p.true_id));
    }
    if (p.enter_frame < 0 || p.exit_frame > s.frame_count) {
      throw InvalidArgument(
          fmt::format("person {}: span [{}, {}) outside [0, {})", p.true_id, p.enter_frame,
                      p.exit_frame, s.frame_count));
    }
    if (!(p.trajectory.jitter >= 0.0)) {
      throw InvalidArgument(fmt::format("person {}: jitter must be >= 0", p.true_id));
    }
  }
}

ScenarioScript parse_scenario(std::string_view text) {
  ScenarioScript s;
  const auto sections = parse_kv(text);
  for (const auto& sec : sections) {
    if (sec.name.empty()) {
      if (!sec.entries.empty()) {
        throw ConfigError(sec.entries.front().line, "entry outside of any [section]");
      }
      continue;
    }
    std::optional<PersonTrack> person;
    bool has_box = false;
    if (sec.name == "person") person.emplace();
    else if (sec.name != "scenario" && sec.name != "noise") {
      throw ConfigError(sec.line, fmt::format("unknown section [{}]", sec.name));
    }

    for (const auto& e : sec.entries) {
      const std::string_view k = e.key;
      const std::string_view v = e.value;
      try {
        if (sec.name == "scenario") {
          if (k == "frame_count") s.frame_count = parse_int(k, v);
          else if (k == "frame_width") s.frame_width = parse_int(k, v);
          else if (k == "frame_height") s.frame_height = parse_int(k, v);
          else if (k == "fps") s.fps = parse_double(k, v);
          else if (k == "embedding_dim") s.embedding_dim = parse_int(k, v);
          else if (k == "seed") s.seed = parse_uint64(k, v);
          else throw InvalidArgument(fmt::format("unknown key '{}' in [scenario]", k));
        } else if (sec.name == "noise") {
          auto& n = s.noise;
          if (k == "embedding_noise_sigma") n.embedding_noise_sigma = parse_double(k, v);
          else if (k == "occlusion_prob") n.occlusion_prob = parse_double(k, v);
          else if (k == "occlusion_sigma") n.occlusion_sigma = parse_double(k, v);
          else if (k == "occluded_score") n.occluded_score = parse_range(k, v);
          else if (k == "miss_prob") n.miss_prob = parse_double(k, v);
          else if (k == "false_positive_rate") n.false_positive_rate = parse_double(k, v);
          else if (k == "false_positive_score") n.false_positive_score = parse_range(k, v);
          else if (k == "score") n.score = parse_range(k, v);
          else throw InvalidArgument(fmt::format("unknown key '{}' in [noise]", k));
        } else {
          auto& p = *person;
          if (k == "true_id") p.true_id = parse_int(k, v);
          else if (k == "enter_frame") p.enter_frame = parse_int(k, v);
          else if (k == "exit_frame") p.exit_frame = parse_int(k, v);
          else if (k == "box") {
            const auto b = parse_doubles(k, v);
            if (b.size() != 4) throw InvalidArgument("box: expected 'x1 y1 x2 y2'");
            p.trajectory.start = BoundingBox(b[0], b[1], b[2], b[3]);
            has_box = true;
          } else if (k == "velocity") {
            const auto vel = parse_doubles(k, v);
            if (vel.size() != 2) throw InvalidArgument("velocity: expected 'vx vy'");
            p.trajectory.vx = vel[0];
            p.trajectory.vy = vel[1];
          } else if (k == "jitter") p.trajectory.jitter = parse_double(k, v);
          else throw InvalidArgument(fmt::format("unknown key '{}' in [person]", k));
        }
      } catch (const ConfigError&) {
        throw;
      } catch (const InvalidArgument& err) {
        throw ConfigError(e.line, err.what());
      }
    }
    if (person) {
      if (!has_box) throw ConfigError(sec.line, "[person] requires a box");
      s.persons.push_back(*person);
    }
  }
  validate_script(s);
  return s;
}

ScenarioScript load_scenario_file(const std::filesystem::path& path) {
  return parse_scenario(read_text_file(path));
}

std::string format_scenario(const ScenarioScript& s) {
  std::string out = fmt::format(
      "[scenario]\nframe_count = {}\nframe_width = {}\nframe_height = {}\nfps = {}\n"
      "embedding_dim = {}\nseed = {}\n\n",
      s.frame_count, s.frame_width, s.frame_height, s.fps, s.embedding_dim, s.seed);
  const auto& n = s.noise;
  out += fmt::format(
      "[noise]\nembedding_noise_sigma = {}\nocclusion_prob = {}\nocclusion_sigma = {}\n"
      "occluded_score = {} {}\nmiss_prob = {}\nfalse_positive_rate = {}\n"
      "false_positive_score = {} {}\nscore = {} {}\n",
      n.embedding_noise_sigma, n.occlusion_prob, n.occlusion_sigma, n.occluded_score.low,
      n.occluded_score.high, n.miss_prob, n.false_positive_rate, n.false_positive_score.low,
      n.false_positive_score.high, n.score.low, n.score.high);
  for (const auto& p : s.persons) {
    const auto& t = p.trajectory;
    out += fmt::format(
        "\n[person]\ntrue_id = {}\nenter_frame = {}\nexit_frame = {}\nbox = {} {} {} {}\n"
        "velocity = {} {}\njitter = {}\n",
        p.true_id, p.enter_frame, p.exit_frame, t.start.x1(), t.start.y1(), t.start.x2(),
        t.start.y2(), t.vx, t.vy, t.jitter);
  }
  return out;
}

Landmarks synthetic_landmarks(const BoundingBox& b) {
  auto at = [&](double fx, double fy) {
    return Point2{b.x1() + fx * b.width(), b.y1() + fy * b.height()};
  };
  return {at(0.30, 0.38), at(0.70, 0.38), at(0.50, 0.58), at(0.35, 0.78), at(0.65, 0.78)};
}

ScenarioSimulator::ScenarioSimulator(ScenarioScript script)
    : script_(std::move(script)), fp_rng_(mix_seed(script_.seed, kFalsePositiveStream)) {
  validate_script(script_);
  for (std::size_t i = 0; i < script_.persons.size(); ++i) {
    Rng identity_rng(mix_seed(script_.seed, person_identity_stream(i)));
    bases_.push_back(random_embedding(identity_rng));
    person_rngs_.emplace_back(mix_seed(script_.seed, person_motion_stream(i)));
  }
}

FaceEmbedding ScenarioSimulator::random_embedding(Rng& rng) const {
  std::vector<double> raw(static_cast<std::size_t>(script_.embedding_dim));
  // A Gaussian vector has a rotation-invariant direction: uniform on the sphere.
  for (auto& v : raw) v = rng.normal();
  return FaceEmbedding::from_raw(raw);
}

FaceEmbedding ScenarioSimulator::perturb(const FaceEmbedding& base, double sigma,
                                         Rng& rng) const {
  if (sigma == 0.0) return base;
  const double per_component = sigma / std::sqrt(static_cast<double>(base.dim()));
  std::vector<double> raw(base.values().begin(), base.values().end());
  for (auto& v : raw) v += per_component * rng.normal();
  return FaceEmbedding::from_raw(raw);
}

std::optional<SimulatedFrame> ScenarioSimulator::next() {
  if (next_frame_ >= script_.frame_count) return std::nullopt;
  const FrameIndex t = next_frame_++;
  const auto w = static_cast<double>(script_.frame_width);
  const auto h = static_cast<double>(script_.frame_height);
  const auto& noise = script_.noise;

  SimulatedFrame out;
  out.frame.index = t;

  for (std::size_t i = 0; i < script_.persons.size(); ++i) {
    const auto& person = script_.persons[i];
    if (t < person.enter_frame || t >= person.exit_frame) continue;
    auto& rng = person_rngs_[i];

    // Every control variable is drawn up front, whether or not it ends up used.
    const bool missed = rng.bernoulli(noise.miss_prob);
    const bool occluded = rng.bernoulli(noise.occlusion_prob);
    const double jx = rng.uniform(-1.0, 1.0) * person.trajectory.jitter;
    const double jy = rng.uniform(-1.0, 1.0) * person.trajectory.jitter;
    const double score_u = rng.uniform01();
    if (missed) continue;

    const auto& tr = person.trajectory;
    const double dt = static_cast<double>(t - person.enter_frame);
    const double dx = tr.vx * dt + jx;
    const double dy = tr.vy * dt + jy;
    const auto box = clip(tr.start.x1() + dx, tr.start.y1() + dy, tr.start.x2() + dx,
                          tr.start.y2() + dy, w, h);
    if (!box) continue;

    const auto& range = occluded ? noise.occluded_score : noise.score;
    const double score = range.low + (range.high - range.low) * score_u;
    const double sigma = occluded ? noise.occlusion_sigma : noise.embedding_noise_sigma;

    out.frame.detections.push_back(FaceDetection{
        .box = *box, .score = score, .landmarks = synthetic_landmarks(*box), .frame_index = t});
    out.frame.embeddings.emplace_back(perturb(bases_[i], sigma, rng));
    out.truth.push_back({person.true_id, occluded});
  }

  const auto spurious = fp_rng_.poisson(noise.false_positive_rate);
  for (std::int64_t k = 0; k < spurious; ++k) {
    const double size = fp_rng_.uniform(0.05, 0.15) * std::min(w, h);
    const double x = fp_rng_.uniform(0.0, w - size);
    const double y = fp_rng_.uniform(0.0, h - size);
    const auto& r = noise.false_positive_score;
    const double score = fp_rng_.uniform(r.low, r.high);
    const BoundingBox box(x, y, x + size, y + size);
    out.frame.detections.push_back(FaceDetection{
        .box = box, .score = score, .landmarks = synthetic_landmarks(box), .frame_index = t});
    out.frame.embeddings.emplace_back(random_embedding(fp_rng_));
    out.truth.push_back({-1, false});
  }
  return out;
}

std::vector<SimulatedFrame> simulate(const ScenarioScript& script) {
  ScenarioSimulator sim(script);
  std::vector<SimulatedFrame> frames;
  frames.reserve(static_cast<std::size_t>(script.frame_count));
  while (auto f = sim.next()) frames.push_back(std::move(*f));
  return frames;
}

}  // namespace facereid
