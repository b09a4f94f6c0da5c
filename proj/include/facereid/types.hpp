#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace facereid {

using FrameIndex = std::int64_t;
using IdentityId = std::int64_t;

// Thrown when a value violates a domain invariant (bad box, bad params, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Axis-aligned box in pixel coordinates, origin top-left. Always has
// strictly positive area and finite corners.
class BoundingBox {
 public:
  BoundingBox(double x1, double y1, double x2, double y2);

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return width() * height(); }

  bool operator==(const BoundingBox&) const = default;

 private:
  double x1_, y1_, x2_, y2_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

// Five facial landmarks: left eye, right eye, nose, left mouth corner,
// right mouth corner.
using Landmarks = std::array<Point2, 5>;

inline constexpr std::size_t kLeftMouthCorner = 3;
inline constexpr std::size_t kRightMouthCorner = 4;

struct FaceDetection {
  BoundingBox box;
  double score = 0.0;
  std::optional<Landmarks> landmarks;
  FrameIndex frame_index = 0;

  bool operator==(const FaceDetection&) const = default;
};

// Checks score range, landmark finiteness and a non-negative frame index.
void validate_detection(const FaceDetection& det);

// Unit-norm feature vector. Normalization happens once here so distance
// computations reduce to a dot product.
class FaceEmbedding {
 public:
  // Normalizes `raw`. Rejects empty, zero-norm and non-finite input.
  static FaceEmbedding from_raw(std::span<const double> raw);

  // Takes values that were already normalized (e.g. read back from a log).
  // Rejects vectors whose norm is off by more than kNormTolerance.
  static FaceEmbedding from_normalized(std::vector<double> values);

  static constexpr double kNormTolerance = 1e-6;

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }

  bool operator==(const FaceEmbedding&) const = default;

 private:
  explicit FaceEmbedding(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

enum class IdentityState { Held, Active, Discarded };

std::string_view to_string(IdentityState s);
IdentityState identity_state_from_string(std::string_view s);

struct IdentityRecord {
  IdentityId id = 0;
  FaceEmbedding embedding;
  IdentityState state = IdentityState::Held;
  FrameIndex enrolled_frame = 0;
  FrameIndex last_seen_frame = 0;
  BoundingBox last_box;
  std::int64_t hold_appearances = 0;
  std::int64_t total_appearances = 0;
};

// Open-set identity gallery. Ids are dense in enrollment order and never
// reused; discarded records stay in place so logs remain unambiguous.
class Gallery {
 public:
  const std::vector<IdentityRecord>& records() const { return records_; }
  IdentityId next_id() const { return static_cast<IdentityId>(records_.size()); }

  bool contains(IdentityId id) const;
  const IdentityRecord& at(IdentityId id) const;
  IdentityRecord& at(IdentityId id);

  // Number of non-Discarded records, the ones matching scans.
  std::size_t live_count() const;
  std::size_t count(IdentityState s) const;
  bool empty() const { return live_count() == 0; }

  IdentityRecord& enroll(FaceEmbedding embedding, const BoundingBox& box, FrameIndex frame,
                         IdentityState initial);

  // Enforces Held->Active and Held->Discarded only.
  void transition(IdentityId id, IdentityState to);

 private:
  std::vector<IdentityRecord> records_;
};

enum class ValidationPolicy { OverlapReject, ContinuityConfirm, Off };

std::string_view to_string(ValidationPolicy p);
ValidationPolicy validation_policy_from_string(std::string_view s);

struct EngineParams {
  double sigma_h = 0.6;
  double tau_d = 0.6;
  double tau_iou = 0.8;
  std::int64_t t_min = 60;
  std::int64_t min_hold_appearances = 3;
  std::int64_t embedding_dim = 512;
  ValidationPolicy validation_policy = ValidationPolicy::OverlapReject;
  bool exclusive_match = true;
  // How many frames back a gallery box still counts as "recent" for the
  // candidate validation step.
  std::int64_t t_lookback = 1;

  bool operator==(const EngineParams&) const = default;
};

// Returns `p` unchanged or throws InvalidArgument naming the offending field.
const EngineParams& validate_params(const EngineParams& p);

}  // namespace facereid
