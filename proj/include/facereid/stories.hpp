#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facereid/log.hpp"

namespace facereid {

struct Appearance {
  FrameIndex frame = 0;
  BoundingBox box{0, 0, 1, 1};
  std::optional<Landmarks> landmarks;
};

struct IdentityHistory {
  IdentityId id = 0;
  IdentityState final_state = IdentityState::Held;
  FrameIndex enrolled_frame = 0;
  std::vector<Appearance> appearances;  // Matched and Enrolled observations, frame order
};

// Everything the story builders need, indexed once from a parsed log. The
// final lifecycle state is applied retroactively, so observations emitted
// while an identity was Held are attributed by how the identity ended.
struct CatalogIndex {
  HeaderRecord header;
  std::int64_t frame_span = 0;  // last frame index + 1
  std::map<IdentityId, IdentityHistory> identities;

  const IdentityHistory& identity(IdentityId id) const;  // throws on unknown id
  std::vector<IdentityId> active_ids() const;
};

CatalogIndex index_log(const ParsedLog& log);

struct StorySegment {
  IdentityId identity_id = 0;
  FrameIndex start_frame = 0;
  FrameIndex end_frame = 0;  // inclusive
  std::optional<double> start_ms;
  std::optional<double> end_ms;  // end of the last frame
  bool operator==(const StorySegment&) const = default;
};

struct SegmentOptions {
  std::int64_t max_gap_frames = 12;
  // Also build stories for identities that ended Discarded or still Held.
  bool include_unconfirmed = false;
};

// Merges sorted, unique frame indices into [start, end] runs. Two
// appearances stay in one run when the number of missing frames between
// them is at most max_gap_frames.
std::vector<std::pair<FrameIndex, FrameIndex>> merge_appearances(
    const std::vector<FrameIndex>& frames, std::int64_t max_gap_frames);

std::vector<StorySegment> build_segments(const CatalogIndex& index, IdentityId id,
                                         const SegmentOptions& options = {});

// identity_id,start_frame,end_frame,start_ms,end_ms
std::string segments_csv(const std::vector<StorySegment>& segments);

enum class CropMode { Face, Mouth };

struct CropOptions {
  CropMode mode = CropMode::Face;
  double face_margin = 0.2;     // fraction of box width/height added per side
  double mouth_expand_x = 0.6;  // fraction of mouth-corner distance added per side
  double mouth_expand_y = 0.5;
  std::optional<int> out_width;  // rescale target, both or neither
  std::optional<int> out_height;
  bool include_unconfirmed = false;
};

struct CropRow {
  IdentityId identity_id = 0;
  FrameIndex frame = 0;
  BoundingBox rect{0, 0, 1, 1};
  std::optional<int> out_width;
  std::optional<int> out_height;
};

// Face rectangle: box grown by margin on every side, clamped to [0, w] x [0, h]
// (only the lower bound when the frame size is unknown).
std::optional<BoundingBox> face_crop(const BoundingBox& box, double margin,
                                     std::optional<std::int64_t> frame_width,
                                     std::optional<std::int64_t> frame_height);

// Mouth rectangle: the span of the two mouth corners, grown horizontally by
// expand_x and vertically by expand_y times the corner distance per side.
std::optional<BoundingBox> mouth_crop(const Landmarks& landmarks, double expand_x,
                                      double expand_y, std::optional<std::int64_t> frame_width,
                                      std::optional<std::int64_t> frame_height);

std::vector<CropRow> crop_manifest(const CatalogIndex& index, IdentityId id,
                                   const CropOptions& options = {});

// identity_id,frame,x1,y1,x2,y2,out_width,out_height
std::string manifest_csv(const std::vector<CropRow>& rows);

struct PresenceTimeline {
  std::vector<IdentityId> ids;         // Active identities, ascending
  std::int64_t frames = 0;             // columns 0..frames-1
  std::vector<std::vector<bool>> rows;  // rows[i][f]
};

PresenceTimeline presence_timeline(const CatalogIndex& index);
std::string presence_csv(const PresenceTimeline& timeline);
std::string presence_svg(const PresenceTimeline& timeline, std::optional<double> fps);

struct CropResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

// Cuts every manifest row out of its frame image. Frame i is the i-th image
// of `frame_directory` in frame order. Output files are named
// id<identity>_f<frame>.png.
CropResult apply_crops(const std::vector<CropRow>& manifest,
                       const std::filesystem::path& frame_directory,
                       const std::filesystem::path& out_directory);

}  // namespace facereid
