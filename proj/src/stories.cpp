#include "facereid/stories.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace facereid {

const IdentityHistory& CatalogIndex::identity(IdentityId id) const {
  const auto it = identities.find(id);
  if (it == identities.end()) throw InvalidArgument(fmt::format("unknown identity id {}", id));
  return it->second;
}

std::vector<IdentityId> CatalogIndex::active_ids() const {
  std::vector<IdentityId> ids;
  for (const auto& [id, h] : identities) {
    if (h.final_state == IdentityState::Active) ids.push_back(id);
  }
  return ids;
}

CatalogIndex index_log(const ParsedLog& log) {
  CatalogIndex index;
  index.header = log.header();
  for (const auto& rec : log.records) {
    if (const auto* f = std::get_if<FrameRecord>(&rec)) {
      index.frame_span = f->frame + 1;
    } else if (const auto* e = std::get_if<IdentityEventRecord>(&rec)) {
      switch (e->event) {
        case LifecycleEvent::Enrolled:
          index.identities[e->id] = IdentityHistory{e->id, IdentityState::Held, e->frame, {}};
          break;
        case LifecycleEvent::Activated:
          index.identities.at(e->id).final_state = IdentityState::Active;
          break;
        case LifecycleEvent::Discarded:
          index.identities.at(e->id).final_state = IdentityState::Discarded;
          break;
      }
    } else if (const auto* o = std::get_if<ObsRecord>(&rec)) {
      if (o->identity_id) {
        index.identities.at(*o->identity_id)
            .appearances.push_back({o->frame, o->box, o->landmarks});
      }
    }
  }
  return index;
}

std::vector<std::pair<FrameIndex, FrameIndex>> merge_appearances(
    const std::vector<FrameIndex>& frames, std::int64_t max_gap_frames) {
  std::vector<std::pair<FrameIndex, FrameIndex>> runs;
  for (const FrameIndex f : frames) {
    if (!runs.empty() && f - runs.back().second - 1 <= max_gap_frames) {
      runs.back().second = f;
    } else {
      runs.emplace_back(f, f);
    }
  }
  return runs;
}

std::vector<StorySegment> build_segments(const CatalogIndex& index, IdentityId id,
                                         const SegmentOptions& options) {
  if (options.max_gap_frames < 0) throw InvalidArgument("max_gap_frames must be >= 0");
  const auto& hist = index.identity(id);
  if (hist.final_state != IdentityState::Active && !options.include_unconfirmed) return {};

  std::vector<FrameIndex> frames;
  frames.reserve(hist.appearances.size());
  for (const auto& a : hist.appearances) frames.push_back(a.frame);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  std::vector<StorySegment> out;
  for (const auto& [start, end] : merge_appearances(frames, options.max_gap_frames)) {
    StorySegment seg{id, start, end, std::nullopt, std::nullopt};
    if (const auto fps = index.header.fps; fps && *fps > 0.0) {
      seg.start_ms = static_cast<double>(start) * 1000.0 / *fps;
      seg.end_ms = static_cast<double>(end + 1) * 1000.0 / *fps;
    }
    out.push_back(seg);
  }
  return out;
}

std::string segments_csv(const std::vector<StorySegment>& segments) {
  std::string out = "identity_id,start_frame,end_frame,start_ms,end_ms\n";
  for (const auto& s : segments) {
    out += fmt::format("{},{},{},{},{}\n", s.identity_id, s.start_frame, s.end_frame,
                       s.start_ms ? fmt::format("{:.3f}", *s.start_ms) : "",
                       s.end_ms ? fmt::format("{:.3f}", *s.end_ms) : "");
  }
  return out;
}

namespace {

std::optional<BoundingBox> clamp_rect(double x1, double y1, double x2, double y2,
                                      std::optional<std::int64_t> w,
                                      std::optional<std::int64_t> h) {
  x1 = std::max(x1, 0.0);
  y1 = std::max(y1, 0.0);
  if (w) x2 = std::min(x2, static_cast<double>(*w));
  if (h) y2 = std::min(y2, static_cast<double>(*h));
  if (!(x1 < x2) || !(y1 < y2)) return std::nullopt;
  return BoundingBox(x1, y1, x2, y2);
}

}  // namespace

std::optional<BoundingBox> face_crop(const BoundingBox& box, double margin,
                                     std::optional<std::int64_t> frame_width,
                                     std::optional<std::int64_t> frame_height) {
  const double mx = margin * box.width();
  const double my = margin * box.height();
  return clamp_rect(box.x1() - mx, box.y1() - my, box.x2() + mx, box.y2() + my, frame_width,
                    frame_height);
}

std::optional<BoundingBox> mouth_crop(const Landmarks& lm, double expand_x, double expand_y,
                                      std::optional<std::int64_t> frame_width,
                                      std::optional<std::int64_t> frame_height) {
  const auto& l = lm[kLeftMouthCorner];
  const auto& r = lm[kRightMouthCorner];
  const double dist = std::hypot(r.x - l.x, r.y - l.y);
  const double ex = expand_x * dist;
  const double ey = expand_y * dist;
  return clamp_rect(std::min(l.x, r.x) - ex, std::min(l.y, r.y) - ey, std::max(l.x, r.x) + ex,
                    std::max(l.y, r.y) + ey, frame_width, frame_height);
}

std::vector<CropRow> crop_manifest(const CatalogIndex& index, IdentityId id,
                                   const CropOptions& options) {
  if (options.out_width.has_value() != options.out_height.has_value()) {
    throw InvalidArgument("crop scale needs both width and height");
  }
  if (options.out_width && (*options.out_width <= 0 || *options.out_height <= 0)) {
    throw InvalidArgument("crop scale must be positive");
  }
  const auto& hist = index.identity(id);
  if (hist.final_state != IdentityState::Active && !options.include_unconfirmed) return {};

  const auto w = index.header.frame_width;
  const auto h = index.header.frame_height;
  std::vector<CropRow> rows;
  for (const auto& a : hist.appearances) {
    std::optional<BoundingBox> rect;
    if (options.mode == CropMode::Face) {
      rect = face_crop(a.box, options.face_margin, w, h);
    } else {
      if (!a.landmarks) {
        throw InvalidArgument(fmt::format(
            "mouth mode requires landmarks, but identity {} frame {} has none", id, a.frame));
      }
      rect = mouth_crop(*a.landmarks, options.mouth_expand_x, options.mouth_expand_y, w, h);
    }
    if (!rect) continue;
    rows.push_back({id, a.frame, *rect, options.out_width, options.out_height});
  }
  return rows;
}

std::string manifest_csv(const std::vector<CropRow>& rows) {
  std::string out = "identity_id,frame,x1,y1,x2,y2,out_width,out_height\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.identity_id, r.frame, r.rect.x1(),
                       r.rect.y1(), r.rect.x2(), r.rect.y2(),
                       r.out_width ? std::to_string(*r.out_width) : "",
                       r.out_height ? std::to_string(*r.out_height) : "");
  }
  return out;
}

PresenceTimeline presence_timeline(const CatalogIndex& index) {
  PresenceTimeline t;
  t.frames = index.frame_span;
  t.ids = index.active_ids();
  for (const auto id : t.ids) {
    std::vector<bool> row(static_cast<std::size_t>(t.frames), false);
    for (const auto& a : index.identity(id).appearances) {
      if (a.frame >= 0 && a.frame < t.frames) row[static_cast<std::size_t>(a.frame)] = true;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string presence_csv(const PresenceTimeline& t) {
  std::string out = "identity_id";
  for (std::int64_t f = 0; f < t.frames; ++f) out += fmt::format(",{}", f);
  out += '\n';
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    out += std::to_string(t.ids[i]);
    for (const bool present : t.rows[i]) out += present ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

std::string presence_svg(const PresenceTimeline& t, std::optional<double> fps) {
  constexpr double kLabelWidth = 70.0;
  constexpr double kPlotWidth = 900.0;
  constexpr double kRowHeight = 18.0;
  constexpr double kTop = 10.0;
  constexpr double kAxisHeight = 30.0;

  const double height = kTop + kRowHeight * static_cast<double>(t.ids.size()) + kAxisHeight;
  const double width = kLabelWidth + kPlotWidth + 20.0;
  const double scale = t.frames > 0 ? kPlotWidth / static_cast<double>(t.frames) : 0.0;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  svg += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", width, height);

  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    const double y = kTop + kRowHeight * static_cast<double>(i);
    svg += fmt::format("<text x=\"4\" y=\"{:.1f}\">id {}</text>\n", y + kRowHeight * 0.7,
                       t.ids[i]);
    const auto& row = t.rows[i];
    // Golden-angle hue spacing keeps neighbouring rows distinguishable.
    const int hue = static_cast<int>((static_cast<double>(i) * 137.508)) % 360;
    std::size_t f = 0;
    while (f < row.size()) {
      if (!row[f]) {
        ++f;
        continue;
      }
      const std::size_t start = f;
      while (f < row.size() && row[f]) ++f;
      svg += fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.1f}\" width=\"{:.2f}\" height=\"{:.1f}\" "
          "fill=\"hsl({},65%,50%)\"/>\n",
          kLabelWidth + scale * static_cast<double>(start), y + 2.0,
          std::max(scale * static_cast<double>(f - start), 0.5), kRowHeight - 4.0, hue);
    }
  }

  const double axis_y = kTop + kRowHeight * static_cast<double>(t.ids.size());
  svg += fmt::format(
      "<line x1=\"{:.0f}\" y1=\"{:.1f}\" x2=\"{:.0f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n",
      kLabelWidth, axis_y, kLabelWidth + kPlotWidth, axis_y);
  constexpr int kTicks = 5;
  for (int k = 0; k <= kTicks && t.frames > 0; ++k) {
    const double frame = static_cast<double>(t.frames) * k / kTicks;
    const std::string label =
        fps && *fps > 0.0 ? fmt::format("{:.1f}s", frame / *fps) : fmt::format("{:.0f}", frame);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                       kLabelWidth + scale * frame, axis_y + 16.0, label);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace facereid
