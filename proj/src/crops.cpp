#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "facereid/sources.hpp"
#include "facereid/stories.hpp"

namespace facereid {

namespace fs = std::filesystem;

CropResult apply_crops(const std::vector<CropRow>& manifest, const fs::path& frame_directory,
                       const fs::path& out_directory) {
  CropResult result;
  if (manifest.empty()) return result;

  const auto files = list_frame_files(frame_directory);
  fs::create_directories(out_directory);

  // Rows of one frame are usually adjacent; keep the last decoded image.
  FrameIndex cached_frame = -1;
  cv::Mat image;

  for (const auto& row : manifest) {
    if (row.frame < 0 || static_cast<std::size_t>(row.frame) >= files.size()) {
      result.warnings.push_back(fmt::format("frame {} not found in '{}'", row.frame,
                                            frame_directory.string()));
      continue;
    }
    if (row.frame != cached_frame) {
      image = cv::imread(files[static_cast<std::size_t>(row.frame)].string(), cv::IMREAD_COLOR);
      cached_frame = row.frame;
    }
    if (image.empty()) {
      result.warnings.push_back(fmt::format("frame {} could not be read", row.frame));
      continue;
    }

    const int x1 = std::clamp(static_cast<int>(std::floor(row.rect.x1())), 0, image.cols);
    const int y1 = std::clamp(static_cast<int>(std::floor(row.rect.y1())), 0, image.rows);
    const int x2 = std::clamp(static_cast<int>(std::ceil(row.rect.x2())), 0, image.cols);
    const int y2 = std::clamp(static_cast<int>(std::ceil(row.rect.y2())), 0, image.rows);
    if (x2 <= x1 || y2 <= y1) {
      result.warnings.push_back(
          fmt::format("identity {} frame {}: crop lies outside the image", row.identity_id,
                      row.frame));
      continue;
    }

    cv::Mat crop = image(cv::Rect(x1, y1, x2 - x1, y2 - y1));
    if (row.out_width && row.out_height) {
      cv::Mat scaled;
      cv::resize(crop, scaled, cv::Size(*row.out_width, *row.out_height), 0, 0, cv::INTER_AREA);
      crop = scaled;
    }
    const auto out =
        out_directory / fmt::format("id{:04d}_f{:06d}.png", row.identity_id, row.frame);
    if (!cv::imwrite(out.string(), crop)) {
      result.warnings.push_back(fmt::format("failed to write '{}'", out.string()));
      continue;
    }
    result.written.push_back(out);
  }
  return result;
}

}  // namespace facereid
