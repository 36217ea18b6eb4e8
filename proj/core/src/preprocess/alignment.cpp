#include <algorithm>
#include <cmath>
#include <numbers>

#include "ferkit/preprocess.hpp"

namespace ferkit {

namespace {

Point2 clip_to_frame(Point2 p, int w, int h) {
  return {std::clamp(p.x, 0.0, static_cast<double>(w - 1)), std::clamp(p.y, 0.0, static_cast<double>(h - 1))};
}

/// Angle of the eye line in degrees, measured from the image-left eye to the
/// image-right eye so the result always lies in (-90, 90].
double eye_line_degrees(const LandmarkSet& lm) {
  Point2 a = lm.right_eye, b = lm.left_eye;
  if (b.x < a.x) std::swap(a, b);
  return std::atan2(b.y - a.y, b.x - a.x) * 180.0 / std::numbers::pi;
}

}  // namespace

std::optional<AlignedFace> align_face(const Image& gray, const FaceDetection& det) {
  if (gray.channels() != 1) throw std::invalid_argument("align_face: expects a grayscale image");
  const int x0 = std::max(0, static_cast<int>(std::floor(det.box.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(det.box.y)));
  const int x1 = std::min(gray.width(), static_cast<int>(std::ceil(det.box.x + det.box.w)));
  const int y1 = std::min(gray.height(), static_cast<int>(std::ceil(det.box.y + det.box.h)));
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  const int cw = x1 - x0, ch = y1 - y0;

  const double angle = det.landmarks ? eye_line_degrees(*det.landmarks) : 0.0;

  const double sx = static_cast<double>(kSampleSide) / cw;
  const double sy = static_cast<double>(kSampleSide) / ch;
  const Affine2D to_output = Affine2D::translation(-x0, -y0)
                                 .then(Affine2D::rotation(angle, {(cw - 1) / 2.0, (ch - 1) / 2.0}))
                                 .then(Affine2D::scaling(sx, sy))
                                 .then(Affine2D::translation(0.5 * sx - 0.5, 0.5 * sy - 0.5));

  AlignedFace out;
  out.source_to_aligned = to_output;
  out.rotation_degrees = angle;
  if (angle == 0.0) {
    out.image = resize_bilinear(crop(gray, x0, y0, cw, ch), kSampleSide, kSampleSide);
  } else {
    out.image = warp_affine(gray, to_output.inverse(), kSampleSide, kSampleSide);
  }
  if (det.landmarks) {
    std::array<Point2, 5> mapped;
    const auto pts = det.landmarks->points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      mapped[i] = clip_to_frame(to_output.apply(pts[i]), kSampleSide, kSampleSide);
    }
    out.landmarks = LandmarkSet::from_points(mapped);
  }
  return out;
}

std::optional<AlignedSample> align(const ImageSample& sample, const FaceDetection& detection) {
  auto face = align_face(sample.pixels, detection);
  if (!face) return std::nullopt;
  AlignedSample out;
  out.sample = sample;
  out.sample.pixels = std::move(face->image);
  out.sample.variant = Variant::Aligned;
  out.landmarks = face->landmarks;
  out.source_to_aligned = face->source_to_aligned;
  return out;
}

PixelRect mask_rect(Point2 landmark, MaskSize size, int image_width, int image_height) {
  const int cx = static_cast<int>(std::lround(landmark.x));
  const int cy = static_cast<int>(std::lround(landmark.y));
  PixelRect r;
  r.x0 = cx - size.width / 2;
  r.x1 = r.x0 + size.width - 1;
  r.y0 = cy - size.height / 2;
  r.y1 = r.y0 + size.height - 1;
  r.x0 = std::max(r.x0, 0);
  r.y0 = std::max(r.y0, 0);
  r.x1 = std::min(r.x1, image_width - 1);
  r.y1 = std::min(r.y1, image_height - 1);
  return r;
}

Image landmark_mask(const Image& aligned, const LandmarkSet& landmarks, MaskSize size) {
  if (aligned.channels() != 1) throw std::invalid_argument("landmark_mask: expects a grayscale image");
  if (size.width <= 0 || size.height <= 0) throw std::invalid_argument("landmark_mask: mask size must be positive");
  Image out(aligned.width(), aligned.height(), 1, 0);
  for (const auto& p : landmarks.points()) {
    const PixelRect r = mask_rect(p, size, aligned.width(), aligned.height());
    for (int y = r.y0; y <= r.y1; ++y) {
      for (int x = r.x0; x <= r.x1; ++x) out.at(x, y) = aligned.at(x, y);
    }
  }
  return out;
}

ImageSample landmark_mask(const ImageSample& aligned, const LandmarkSet& landmarks, MaskSize size) {
  ImageSample out = aligned;
  out.pixels = landmark_mask(aligned.pixels, landmarks, size);
  out.variant = Variant::Cropped;
  return out;
}

}  // namespace ferkit
