#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace posechain {

/// Row-major interleaved image. Color values live in [0, 1]; scalar
/// maps (densities, uncertainties) may exceed that range.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  bool same_shape(const ImageBuffer& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

/// 10 log10(1 / MSE) over all pixels and channels, data range 1. Returns
/// +infinity for identical images. Throws DimensionMismatch.
double psnr(const ImageBuffer& image, const ImageBuffer& reference);

struct SsimSettings {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean structural similarity with a Gaussian window over the fully covered
/// ("valid") region, computed per channel and averaged.
/// Throws DimensionMismatch, ImageTooSmall.
double ssim(const ImageBuffer& image, const ImageBuffer& reference, const SsimSettings& settings = {});

struct ImageScore {
  std::string name;
  double psnr = 0.0;  // +infinity for identical pairs
  double ssim = 0.0;
};

struct QualityReport {
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  std::size_t count = 0;
  std::size_t infinite_psnr_count = 0;  // excluded from the PSNR statistics
  bool single_sample = false;           // std reported as 0 by convention
  std::vector<ImageScore> per_image;
};

/// Means and sample standard deviations. Infinite PSNR entries are left out
/// of the PSNR mean/std; if all are infinite the PSNR mean is +infinity.
/// Throws EmptyInput.
QualityReport aggregate(const std::vector<ImageScore>& per_image);

/// "31.3±1.4 / 0.892±0.006"
std::string format_quality_row(const QualityReport& report);

}  // namespace posechain
