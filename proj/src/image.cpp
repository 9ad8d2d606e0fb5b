#include "posechain/image.hpp"

#include "posechain/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace posechain {

namespace {

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.width) + "x" + std::to_string(a.height) + "x" + std::to_string(a.channels) +
                    " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                    std::to_string(b.channels));
  }
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double center = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable "valid" filtering of a w x h plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& kernel) {
  const int n = static_cast<int>(kernel.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> horiz(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += kernel[static_cast<std::size_t>(i)] * plane[static_cast<std::size_t>(y) * w + x + i];
      horiz[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += kernel[static_cast<std::size_t>(i)] * horiz[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

double sample_std(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

double psnr(const ImageBuffer& image, const ImageBuffer& reference) {
  require_same_shape(image, reference);
  if (image.data.empty()) throw Error(ErrorCode::EmptyInput, "empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const double d = image.data[i] - reference.data[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(image.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageBuffer& image, const ImageBuffer& reference, const SsimSettings& settings) {
  require_same_shape(image, reference);
  if (std::min(image.width, image.height) < settings.window) {
    throw Error(ErrorCode::ImageTooSmall, "image smaller than the " + std::to_string(settings.window) + " px window");
  }
  const std::vector<double> kernel = gaussian_kernel(settings.window, settings.sigma);
  const double c1 = (settings.k1 * settings.data_range) * (settings.k1 * settings.data_range);
  const double c2 = (settings.k2 * settings.data_range) * (settings.k2 * settings.data_range);
  const int w = image.width;
  const int h = image.height;
  const std::size_t n = image.pixel_count();

  double total = 0.0;
  for (int c = 0; c < image.channels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = image.data[i * image.channels + c];
      const double b = reference.data[i * image.channels + c];
      x[i] = a;
      y[i] = b;
      xx[i] = a * a;
      yy[i] = b * b;
      xy[i] = a * b;
    }
    const auto mu_x = filter_valid(x, w, h, kernel);
    const auto mu_y = filter_valid(y, w, h, kernel);
    const auto e_xx = filter_valid(xx, w, h, kernel);
    const auto e_yy = filter_valid(yy, w, h, kernel);
    const auto e_xy = filter_valid(xy, w, h, kernel);

    double channel_sum = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
      const double mx = mu_x[i];
      const double my = mu_y[i];
      const double vx = e_xx[i] - mx * mx;
      const double vy = e_yy[i] - my * my;
      const double cov = e_xy[i] - mx * my;
      channel_sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    total += channel_sum / static_cast<double>(mu_x.size());
  }
  return total / image.channels;
}

QualityReport aggregate(const std::vector<ImageScore>& per_image) {
  if (per_image.empty()) throw Error(ErrorCode::EmptyInput, "no image scores to aggregate");
  QualityReport report;
  report.per_image = per_image;
  report.count = per_image.size();
  report.single_sample = per_image.size() == 1;

  std::vector<double> finite_psnr;
  std::vector<double> ssims;
  for (const ImageScore& s : per_image) {
    if (std::isinf(s.psnr)) {
      ++report.infinite_psnr_count;
    } else {
      finite_psnr.push_back(s.psnr);
    }
    ssims.push_back(s.ssim);
  }

  double ssim_sum = 0.0;
  for (double v : ssims) ssim_sum += v;
  report.ssim_mean = ssim_sum / static_cast<double>(ssims.size());
  report.ssim_std = sample_std(ssims, report.ssim_mean);

  if (finite_psnr.empty()) {
    report.psnr_mean = std::numeric_limits<double>::infinity();
    report.psnr_std = 0.0;
  } else {
    double sum = 0.0;
    for (double v : finite_psnr) sum += v;
    report.psnr_mean = sum / static_cast<double>(finite_psnr.size());
    report.psnr_std = sample_std(finite_psnr, report.psnr_mean);
  }
  return report;
}

std::string format_quality_row(const QualityReport& report) {
  char buf[128];
  if (std::isinf(report.psnr_mean)) {
    std::snprintf(buf, sizeof buf, "inf / %.3f\xC2\xB1%.3f", report.ssim_mean, report.ssim_std);
  } else {
    std::snprintf(buf, sizeof buf, "%.1f\xC2\xB1%.1f / %.3f\xC2\xB1%.3f", report.psnr_mean, report.psnr_std,
                  report.ssim_mean, report.ssim_std);
  }
  return buf;
}

}  // namespace posechain
