#include "posechain/ensemble.hpp"

#include "posechain/error.hpp"

#include <algorithm>
#include <cmath>

namespace posechain {

namespace {

void require_plane_pair(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::DimensionMismatch, "maps differ in size");
  }
}

}  // namespace

void EnsembleAccumulator::add(const ImageBuffer& member) {
  if (count_ == 0) {
    mean_ = ImageBuffer(member.width, member.height, member.channels);
    m2_.assign(member.data.size(), 0.0);
  } else if (!member.same_shape(mean_)) {
    throw Error(ErrorCode::DimensionMismatch, "ensemble member " + std::to_string(count_) + " differs in shape");
  }
  ++count_;
  const double k = static_cast<double>(count_);
  for (std::size_t i = 0; i < member.data.size(); ++i) {
    const double delta = member.data[i] - mean_.data[i];
    mean_.data[i] += delta / k;
    m2_[i] += delta * (member.data[i] - mean_.data[i]);
  }
}

ImageBuffer EnsembleAccumulator::mean_map() const {
  if (count_ == 0) throw Error(ErrorCode::EmptyStack, "ensemble has no members");
  return mean_;
}

ImageBuffer EnsembleAccumulator::std_map() const {
  if (count_ < 2) throw Error(ErrorCode::StackTooSmall, "ensemble spread needs at least 2 members");
  ImageBuffer out(mean_.width, mean_.height, 1);
  const int channels = mean_.channels;
  const double norm = 1.0 / (channels * static_cast<double>(count_));
  for (std::size_t p = 0; p < out.data.size(); ++p) {
    double sum = 0.0;
    for (int c = 0; c < channels; ++c) sum += m2_[p * channels + c];
    out.data[p] = std::sqrt(sum * norm);
  }
  return out;
}

namespace {

EnsembleAccumulator accumulate(const EnsembleStack& stack) {
  if (stack.members.empty()) throw Error(ErrorCode::EmptyStack, "ensemble has no members");
  EnsembleAccumulator acc;
  for (const ImageBuffer& m : stack.members) acc.add(m);
  return acc;
}

}  // namespace

ImageBuffer ensemble_mean(const EnsembleStack& stack) { return accumulate(stack).mean_map(); }

ImageBuffer ensemble_std(const EnsembleStack& stack) {
  if (stack.members.size() == 1) throw Error(ErrorCode::StackTooSmall, "ensemble spread needs at least 2 members");
  return accumulate(stack).std_map();
}

ImageBuffer residual_magnitude(const ImageBuffer& prediction, const ImageBuffer& reference) {
  if (!prediction.same_shape(reference)) throw Error(ErrorCode::DimensionMismatch, "prediction and reference differ");
  ImageBuffer out(prediction.width, prediction.height, 1);
  for (std::size_t p = 0; p < prediction.pixel_count(); ++p) {
    double sum = 0.0;
    for (int c = 0; c < prediction.channels; ++c) {
      const std::size_t i = p * prediction.channels + c;
      const double d = prediction.data[i] - reference.data[i];
      sum += d * d;
    }
    out.data[p] = std::sqrt(sum);
  }
  return out;
}

ImageBuffer density_augmented_uncertainty(const ImageBuffer& std_map, const ImageBuffer& accumulated_density,
                                          double epsilon) {
  require_plane_pair(std_map, accumulated_density);
  if (std_map.channels != 1 || accumulated_density.channels != 1) {
    throw Error(ErrorCode::DimensionMismatch, "std and density maps must be single channel");
  }
  ImageBuffer out(std_map.width, std_map.height, 1);
  for (std::size_t p = 0; p < std_map.pixel_count(); ++p) {
    const double s = std_map.data[p];
    const double inv_density = 1.0 / std::max(accumulated_density.data[p], epsilon);
    out.data[p] = std::sqrt(s * s + inv_density * inv_density);
  }
  return out;
}

std::optional<double> pearson_correlation(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.data.size() != b.data.size() || a.data.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "correlation needs equally sized maps");
  }
  // a constant map leaves rounding noise in the centered sums, so test it directly
  const auto constant = [](const ImageBuffer& m) {
    return std::all_of(m.data.begin(), m.data.end(), [&](double v) { return v == m.data.front(); });
  };
  if (constant(a) || constant(b)) return std::nullopt;
  const double n = static_cast<double>(a.data.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    ma += a.data[i];
    mb += b.data[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double da = a.data[i] - ma;
    const double db = b.data[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

UncertaintyReport uq_report(const EnsembleStack& stack, const ImageBuffer& reference,
                            const ImageBuffer* accumulated_density, double epsilon) {
  UncertaintyReport report;
  report.maps.mean = ensemble_mean(stack);
  report.maps.std = ensemble_std(stack);
  report.maps.residual = residual_magnitude(report.maps.mean, reference);
  if (accumulated_density != nullptr) {
    report.maps.density_weighted = density_augmented_uncertainty(report.maps.std, *accumulated_density, epsilon);
  }
  report.summary.correlation = pearson_correlation(report.maps.std, report.maps.residual);
  report.summary.zero_variance = !report.summary.correlation.has_value();
  double s = 0.0;
  double r = 0.0;
  for (std::size_t i = 0; i < report.maps.std.data.size(); ++i) {
    s += report.maps.std.data[i];
    r += report.maps.residual.data[i];
  }
  const double n = static_cast<double>(report.maps.std.data.size());
  report.summary.mean_std = s / n;
  report.summary.mean_residual = r / n;
  return report;
}

}  // namespace posechain
