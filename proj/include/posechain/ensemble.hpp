#pragma once

#include "posechain/image.hpp"

#include <optional>
#include <vector>

namespace posechain {

/// Co-registered renders of one view from M independently trained models.
struct EnsembleStack {
  std::vector<ImageBuffer> members;
};

/// Streaming per-pixel mean and pooled spread (Welford), so an evaluation
/// image can be processed one member at a time.
class EnsembleAccumulator {
 public:
  /// Throws DimensionMismatch if the member differs in shape from the first.
  void add(const ImageBuffer& member);

  std::size_t count() const { return count_; }
  /// Throws EmptyStack.
  ImageBuffer mean_map() const;
  /// Throws StackTooSmall for fewer than 2 members.
  ImageBuffer std_map() const;

 private:
  std::size_t count_ = 0;
  ImageBuffer mean_;
  std::vector<double> m2_;
};

/// Per-pixel, per-channel arithmetic mean. Throws EmptyStack, DimensionMismatch.
ImageBuffer ensemble_mean(const EnsembleStack& stack);

/// Single-channel spread of the member colors around the ensemble mean with
/// the channels pooled:
///
///   sigma(r) = sqrt( 1/(C M) * sum_m sum_c (c_mc(r) - mean_c(r))^2 )
///
/// with C channels (3 for RGB). Population normalizer (M, not M - 1).
/// Throws StackTooSmall for M < 2, DimensionMismatch.
ImageBuffer ensemble_std(const EnsembleStack& stack);

/// Per-pixel Euclidean norm over channels of (prediction - reference).
ImageBuffer residual_magnitude(const ImageBuffer& prediction, const ImageBuffer& reference);

constexpr double kDensityFloor = 1e-6;

/// sqrt(std^2 + (1 / max(density, epsilon))^2) per pixel.
ImageBuffer density_augmented_uncertainty(const ImageBuffer& std_map, const ImageBuffer& accumulated_density,
                                          double epsilon = kDensityFloor);

struct UncertaintyMaps {
  ImageBuffer mean;
  ImageBuffer std;
  ImageBuffer residual;
  std::optional<ImageBuffer> density_weighted;
};

struct UncertaintySummary {
  std::optional<double> correlation;  // empty when either map has zero variance
  bool zero_variance = false;
  double mean_std = 0.0;
  double mean_residual = 0.0;
};

struct UncertaintyReport {
  UncertaintyMaps maps;
  UncertaintySummary summary;
};

/// Pearson correlation of two equally sized single-channel maps; empty when
/// either has zero variance.
std::optional<double> pearson_correlation(const ImageBuffer& a, const ImageBuffer& b);

UncertaintyReport uq_report(const EnsembleStack& stack, const ImageBuffer& reference,
                            const ImageBuffer* accumulated_density = nullptr, double epsilon = kDensityFloor);

}  // namespace posechain
