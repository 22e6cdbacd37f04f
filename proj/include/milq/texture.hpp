#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "milq/volume.hpp"

namespace milq {

enum class Schema { Cooc, Gauss, Both };

std::string to_string(Schema s);
Schema parse_schema(const std::string& s);

inline constexpr int kNumDirections = 13;
inline constexpr int kNumHaralick = 12;
inline constexpr int kNumFilters = 8;
inline constexpr int kNumBins = 10;

std::size_t feature_dim(Schema s, std::size_t num_distances = 5, std::size_t num_scales = 4);

struct FeatureVector {
  std::vector<double> values;
  Schema schema = Schema::Cooc;

  std::size_t dim() const { return values.size(); }
};

// ---------------------------------------------------------------------------
// Co-occurrence (Haralick) features

/// The 13 unique half-neighbourhood directions, in output order.
const std::array<Index3, kNumDirections>& cooc_directions();

enum class Haralick : int {
  Energy,
  Entropy,
  Correlation,
  Contrast,
  Homogeneity,
  Variance,
  SumMean,
  InverseDifferenceMoment,
  Inertia,
  ClusterShade,
  ClusterTendency,
  MaxProbability,
};

const char* haralick_name(Haralick h);

struct CoocParams {
  int levels = 32;
  std::vector<int> distances{1, 2, 3, 4, 5};
  double window_lo = -1024.0;  // intensities are clamped to [window_lo, window_hi]
  double window_hi = 0.0;
};

/// Gray level of an intensity under the fixed linear window.
int quantize_level(double value, const CoocParams& params);

/// Symmetric, normalised gray-level co-occurrence matrix (levels x levels, row-major).
struct Glcm {
  int levels = 0;
  std::vector<double> p;
  double pairs = 0.0;  // number of (unordered) voxel pairs counted

  double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

/// Throws DataError when no voxel pair fits inside the patch for this offset.
Glcm build_glcm(const Patch& patch, const Index3& offset, const CoocParams& params);

/// The twelve statistics in Haralick enum order.
///
/// With p(i,j) the normalised matrix, px the (equal) marginals, mu = sum i p(i,j),
/// var = sum (i-mu)^2 p(i,j):
///   energy = sum p^2, entropy = -sum p ln p, correlation = sum (i-mu)(j-mu) p / var
///   (1 when var = 0), contrast = inertia = sum (i-j)^2 p, homogeneity = sum p / (1+|i-j|),
///   variance = var, sum mean = sum (i+j) p, inverse difference moment = sum p / (1+(i-j)^2),
///   cluster shade = sum (i+j-2mu)^3 p, cluster tendency = sum (i+j-2mu)^2 p, max probability = max p.
std::array<double, kNumHaralick> haralick_features(const Glcm& glcm);

/// 13 directions x |distances| x 12 statistics, direction-major then distance then statistic.
FeatureVector cooc_features(const Patch& patch, const CoocParams& params = {});

// ---------------------------------------------------------------------------
// Gaussian filter bank

enum class Filter : int {
  Smoothed,
  GradientMagnitude,
  Laplacian,
  Eigenvalue1,  // Hessian eigenvalues, signed, descending
  Eigenvalue2,
  Eigenvalue3,
  GaussianCurvature,
  EigenMagnitude,
};

const char* filter_name(Filter f);

struct GaussParams {
  std::vector<double> scales_mm{0.6, 1.2, 2.4, 4.8};
  double truncate = 4.0;

  std::size_t channels() const { return scales_mm.size() * kNumFilters; }
};

/// Channel index of a (scale, filter) pair: scale-major.
inline std::size_t channel_index(std::size_t scale, Filter f) {
  return scale * kNumFilters + static_cast<std::size_t>(f);
}

/// The eight filter values at one voxel from its ten Gaussian derivatives
/// (order L, Lx, Ly, Lz, Lxx, Lxy, Lxz, Lyy, Lyz, Lzz, physical units).
std::array<double, kNumFilters> filter_values(const std::array<double, 10>& derivs);

/// Per-channel responses over every patch voxel (x-fastest), computed by
/// separable Gaussian-derivative convolution with mirror boundary padding.
struct ResponseBank {
  std::vector<std::vector<double>> channels;
};

ResponseBank gauss_filter_bank(const Patch& patch, const Spacing& spacing, const GaussParams& params = {});

/// Equal-frequency histogram edges per channel.
struct BinningScheme {
  std::vector<std::array<double, kNumBins + 1>> edges;  // [0] = -inf, [10] = +inf
  std::string provenance;
  std::vector<std::string> fit_subjects;  // subjects whose responses were pooled for the fit

  std::size_t channels() const { return edges.size(); }
  int bin_of(std::size_t channel, double value) const;
  bool operator==(const BinningScheme&) const = default;
};

/// Fits decile edges on each channel's sample. Throws InvalidArgument for a
/// channel with fewer than 100 values and DataError for fewer than 10 distinct values.
BinningScheme fit_adaptive_bins(const std::vector<std::vector<double>>& samples, std::string provenance = {},
                                std::vector<std::string> fit_subjects = {});

/// Normalised 10-bin histogram of each channel, concatenated.
FeatureVector gauss_features(const Patch& patch, const Spacing& spacing, const GaussParams& params,
                             const BinningScheme& bins);

FeatureVector histogram_features(const ResponseBank& bank, const BinningScheme& bins);

struct TextureConfig {
  CoocParams cooc;
  GaussParams gauss;
};

/// Dispatches on schema; `both` is cooc followed by gauss. `bins` is required unless schema is cooc.
FeatureVector extract(const Patch& patch, const Spacing& spacing, Schema schema, const TextureConfig& config,
                      const BinningScheme* bins);

// ---------------------------------------------------------------------------
// Whole-volume filtering under a mask (normalised convolution)

/// Ten normalised-convolution derivatives of one scale over a whole volume.
///
/// With A = (mask*I) conv G and B = mask conv G, the smoothed image is N = A/B
/// and its derivatives follow from the quotient rule applied to the Gaussian
/// derivatives of A and B. Voxels with B below 1e-6 get zero responses.
struct ScaleResponses {
  Dims dims;
  std::array<std::vector<float>, 10> derivs;

  std::array<double, 10> at(std::size_t idx) const;
};

ScaleResponses normalized_derivatives(const Volume& v, double scale_mm, double truncate = 4.0);

/// Filter responses of one patch on a voxel sub-lattice restricted to the mask.
///
/// The sub-lattice keeps patch-relative positions p with (p - size/2) divisible
/// by `stride`, so the patch centre is always included.
struct PatchResponses {
  Index3 center{};
  std::vector<std::vector<float>> channels;  // [channel][voxel]
};

std::vector<int> sublattice_offsets(int size, int stride);

/// Responses for every centre, one scale at a time so at most one scale of
/// whole-volume derivatives is alive. Requires a mask on the volume.
std::vector<PatchResponses> collect_patch_responses(const Volume& v, const std::vector<Index3>& centers, int size,
                                                    const GaussParams& params, int stride);

FeatureVector histogram_features(const PatchResponses& responses, const BinningScheme& bins);

}  // namespace milq
