#pragma once

#include <array>
#include <span>
#include <vector>

#include "milq/volume.hpp"

namespace milq {

using RealGrid = Grid3<double>;

/// Sampled Gaussian and its first two derivatives, truncated at `truncate`·sigma.
///
/// Only the one-sided weights (k = 1..radius) are stored; the centre weight is
/// implied so that the filters act as
///
///   order 0:  I(x) + sum_k w0[k] (I(x-k) + I(x+k) - 2 I(x))
///   order 1:         sum_k w1[k] (I(x+k) - I(x-k))
///   order 2:         sum_k w2[k] (I(x-k) + I(x+k) - 2 I(x))
///
/// The weights are moment-normalised: order 0 sums to one, order 1 returns
/// slope 1 on a linear ramp and order 2 returns 2 on x^2. Constants map to
/// exactly the same constant (order 0) or exactly zero (orders 1, 2).
struct GaussianKernel1D {
  double sigma = 0.0;
  int radius = 0;
  std::vector<double> w0, w1, w2;  // index k-1 for k = 1..radius

  /// Full tap array t[m + radius], m = -radius..radius, with out(x) = sum_m t[m] I(x - m).
  std::vector<double> taps(int order) const;
};

/// Throws InvalidArgument when sigma < 0.3 voxels.
GaussianKernel1D make_gaussian_kernel(double sigma_voxels, double truncate = 4.0);

enum class Boundary {
  Mirror,  // reflect without repeating the edge voxel; requires radius < extent
  Zero,
};

/// Filters every line of `in` along `axis` with the given derivative order.
void convolve_axis(std::span<const double> in, std::span<double> out, const Dims& dims, int axis,
                   const GaussianKernel1D& kernel, int order, Boundary boundary);

RealGrid convolve_separable(const RealGrid& in, const std::array<const GaussianKernel1D*, 3>& kernels,
                            const std::array<int, 3>& orders, Boundary boundary);

/// Derivative slots returned by gaussian_derivatives (voxel units).
enum Deriv : int { kL = 0, kLx, kLy, kLz, kLxx, kLxy, kLxz, kLyy, kLyz, kLzz, kNumDerivs };

/// All Gaussian derivatives up to order two, sharing intermediate passes.
std::array<std::vector<double>, kNumDerivs> gaussian_derivatives(std::span<const double> in, const Dims& dims,
                                                                 const std::array<const GaussianKernel1D*, 3>& kernels,
                                                                 Boundary boundary);

}  // namespace milq
