#include <cmath>
#include <string>

#include "milq/filtering.hpp"

namespace milq {

GaussianKernel1D make_gaussian_kernel(double sigma, double truncate) {
  if (!(sigma >= 0.3)) throw InvalidArgument("gaussian sigma must be >= 0.3 voxels, got " + std::to_string(sigma));
  GaussianKernel1D k;
  k.sigma = sigma;
  k.radius = static_cast<int>(std::ceil(truncate * sigma));
  const int r = k.radius;
  std::vector<double> g(static_cast<std::size_t>(r));
  double sum_g = 0.0, sum_k2g = 0.0, sum_shape2 = 0.0;
  for (int i = 1; i <= r; ++i) {
    const double gi = std::exp(-0.5 * i * i / (sigma * sigma));
    g[static_cast<std::size_t>(i - 1)] = gi;
    sum_g += gi;
    sum_k2g += static_cast<double>(i) * i * gi;
    sum_shape2 += (static_cast<double>(i) * i - sigma * sigma) * gi * i * i;
  }
  const double norm0 = 1.0 + 2.0 * sum_g;
  k.w0.resize(g.size());
  k.w1.resize(g.size());
  k.w2.resize(g.size());
  for (int i = 1; i <= r; ++i) {
    const auto j = static_cast<std::size_t>(i - 1);
    k.w0[j] = g[j] / norm0;
    k.w1[j] = i * g[j] / (2.0 * sum_k2g);
    k.w2[j] = (static_cast<double>(i) * i - sigma * sigma) * g[j] / sum_shape2;
  }
  return k;
}

std::vector<double> GaussianKernel1D::taps(int order) const {
  const int r = radius;
  std::vector<double> t(static_cast<std::size_t>(2 * r + 1), 0.0);
  auto at = [&](int m) -> double& { return t[static_cast<std::size_t>(m + r)]; };
  double side = 0.0;
  for (int k = 1; k <= r; ++k) {
    const auto j = static_cast<std::size_t>(k - 1);
    switch (order) {
      case 0:
        at(k) = at(-k) = w0[j];
        side += w0[j];
        break;
      case 1:
        at(-k) = w1[j];
        at(k) = -w1[j];
        break;
      case 2:
        at(k) = at(-k) = w2[j];
        side += w2[j];
        break;
      default:
        throw InvalidArgument("derivative order must be 0, 1 or 2");
    }
  }
  if (order == 0) at(0) = 1.0 - 2.0 * side;
  if (order == 2) at(0) = -2.0 * side;
  return t;
}

void convolve_axis(std::span<const double> in, std::span<double> out, const Dims& dims, int axis,
                   const GaussianKernel1D& kernel, int order, Boundary boundary) {
  const int n = dims[axis];
  const int r = kernel.radius;
  if (boundary == Boundary::Mirror && r > n - 1 && r > 0) {
    throw InvalidArgument("extent " + std::to_string(n) + " too small for kernel radius " + std::to_string(r));
  }
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(dims.nx)
                                                        : static_cast<std::size_t>(dims.nx) * dims.ny);
  const std::size_t lines = dims.count() / static_cast<std::size_t>(n);
  std::vector<double> buf(static_cast<std::size_t>(n + 2 * r));
  const double* w = order == 0 ? kernel.w0.data() : (order == 1 ? kernel.w1.data() : kernel.w2.data());

  for (std::size_t line = 0; line < lines; ++line) {
    std::size_t base;
    if (axis == 0) {
      base = line * static_cast<std::size_t>(n);
    } else if (axis == 1) {
      const std::size_t x = line % static_cast<std::size_t>(dims.nx);
      const std::size_t z = line / static_cast<std::size_t>(dims.nx);
      base = x + z * static_cast<std::size_t>(dims.nx) * dims.ny;
    } else {
      base = line;
    }
    double* b = buf.data() + r;
    for (int i = 0; i < n; ++i) b[i] = in[base + static_cast<std::size_t>(i) * stride];
    for (int k = 1; k <= r; ++k) {
      if (boundary == Boundary::Mirror) {
        b[-k] = b[k];
        b[n - 1 + k] = b[n - 1 - k];
      } else {
        b[-k] = 0.0;
        b[n - 1 + k] = 0.0;
      }
    }
    for (int i = 0; i < n; ++i) {
      const double c = b[i];
      double acc = 0.0;
      if (order == 1) {
        for (int k = 1; k <= r; ++k) acc += w[k - 1] * (b[i + k] - b[i - k]);
      } else {
        for (int k = 1; k <= r; ++k) acc += w[k - 1] * ((b[i - k] - c) + (b[i + k] - c));
        if (order == 0) acc += c;
      }
      out[base + static_cast<std::size_t>(i) * stride] = acc;
    }
  }
}

RealGrid convolve_separable(const RealGrid& in, const std::array<const GaussianKernel1D*, 3>& kernels,
                            const std::array<int, 3>& orders, Boundary boundary) {
  std::vector<double> a(in.values().begin(), in.values().end());
  std::vector<double> b(a.size());
  for (int axis = 0; axis < 3; ++axis) {
    convolve_axis(a, b, in.dims(), axis, *kernels[static_cast<std::size_t>(axis)],
                  orders[static_cast<std::size_t>(axis)], boundary);
    a.swap(b);
  }
  return RealGrid(in.dims(), in.spacing(), std::move(a));
}

std::array<std::vector<double>, kNumDerivs> gaussian_derivatives(std::span<const double> in, const Dims& dims,
                                                                 const std::array<const GaussianKernel1D*, 3>& kernels,
                                                                 Boundary boundary) {
  const std::size_t n = dims.count();
  auto pass = [&](std::span<const double> src, int axis, int order) {
    std::vector<double> dst(n);
    convolve_axis(src, dst, dims, axis, *kernels[static_cast<std::size_t>(axis)], order, boundary);
    return dst;
  };
  // x pass, then y pass on each x result, then z pass: 19 one-dimensional passes.
  std::array<std::vector<double>, 3> x;
  for (int a = 0; a < 3; ++a) x[static_cast<std::size_t>(a)] = pass(in, 0, a);
  auto xy = [&](int a, int b) { return pass(x[static_cast<std::size_t>(a)], 1, b); };
  const auto x0y0 = xy(0, 0), x0y1 = xy(0, 1), x0y2 = xy(0, 2);
  const auto x1y0 = xy(1, 0), x1y1 = xy(1, 1), x2y0 = xy(2, 0);

  std::array<std::vector<double>, kNumDerivs> d;
  d[kL] = pass(x0y0, 2, 0);
  d[kLz] = pass(x0y0, 2, 1);
  d[kLzz] = pass(x0y0, 2, 2);
  d[kLy] = pass(x0y1, 2, 0);
  d[kLyz] = pass(x0y1, 2, 1);
  d[kLyy] = pass(x0y2, 2, 0);
  d[kLx] = pass(x1y0, 2, 0);
  d[kLxz] = pass(x1y0, 2, 1);
  d[kLxy] = pass(x1y1, 2, 0);
  d[kLxx] = pass(x2y0, 2, 0);
  return d;
}

}  // namespace milq
