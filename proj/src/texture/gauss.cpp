#include <Eigen/Dense>
#include <cmath>

#include "milq/filtering.hpp"
#include "milq/texture.hpp"

namespace milq {

const char* filter_name(Filter f) {
  static const char* names[kNumFilters] = {"smoothed", "gradient_magnitude", "laplacian", "eigenvalue1",
                                           "eigenvalue2", "eigenvalue3", "gaussian_curvature", "eigen_magnitude"};
  return names[static_cast<int>(f)];
}

std::array<double, kNumFilters> filter_values(const std::array<double, 10>& d) {
  Eigen::Matrix3d h;
  h << d[kLxx], d[kLxy], d[kLxz],  //
      d[kLxy], d[kLyy], d[kLyz],   //
      d[kLxz], d[kLyz], d[kLzz];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  solver.computeDirect(h, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = solver.eigenvalues();  // ascending
  const double l1 = ev[2], l2 = ev[1], l3 = ev[0];
  std::array<double, kNumFilters> out{};
  out[static_cast<int>(Filter::Smoothed)] = d[kL];
  out[static_cast<int>(Filter::GradientMagnitude)] = std::sqrt(d[kLx] * d[kLx] + d[kLy] * d[kLy] + d[kLz] * d[kLz]);
  out[static_cast<int>(Filter::Laplacian)] = d[kLxx] + d[kLyy] + d[kLzz];
  out[static_cast<int>(Filter::Eigenvalue1)] = l1;
  out[static_cast<int>(Filter::Eigenvalue2)] = l2;
  out[static_cast<int>(Filter::Eigenvalue3)] = l3;
  out[static_cast<int>(Filter::GaussianCurvature)] = l1 * l2 * l3;
  out[static_cast<int>(Filter::EigenMagnitude)] = std::sqrt(l1 * l1 + l2 * l2 + l3 * l3);
  return out;
}

namespace {

// Converts voxel-unit derivatives to mm units in place.
void to_physical(std::array<double, 10>& d, const Spacing& s) {
  d[kLx] /= s.sx;
  d[kLy] /= s.sy;
  d[kLz] /= s.sz;
  d[kLxx] /= s.sx * s.sx;
  d[kLyy] /= s.sy * s.sy;
  d[kLzz] /= s.sz * s.sz;
  d[kLxy] /= s.sx * s.sy;
  d[kLxz] /= s.sx * s.sz;
  d[kLyz] /= s.sy * s.sz;
}

}  // namespace

ResponseBank gauss_filter_bank(const Patch& patch, const Spacing& spacing, const GaussParams& params) {
  if (patch.size < 1) throw InvalidArgument("filter bank needs a non-empty patch");
  const Dims dims{patch.size, patch.size, patch.size};
  const std::vector<double> src(patch.values.begin(), patch.values.end());
  ResponseBank bank;
  bank.channels.assign(params.channels(), std::vector<double>(src.size()));
  for (std::size_t s = 0; s < params.scales_mm.size(); ++s) {
    const double scale = params.scales_mm[s];
    const auto kx = make_gaussian_kernel(scale / spacing.sx, params.truncate);
    const auto ky = make_gaussian_kernel(scale / spacing.sy, params.truncate);
    const auto kz = make_gaussian_kernel(scale / spacing.sz, params.truncate);
    for (const auto* k : {&kx, &ky, &kz}) {
      if (k->radius > patch.size - 1) {
        throw InvalidArgument("patch of size " + std::to_string(patch.size) + " too small for scale " +
                              std::to_string(scale) + " mm (kernel radius " + std::to_string(k->radius) + ")");
      }
    }
    const auto derivs = gaussian_derivatives(src, dims, {&kx, &ky, &kz}, Boundary::Mirror);
    for (std::size_t i = 0; i < src.size(); ++i) {
      std::array<double, 10> d{};
      for (int k = 0; k < kNumDerivs; ++k) d[static_cast<std::size_t>(k)] = derivs[static_cast<std::size_t>(k)][i];
      to_physical(d, spacing);
      const auto f = filter_values(d);
      for (int fi = 0; fi < kNumFilters; ++fi) {
        bank.channels[channel_index(s, static_cast<Filter>(fi))][i] = f[static_cast<std::size_t>(fi)];
      }
    }
  }
  return bank;
}

FeatureVector histogram_features(const ResponseBank& bank, const BinningScheme& bins) {
  if (bins.channels() < bank.channels.size()) {
    throw InvalidArgument("binning scheme has " + std::to_string(bins.channels()) + " channels, need " +
                          std::to_string(bank.channels.size()));
  }
  FeatureVector fv;
  fv.schema = Schema::Gauss;
  fv.values.assign(bank.channels.size() * kNumBins, 0.0);
  for (std::size_t c = 0; c < bank.channels.size(); ++c) {
    const auto& values = bank.channels[c];
    if (values.empty()) throw InvalidArgument("empty response channel");
    std::array<std::size_t, kNumBins> counts{};
    for (double v : values) ++counts[static_cast<std::size_t>(bins.bin_of(c, v))];
    for (int b = 0; b < kNumBins; ++b) {
      fv.values[c * kNumBins + static_cast<std::size_t>(b)] =
          static_cast<double>(counts[static_cast<std::size_t>(b)]) / static_cast<double>(values.size());
    }
  }
  return fv;
}

FeatureVector gauss_features(const Patch& patch, const Spacing& spacing, const GaussParams& params,
                             const BinningScheme& bins) {
  if (bins.channels() != params.channels()) {
    throw InvalidArgument("binning scheme is missing channels: has " + std::to_string(bins.channels()) + ", need " +
                          std::to_string(params.channels()));
  }
  return histogram_features(gauss_filter_bank(patch, spacing, params), bins);
}

}  // namespace milq
