#include "milq/filtering.hpp"
#include "milq/texture.hpp"

namespace milq {

std::array<double, 10> ScaleResponses::at(std::size_t idx) const {
  std::array<double, 10> d{};
  for (std::size_t k = 0; k < 10; ++k) d[k] = derivs[k][idx];
  return d;
}

ScaleResponses normalized_derivatives(const Volume& v, double scale_mm, double truncate) {
  if (!v.mask()) throw InvalidArgument("normalized convolution requires a mask");
  const Dims dims = v.dims();
  const Spacing sp = v.spacing();
  const auto kx = make_gaussian_kernel(scale_mm / sp.sx, truncate);
  const auto ky = make_gaussian_kernel(scale_mm / sp.sy, truncate);
  const auto kz = make_gaussian_kernel(scale_mm / sp.sz, truncate);
  const std::array<const GaussianKernel1D*, 3> kernels{&kx, &ky, &kz};

  const std::size_t n = dims.count();
  std::vector<double> masked(n), weight(n);
  const auto img = v.image().values();
  const auto msk = v.mask()->values();
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = msk[i] ? 1.0 : 0.0;
    masked[i] = msk[i] ? static_cast<double>(img[i]) : 0.0;
  }
  const auto a = gaussian_derivatives(masked, dims, kernels, Boundary::Zero);
  masked = {};
  const auto b = gaussian_derivatives(weight, dims, kernels, Boundary::Zero);

  ScaleResponses out;
  out.dims = dims;
  for (auto& d : out.derivs) d.assign(n, 0.0f);
  const double inv[3] = {1.0 / sp.sx, 1.0 / sp.sy, 1.0 / sp.sz};
  // First-derivative slot per axis and second-derivative slot per axis pair.
  constexpr int first[3] = {kLx, kLy, kLz};
  constexpr int second[3][3] = {{kLxx, kLxy, kLxz}, {kLxy, kLyy, kLyz}, {kLxz, kLyz, kLzz}};
  for (std::size_t i = 0; i < n; ++i) {
    const double bw = b[kL][i];
    if (bw < 1e-6) continue;
    const double nv = a[kL][i] / bw;
    double ni[3];
    for (int ax = 0; ax < 3; ++ax) ni[ax] = (a[first[ax]][i] - nv * b[first[ax]][i]) / bw;
    out.derivs[kL][i] = static_cast<float>(nv);
    for (int ax = 0; ax < 3; ++ax) out.derivs[static_cast<std::size_t>(first[ax])][i] = static_cast<float>(ni[ax] * inv[ax]);
    for (int p = 0; p < 3; ++p) {
      for (int q = p; q < 3; ++q) {
        const int slot = second[p][q];
        const double nij =
            (a[slot][i] - ni[p] * b[first[q]][i] - ni[q] * b[first[p]][i] - nv * b[slot][i]) / bw;
        out.derivs[static_cast<std::size_t>(slot)][i] = static_cast<float>(nij * inv[p] * inv[q]);
      }
    }
  }
  return out;
}

std::vector<int> sublattice_offsets(int size, int stride) {
  if (stride < 1) throw InvalidArgument("sub-lattice stride must be >= 1");
  const int c = size / 2;
  std::vector<int> offs;
  for (int p = c % stride; p < size; p += stride) offs.push_back(p);
  return offs;
}

std::vector<PatchResponses> collect_patch_responses(const Volume& v, const std::vector<Index3>& centers, int size,
                                                    const GaussParams& params, int stride) {
  if (!v.mask()) throw InvalidArgument("collecting patch responses requires a mask");
  const Mask& mask = *v.mask();
  const int half = size / 2;
  const auto offs = sublattice_offsets(size, stride);

  std::vector<PatchResponses> out(centers.size());
  std::vector<std::vector<std::size_t>> voxels(centers.size());
  for (std::size_t p = 0; p < centers.size(); ++p) {
    const Index3 o{centers[p][0] - half, centers[p][1] - half, centers[p][2] - half};
    for (int a = 0; a < 3; ++a) {
      if (o[static_cast<std::size_t>(a)] < 0 || o[static_cast<std::size_t>(a)] + size > v.dims()[a]) {
        throw InvalidArgument("patch centred at (" + std::to_string(centers[p][0]) + "," +
                              std::to_string(centers[p][1]) + "," + std::to_string(centers[p][2]) +
                              ") exceeds volume bounds");
      }
    }
    for (int dz : offs) {
      for (int dy : offs) {
        for (int dx : offs) {
          const std::size_t idx = mask.index(o[0] + dx, o[1] + dy, o[2] + dz);
          if (mask[idx]) voxels[p].push_back(idx);
        }
      }
    }
    out[p].center = centers[p];
    out[p].channels.assign(params.channels(), {});
    for (auto& ch : out[p].channels) ch.reserve(voxels[p].size());
  }

  for (std::size_t s = 0; s < params.scales_mm.size(); ++s) {
    const auto responses = normalized_derivatives(v, params.scales_mm[s], params.truncate);
    for (std::size_t p = 0; p < centers.size(); ++p) {
      for (std::size_t idx : voxels[p]) {
        const auto f = filter_values(responses.at(idx));
        for (int fi = 0; fi < kNumFilters; ++fi) {
          out[p].channels[channel_index(s, static_cast<Filter>(fi))].push_back(static_cast<float>(f[static_cast<std::size_t>(fi)]));
        }
      }
    }
  }
  return out;
}

FeatureVector histogram_features(const PatchResponses& responses, const BinningScheme& bins) {
  if (bins.channels() < responses.channels.size()) {
    throw InvalidArgument("binning scheme is missing channels");
  }
  FeatureVector fv;
  fv.schema = Schema::Gauss;
  fv.values.assign(responses.channels.size() * kNumBins, 0.0);
  for (std::size_t c = 0; c < responses.channels.size(); ++c) {
    const auto& values = responses.channels[c];
    if (values.empty()) throw InvalidArgument("empty response channel");
    std::array<std::size_t, kNumBins> counts{};
    for (float v : values) ++counts[static_cast<std::size_t>(bins.bin_of(c, v))];
    for (int b = 0; b < kNumBins; ++b) {
      fv.values[c * kNumBins + static_cast<std::size_t>(b)] =
          static_cast<double>(counts[static_cast<std::size_t>(b)]) / static_cast<double>(values.size());
    }
  }
  return fv;
}

}  // namespace milq
