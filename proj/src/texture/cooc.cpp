#include <algorithm>
#include <cmath>

#include "milq/texture.hpp"

namespace milq {

const std::array<Index3, kNumDirections>& cooc_directions() {
  static const std::array<Index3, kNumDirections> dirs{{
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1},
      {0, 1, 1}, {0, 1, -1}, {1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1},
  }};
  return dirs;
}

const char* haralick_name(Haralick h) {
  static const char* names[kNumHaralick] = {
      "energy",   "entropy",  "correlation", "contrast",      "homogeneity",       "variance",
      "sum_mean", "idm",      "inertia",     "cluster_shade", "cluster_tendency",  "max_probability",
  };
  return names[static_cast<int>(h)];
}

int quantize_level(double value, const CoocParams& params) {
  const double t = (value - params.window_lo) / (params.window_hi - params.window_lo);
  const int level = static_cast<int>(std::floor(t * params.levels));
  return std::clamp(level, 0, params.levels - 1);
}

namespace {

void validate(const Patch& patch, const CoocParams& params) {
  if (patch.size < 1 || patch.values.empty()) throw InvalidArgument("co-occurrence needs a non-empty patch");
  if (params.levels < 2) throw InvalidArgument("co-occurrence needs at least 2 gray levels");
  if (!(params.window_hi > params.window_lo)) throw InvalidArgument("co-occurrence window is empty");
}

std::vector<int> quantize_patch(const Patch& patch, const CoocParams& params) {
  std::vector<int> q(patch.values.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = quantize_level(patch.values[i], params);
  return q;
}

Glcm glcm_from_levels(const std::vector<int>& q, int size, const Index3& off, int levels,
                      std::vector<std::uint32_t>& counts) {
  counts.assign(static_cast<std::size_t>(levels) * levels, 0u);
  const int x0 = std::max(0, -off[0]), x1 = std::min(size, size - off[0]);
  const int y0 = std::max(0, -off[1]), y1 = std::min(size, size - off[1]);
  const int z0 = std::max(0, -off[2]), z1 = std::min(size, size - off[2]);
  const auto s = static_cast<std::ptrdiff_t>(size);
  const std::ptrdiff_t delta = off[0] + s * (off[1] + s * off[2]);
  std::uint64_t pairs = 0;
  for (int z = z0; z < z1; ++z) {
    for (int y = y0; y < y1; ++y) {
      const std::ptrdiff_t row = s * (y + s * z);
      for (int x = x0; x < x1; ++x) {
        const int a = q[static_cast<std::size_t>(row + x)];
        const int b = q[static_cast<std::size_t>(row + x + delta)];
        ++counts[static_cast<std::size_t>(a) * levels + b];
        ++pairs;
      }
    }
  }
  if (pairs == 0) {
    throw DataError("patch of size " + std::to_string(size) + " has no voxel pairs for offset (" +
                    std::to_string(off[0]) + "," + std::to_string(off[1]) + "," + std::to_string(off[2]) + ")");
  }
  Glcm g;
  g.levels = levels;
  g.pairs = static_cast<double>(pairs);
  g.p.resize(counts.size());
  const double total = 2.0 * static_cast<double>(pairs);
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const auto ij = static_cast<std::size_t>(i) * levels + j;
      const auto ji = static_cast<std::size_t>(j) * levels + i;
      g.p[ij] = static_cast<double>(counts[ij] + counts[ji]) / total;
    }
  }
  return g;
}

}  // namespace

Glcm build_glcm(const Patch& patch, const Index3& offset, const CoocParams& params) {
  validate(patch, params);
  std::vector<std::uint32_t> counts;
  return glcm_from_levels(quantize_patch(patch, params), patch.size, offset, params.levels, counts);
}

std::array<double, kNumHaralick> haralick_features(const Glcm& glcm) {
  const int n = glcm.levels;
  double mu = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) mu += i * glcm.at(i, j);
  }
  double energy = 0, entropy = 0, cov = 0, contrast = 0, homogeneity = 0, variance = 0, sum_mean = 0, idm = 0,
         shade = 0, tendency = 0, maxp = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = glcm.at(i, j);
      if (p == 0.0) continue;
      const double diff = i - j;
      const double cluster = i + j - 2.0 * mu;
      energy += p * p;
      entropy -= p * std::log(p);
      cov += (i - mu) * (j - mu) * p;
      contrast += diff * diff * p;
      homogeneity += p / (1.0 + std::abs(diff));
      variance += (i - mu) * (i - mu) * p;
      sum_mean += (i + j) * p;
      idm += p / (1.0 + diff * diff);
      shade += cluster * cluster * cluster * p;
      tendency += cluster * cluster * p;
      maxp = std::max(maxp, p);
    }
  }
  const double correlation = variance > 0.0 ? cov / variance : 1.0;
  return {energy, entropy, correlation, contrast, homogeneity, variance, sum_mean, idm, contrast, shade, tendency, maxp};
}

FeatureVector cooc_features(const Patch& patch, const CoocParams& params) {
  validate(patch, params);
  if (params.distances.empty()) throw InvalidArgument("co-occurrence needs at least one distance");
  const auto q = quantize_patch(patch, params);
  FeatureVector fv;
  fv.schema = Schema::Cooc;
  fv.values.reserve(kNumDirections * params.distances.size() * kNumHaralick);
  std::vector<std::uint32_t> counts;
  for (const auto& dir : cooc_directions()) {
    for (int dist : params.distances) {
      const Index3 off{dir[0] * dist, dir[1] * dist, dir[2] * dist};
      const auto stats = haralick_features(glcm_from_levels(q, patch.size, off, params.levels, counts));
      fv.values.insert(fv.values.end(), stats.begin(), stats.end());
    }
  }
  return fv;
}

}  // namespace milq
