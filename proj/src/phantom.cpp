#include <algorithm>
#include <cmath>
#include <limits>

#include "milq/filtering.hpp"
#include "milq/rng.hpp"
#include "milq/volume.hpp"

namespace milq {

void PhantomSpec::validate() const {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw InvalidArgument("phantom dims must be >= 1");
  if (!(spacing.sx > 0 && spacing.sy > 0 && spacing.sz > 0)) throw InvalidArgument("phantom spacing must be > 0");
  if (background_sd < 0 || lesion_sd < 0) throw InvalidArgument("phantom intensity sd must be >= 0");
  if (lesion_count_min < 0 || lesion_count_max < lesion_count_min) throw InvalidArgument("bad lesion count range");
  if (lesion_radius_min_mm < 0 || lesion_radius_max_mm < lesion_radius_min_mm) {
    throw InvalidArgument("bad lesion radius range");
  }
  if (!(lesion_mean < background_mean)) throw InvalidArgument("lesion mean must be below background mean");
  if (smoothing_mm < 0) throw InvalidArgument("smoothing scale must be >= 0");
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Dims d = spec.dims;
  const Spacing s = spec.spacing;
  Rng rng(spec.seed);

  std::vector<double> field(d.count());
  for (auto& v : field) v = rng.normal(spec.background_mean, spec.background_sd);

  // Lung: centred ellipsoid, semi-axes in voxels.
  const std::array<double, 3> centre{(d.nx - 1) / 2.0, (d.ny - 1) / 2.0, (d.nz - 1) / 2.0};
  const std::array<double, 3> semi{kLungSemiAxisFraction * d.nx, kLungSemiAxisFraction * d.ny,
                                   kLungSemiAxisFraction * d.nz};
  Mask lung(d, s, 0);
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const double ex = (x - centre[0]) / semi[0];
        const double ey = (y - centre[1]) / semi[1];
        const double ez = (z - centre[2]) / semi[2];
        if (ex * ex + ey * ey + ez * ez <= 1.0) lung.at(x, y, z) = 1;
      }
    }
  }

  Phantom out;
  out.lesion_mask = Mask(d, s, 0);
  const int count = static_cast<int>(rng.uniform_int(spec.lesion_count_min, spec.lesion_count_max));
  for (int li = 0; li < count; ++li) {
    const double r = rng.uniform(spec.lesion_radius_min_mm, spec.lesion_radius_max_mm);
    std::array<double, 3> inner{};
    for (int a = 0; a < 3; ++a) {
      inner[static_cast<std::size_t>(a)] = semi[static_cast<std::size_t>(a)] * s[a] - r;
      if (!(inner[static_cast<std::size_t>(a)] > 0.0)) {
        throw InvalidArgument("lesion radius " + std::to_string(r) + " mm exceeds the volume extent");
      }
    }
    std::array<double, 3> c{};
    for (;;) {
      std::array<double, 3> u{};
      double rho = 0.0;
      for (std::size_t a = 0; a < 3; ++a) {
        u[a] = rng.uniform(-1.0, 1.0);
        rho += u[a] * u[a];
      }
      if (rho > 1.0) continue;
      for (std::size_t a = 0; a < 3; ++a) c[a] = centre[a] * s[static_cast<int>(a)] + u[a] * inner[a];
      break;
    }
    out.lesions.push_back({c, r});
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      lo[ua] = std::max(0, static_cast<int>(std::floor((c[ua] - r) / s[a])));
      hi[ua] = std::min(d[a] - 1, static_cast<int>(std::ceil((c[ua] + r) / s[a])));
    }
    for (int z = lo[2]; z <= hi[2]; ++z) {
      for (int y = lo[1]; y <= hi[1]; ++y) {
        for (int x = lo[0]; x <= hi[0]; ++x) {
          const double dx = x * s.sx - c[0], dy = y * s.sy - c[1], dz = z * s.sz - c[2];
          if (dx * dx + dy * dy + dz * dz > r * r || !lung.at(x, y, z)) continue;
          const std::size_t idx = lung.index(x, y, z);
          if (!out.lesion_mask[idx]) {
            out.lesion_mask[idx] = 1;
            field[idx] = rng.normal(spec.lesion_mean, spec.lesion_sd);
          }
        }
      }
    }
  }

  if (spec.smoothing_mm > 0.0) {
    const auto kx = make_gaussian_kernel(spec.smoothing_mm / s.sx);
    const auto ky = make_gaussian_kernel(spec.smoothing_mm / s.sy);
    const auto kz = make_gaussian_kernel(spec.smoothing_mm / s.sz);
    RealGrid grid(d, s, std::move(field));
    grid = convolve_separable(grid, {&kx, &ky, &kz}, {0, 0, 0}, Boundary::Mirror);
    field.assign(grid.values().begin(), grid.values().end());
  }

  std::vector<std::int16_t> data(d.count());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = std::clamp(std::round(field[i]), static_cast<double>(std::numeric_limits<std::int16_t>::min()),
                                static_cast<double>(std::numeric_limits<std::int16_t>::max()));
    data[i] = static_cast<std::int16_t>(v);
  }
  const std::size_t lung_voxels = count_set(lung);
  const std::size_t lesion_voxels = count_set(out.lesion_mask);
  out.lesion_fraction = lung_voxels ? static_cast<double>(lesion_voxels) / static_cast<double>(lung_voxels) : 0.0;
  out.volume = Volume(Image(d, s, std::move(data)), std::move(lung));
  return out;
}

}  // namespace milq
