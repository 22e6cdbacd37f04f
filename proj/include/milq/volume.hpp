#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "milq/error.hpp"

namespace milq {

struct Dims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  int operator[](int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }
  bool operator==(const Dims&) const = default;
};

/// Voxel size in mm along x, y, z.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  double operator[](int axis) const { return axis == 0 ? sx : (axis == 1 ? sy : sz); }
  bool operator==(const Spacing&) const = default;
};

using Index3 = std::array<int, 3>;

/// Dense 3D array in x-fastest order with voxel spacing.
template <typename T>
class Grid3 {
 public:
  Grid3() = default;

  Grid3(Dims dims, Spacing spacing, T fill = T{}) : dims_(dims), spacing_(spacing) {
    validate_geometry();
    data_.assign(dims_.count(), fill);
  }

  Grid3(Dims dims, Spacing spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    validate_geometry();
    if (data_.size() != dims_.count()) {
      throw InvalidArgument("grid data length " + std::to_string(data_.size()) +
                            " does not match dims " + std::to_string(dims_.count()));
    }
  }

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  Index3 coords(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(dims_.nx);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
  }
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  T& at(int x, int y, int z) { return data_[index(x, y, z)]; }
  const T& at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool operator==(const Grid3&) const = default;

 private:
  void validate_geometry() const {
    if (dims_.nx < 1 || dims_.ny < 1 || dims_.nz < 1) throw InvalidArgument("grid dims must be >= 1");
    if (!(spacing_.sx > 0.0 && spacing_.sy > 0.0 && spacing_.sz > 0.0)) {
      throw InvalidArgument("grid spacing must be > 0");
    }
  }

  Dims dims_;
  Spacing spacing_;
  std::vector<T> data_;
};

using Image = Grid3<std::int16_t>;
using Mask = Grid3<std::uint8_t>;

std::size_t count_set(const Mask& mask);

/// A scan: HU-like intensities plus an optional lung mask of identical geometry.
class Volume {
 public:
  Volume() = default;
  explicit Volume(Image image, std::optional<Mask> mask = std::nullopt);

  const Image& image() const { return image_; }
  const std::optional<Mask>& mask() const { return mask_; }
  const Dims& dims() const { return image_.dims(); }
  const Spacing& spacing() const { return image_.spacing(); }

  bool operator==(const Volume&) const = default;

 private:
  Image image_;
  std::optional<Mask> mask_;
};

/// Cubic sub-volume copied out of a Volume.
struct Patch {
  Index3 origin{};
  int size = 0;
  std::vector<std::int16_t> values;  // size^3, x-fastest
  std::string source_id;

  Index3 center() const { return {origin[0] + size / 2, origin[1] + size / 2, origin[2] + size / 2}; }
  std::int16_t at(int x, int y, int z) const {
    return values[static_cast<std::size_t>(x) +
                  static_cast<std::size_t>(size) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(size) * z)];
  }
};

/// Copies the size^3 patch whose corner is `origin`; throws when it leaves the volume.
Patch extract_patch(const Volume& v, Index3 origin, int size, std::string source_id = {});

/// Centers whose patch fits inside the volume and lies on a masked voxel (x-fastest order).
std::vector<Index3> valid_patch_centers(const Volume& v, int size);

/// Draws n patch centers uniformly with replacement from valid_patch_centers.
std::vector<Index3> sample_patch_centers(const Volume& v, int n, int size, std::uint64_t seed);

std::vector<Patch> sample_patches(const Volume& v, int n, int size, std::uint64_t seed,
                                  const std::string& source_id = {});

// ---------------------------------------------------------------------------
// File format: text header (dims / spacing / dtype / data_file, optional
// mask_file) next to a raw little-endian payload in x-fastest order.

Volume load_volume(const std::filesystem::path& header);
void save_volume(const Volume& v, const std::filesystem::path& header);

Mask load_mask(const std::filesystem::path& header);
void save_mask(const Mask& m, const std::filesystem::path& header);

// ---------------------------------------------------------------------------
// Synthetic phantoms.

struct PhantomSpec {
  Dims dims{96, 96, 96};
  Spacing spacing{};
  double background_mean = -850.0;
  double background_sd = 60.0;  // white-noise sd before smoothing
  int lesion_count_min = 0;
  int lesion_count_max = 0;
  double lesion_radius_min_mm = 5.0;
  double lesion_radius_max_mm = 10.0;
  double lesion_mean = -990.0;
  double lesion_sd = 20.0;
  double smoothing_mm = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Lesion {
  std::array<double, 3> center_mm{};
  double radius_mm = 0.0;
};

struct Phantom {
  Volume volume;  // mask = the ellipsoidal "lung"
  Mask lesion_mask;
  double lesion_fraction = 0.0;  // lesion voxels / lung voxels
  std::vector<Lesion> lesions;
};

/// Semi-axes of the lung ellipsoid as a fraction of each extent.
inline constexpr double kLungSemiAxisFraction = 0.45;

Phantom generate_phantom(const PhantomSpec& spec);

}  // namespace milq
