#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "milq/rng.hpp"
#include "milq/volume.hpp"

using namespace milq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("milq_test_volume_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Volume small_volume() {
  Image img({5, 4, 3}, {0.7, 0.8, 1.5});
  Mask m({5, 4, 3}, {0.7, 0.8, 1.5}, 0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    img[i] = static_cast<std::int16_t>(static_cast<int>(i) * 37 - 1024);
    m[i] = i % 3 == 0;
  }
  return Volume(img, m);
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("grid indexing is x-fastest") {
  Image img({3, 4, 5}, {});
  CHECK(img.index(1, 0, 0) == 1);
  CHECK(img.index(0, 1, 0) == 3);
  CHECK(img.index(0, 0, 1) == 12);
  const auto c = img.coords(img.index(2, 3, 4));
  CHECK(c == Index3{2, 3, 4});
}

TEST_CASE("grid rejects bad geometry") {
  CHECK_THROWS_AS(Image({0, 1, 1}, {}), InvalidArgument);
  CHECK_THROWS_AS(Image({1, 1, 1}, {0.0, 1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(Image({2, 2, 2}, {}, std::vector<std::int16_t>(7)), InvalidArgument);
}

TEST_CASE("volume round trip preserves values, spacing and mask") {
  const auto dir = scratch("roundtrip");
  const Volume v = small_volume();
  save_volume(v, dir / "v.hdr");
  const Volume back = load_volume(dir / "v.hdr");
  CHECK(back == v);
  CHECK(back.spacing().sz == doctest::Approx(1.5));
}

TEST_CASE("volume without a mask round trips") {
  const auto dir = scratch("nomask");
  const Volume v(small_volume().image());
  save_volume(v, dir / "v.hdr");
  const Volume back = load_volume(dir / "v.hdr");
  CHECK_FALSE(back.mask().has_value());
  CHECK(back == v);
}

TEST_CASE("header errors map to data errors") {
  const auto dir = scratch("errors");
  save_volume(small_volume(), dir / "v.hdr");

  SUBCASE("missing file") { CHECK_THROWS_AS(load_volume(dir / "absent.hdr"), DataError); }
  SUBCASE("unknown key") {
    write_text(dir / "bad.hdr", "dims = 5 4 3\nspacing = 1 1 1\ndtype = int16\ndata_file = v.raw\ncolor = red\n");
    CHECK_THROWS_AS(load_volume(dir / "bad.hdr"), MalformedHeader);
  }
  SUBCASE("missing key") {
    write_text(dir / "bad.hdr", "dims = 5 4 3\ndtype = int16\ndata_file = v.raw\n");
    CHECK_THROWS_AS(load_volume(dir / "bad.hdr"), MalformedHeader);
  }
  SUBCASE("wrong value count") {
    write_text(dir / "bad.hdr", "dims = 5 4\nspacing = 1 1 1\ndtype = int16\ndata_file = v.raw\n");
    CHECK_THROWS_AS(load_volume(dir / "bad.hdr"), MalformedHeader);
  }
  SUBCASE("unsupported dtype") {
    write_text(dir / "bad.hdr", "dims = 5 4 3\nspacing = 1 1 1\ndtype = float32\ndata_file = v.raw\n");
    CHECK_THROWS_AS(load_volume(dir / "bad.hdr"), UnsupportedType);
  }
  SUBCASE("payload size") {
    write_text(dir / "bad.hdr", "dims = 5 4 4\nspacing = 1 1 1\ndtype = int16\ndata_file = v.raw\n");
    CHECK_THROWS_AS(load_volume(dir / "bad.hdr"), PayloadSizeMismatch);
  }
}

TEST_CASE("patch extraction copies the cube at the origin") {
  const Volume v = small_volume();
  const Patch p = extract_patch(v, {1, 1, 0}, 3, "s");
  CHECK(p.at(0, 0, 0) == v.image().at(1, 1, 0));
  CHECK(p.at(2, 2, 2) == v.image().at(3, 3, 2));
  CHECK(p.center() == Index3{2, 2, 1});
  CHECK_THROWS_AS(extract_patch(v, {3, 0, 0}, 3), InvalidArgument);
}

TEST_CASE("valid centres keep the patch inside and on the mask") {
  const Volume v = small_volume();
  const auto centers = valid_patch_centers(v, 3);
  REQUIRE_FALSE(centers.empty());
  for (const auto& c : centers) {
    CHECK((*v.mask()).at(c[0], c[1], c[2]));
    for (int a = 0; a < 3; ++a) {
      CHECK(c[a] - 1 >= 0);
      CHECK(c[a] + 1 < v.dims()[a]);
    }
  }
}

TEST_CASE("patch sampling is seeded") {
  const Volume v = small_volume();
  const auto a = sample_patch_centers(v, 20, 3, 5);
  const auto b = sample_patch_centers(v, 20, 3, 5);
  const auto c = sample_patch_centers(v, 20, 3, 6);
  CHECK(a == b);
  CHECK(a != c);
  CHECK_THROWS_AS(sample_patch_centers(v, 1, 5, 1), DataError);
}

TEST_CASE("rng is reproducible and derive_seed separates streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  Rng r(3);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const auto k = r.uniform_int(2, 5);
    CHECK(k >= 2);
    CHECK(k <= 5);
    sum += r.normal();
  }
  CHECK(std::abs(sum / 20000.0) < 0.05);
}

TEST_CASE("phantom lesions lie inside the lung and set the lesion fraction") {
  PhantomSpec spec;
  spec.dims = {40, 40, 40};
  spec.lesion_count_min = 3;
  spec.lesion_count_max = 3;
  spec.lesion_radius_min_mm = 3;
  spec.lesion_radius_max_mm = 4;
  spec.seed = 9;
  const Phantom ph = generate_phantom(spec);
  const Mask& lung = *ph.volume.mask();
  std::size_t lesion = 0;
  double inside = 0.0, outside = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t i = 0; i < lung.size(); ++i) {
    if (ph.lesion_mask[i]) {
      CHECK(lung[i]);
      ++lesion;
      inside += ph.volume.image()[i];
      ++n_in;
    } else if (lung[i]) {
      outside += ph.volume.image()[i];
      ++n_out;
    }
  }
  CHECK(ph.lesions.size() == 3);
  CHECK(ph.lesion_fraction == doctest::Approx(static_cast<double>(lesion) / static_cast<double>(count_set(lung))));
  CHECK(inside / static_cast<double>(n_in) < outside / static_cast<double>(n_out) - 50.0);
  CHECK(generate_phantom(spec).volume == ph.volume);
}
