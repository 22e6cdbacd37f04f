#include <limits>
#include <sstream>

#include "doctest.h"
#include "milq/densemap.hpp"
#include "milq/eval.hpp"

using namespace milq;

namespace {

/// Mask set on z in [z0, z1] over the whole xy plane.
Volume slab(Dims d, int z0, int z1) {
  Image img(d, {}, std::int16_t{-850});
  Mask m(d, {}, 0);
  for (int z = z0; z <= z1; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) m.at(x, y, z) = 1;
  return Volume(img, m);
}

BinningScheme flat_bins(std::size_t channels) {
  BinningScheme b;
  std::array<double, kNumBins + 1> e{};
  e.front() = -std::numeric_limits<double>::infinity();
  e.back() = std::numeric_limits<double>::infinity();
  for (int k = 1; k < kNumBins; ++k) e[static_cast<std::size_t>(k)] = (k - 5) * 10.0;
  b.edges.assign(channels, e);
  return b;
}

Phantom small_phantom() {
  PhantomSpec spec;
  spec.dims = {48, 48, 48};
  spec.lesion_count_min = 2;
  spec.lesion_count_max = 2;
  spec.lesion_radius_min_mm = 4;
  spec.lesion_radius_max_mm = 6;
  spec.seed = 3;
  return generate_phantom(spec);
}

DenseMapParams small_params() {
  DenseMapParams p;
  p.count = 3;
  p.spacing = 4;
  p.step = 4;
  p.patch_size = 15;
  p.gauss.scales_mm = {0.6, 1.2};
  return p;
}

}  // namespace

TEST_CASE("a 250-slice extent takes a centred block of 10 slices 25 apart") {
  const auto v = slab({4, 4, 270}, 10, 259);
  const auto s = select_slices(v, 10, 25);
  CHECK_FALSE(s.fallback);
  CHECK(s.z_first == 10);
  CHECK(s.z_last == 259);
  REQUIRE(s.slices.size() == 10);
  for (std::size_t k = 1; k < 10; ++k) CHECK(s.slices[k] - s.slices[k - 1] == 25);
  const int top = s.slices.front() - s.z_first;
  const int bottom = s.z_last - s.slices.back();
  CHECK(std::abs(top - bottom) <= 1);
  CHECK(s.slices.front() == 22);
}

TEST_CASE("one slice is the middle masked slice") {
  const auto s = select_slices(slab({4, 4, 40}, 5, 25), 1, 25);
  CHECK(s.slices == std::vector<int>{15});
  CHECK_FALSE(s.fallback);
}

TEST_CASE("a short extent falls back to evenly spread slices") {
  const auto s = select_slices(slab({4, 4, 120}, 0, 99), 10, 25);
  CHECK(s.fallback);
  CHECK(s.slices == std::vector<int>{5, 15, 25, 35, 45, 55, 65, 75, 85, 95});
  CHECK_THROWS_AS(select_slices(slab({4, 4, 4}, 0, 3), 0, 1), InvalidArgument);
  CHECK_THROWS_AS(select_slices(Volume(Image({4, 4, 4}, {}), Mask({4, 4, 4}, {}, 0)), 1, 1), DataError);
}

TEST_CASE("lattice enumeration matches a direct scan") {
  const Phantom ph = small_phantom();
  const auto params = small_params();
  const auto plan = plan_dense_map(ph.volume, "P", params);
  const Mask& m = *ph.volume.mask();
  std::vector<Index3> want;
  std::size_t skipped = 0;
  for (int z : plan.selection.slices)
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        if (x % params.step || y % params.step || !m.at(x, y, z)) continue;
        const bool inside = x >= 7 && y >= 7 && z >= 7 && x + 7 < 48 && y + 7 < 48 && z + 7 < 48;
        if (inside) want.push_back({x, y, z}); else ++skipped;
      }
  CHECK(plan.centers == want);
  CHECK(plan.skipped == skipped);
  CHECK_FALSE(want.empty());
}

TEST_CASE("a scorer that always returns zero gives an empty lesion map") {
  const Phantom ph = small_phantom();
  const auto params = small_params();
  const InstanceScorer zero = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Zero(X.rows()); };
  const auto map = classify_slices(ph.volume, "P", flat_bins(params.gauss.channels()), zero, params);
  REQUIRE_FALSE(map.points.empty());
  CHECK(lesion_percentage(map) == 0.0);
  for (const auto& p : map.points) {
    CHECK_FALSE(p.label);
    CHECK((*ph.volume.mask()).at(p.x, p.y, p.z));
  }
  CHECK_THROWS_AS(lesion_percentage(LesionMap{}), DataError);
}

TEST_CASE("labels follow the posterior threshold and percentages fall as it rises") {
  const Phantom ph = small_phantom();
  const auto params = small_params();
  // Low smoothed intensity at the finest scale means lesion-like.
  const InstanceScorer mean_bin = [](const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double s = 0.0;
      for (int b = 0; b < kNumBins; ++b) s += b * X(i, b);
      out[i] = 1.0 - s / (kNumBins - 1);
    }
    return out;
  };
  auto bins = flat_bins(params.gauss.channels());
  for (int k = 1; k < kNumBins; ++k) bins.edges[0][static_cast<std::size_t>(k)] = -1000.0 + 20.0 * k;
  const auto map = classify_slices(ph.volume, "P", bins, mean_bin, params);
  for (const auto& p : map.points) CHECK(p.label == (p.posterior >= 0.5));
  double prev = 101.0;
  for (double t : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
    const double pct = lesion_percentage(map, t);
    CHECK(pct <= prev);
    CHECK(pct >= 0.0);
    prev = pct;
  }
  CHECK(lesion_percentage(map, 0.0) == 100.0);
}

TEST_CASE("map csv and pgm formats") {
  LesionMap map;
  map.subject = "P001";
  map.points.push_back({2, 3, 1, 0.75, true});
  map.points.push_back({0, 0, 1, 0.0, false});
  std::ostringstream csv;
  write_map_csv(csv, {map});
  CHECK(csv.str() == "subject,z,x,y,posterior,label\nP001,1,2,3,0.75,1\nP001,1,0,0,0,0\n");
  std::ostringstream pgm;
  write_slice_pgm(pgm, map, 1, {4, 4, 2});
  const std::string s = pgm.str();
  CHECK(s.rfind("P5\n4 4\n255\n", 0) == 0);
  CHECK(s.size() == 11 + 16);
  CHECK(static_cast<unsigned char>(s[11 + 3 * 4 + 2]) == 1 + 191);
  CHECK(static_cast<unsigned char>(s[11]) == 1);
  CHECK(static_cast<unsigned char>(s[12]) == 0);
}

TEST_CASE("morphology on a single voxel") {
  Mask m({9, 9, 9}, {}, 0);
  m.at(4, 4, 4) = 1;
  const Mask d = morph(m, 1);
  CHECK(count_set(d) == 7);
  CHECK(count_set(morph(d, -1)) == 1);
  CHECK(count_set(morph(m, -1)) == 0);
  CHECK(count_set(morph(m, 2)) == 33);
}

TEST_CASE("synthetic observers agree as predicted") {
  Mask truth({40, 40, 40}, {}, 0);
  for (int z = 8; z < 32; ++z)
    for (int y = 8; y < 32; ++y)
      for (int x = 8; x < 32; ++x) truth.at(x, y, z) = (x - 20) * (x - 20) + (y - 20) * (y - 20) + (z - 20) * (z - 20) <= 100;
  const ObserverSpec a{1, 0.9, 11}, b{-1, 0.8, 12};
  const double expected = expected_observer_dice(truth, a, b);
  const double got = dice(observer_mask(truth, a), observer_mask(truth, b));
  CHECK(std::abs(got - expected) < 0.02);
  CHECK(expected_observer_dice(truth, {0, 1.0, 1}, {0, 1.0, 2}) == 1.0);
  CHECK(dice(observer_mask(truth, {0, 1.0, 1}), truth) == 1.0);
  CHECK(observer_mask(truth, a) == observer_mask(truth, a));
  CHECK_THROWS_AS(observer_mask(truth, {0, 1.5, 1}), InvalidArgument);
}
