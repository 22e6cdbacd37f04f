#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "milq/mil.hpp"
#include "milq/texture.hpp"
#include "milq/volume.hpp"

namespace milq {

struct SliceSelection {
  std::vector<int> slices;
  bool fallback = false;  // the masked extent was too short for the requested spacing
  int z_first = 0;        // masked z-extent, inclusive
  int z_last = 0;
};

/// `count` slices `spacing` apart, centred in the masked z-extent. When the
/// block does not fit, slices are spread evenly over the extent instead.
SliceSelection select_slices(const Volume& v, int count = 10, int spacing = 25);

struct DenseMapParams {
  int count = 10;
  int spacing = 25;
  int step = 10;
  int patch_size = 41;
  int stride = 3;  // response sub-lattice inside each patch
  double threshold = 0.5;
  GaussParams gauss;
};

/// Patch centres of one subject's dense map.
struct DenseMapPlan {
  std::string subject;
  SliceSelection selection;
  std::vector<Index3> centers;
  std::size_t skipped = 0;  // in-mask lattice points whose patch leaves the volume
};

/// In-mask points with x and y divisible by `step` on the selected slices.
DenseMapPlan plan_dense_map(const Volume& v, const std::string& subject, const DenseMapParams& params);

struct MapPoint {
  int x = 0, y = 0, z = 0;
  double posterior = 0.0;
  bool label = false;
};

struct LesionMap {
  std::string subject;
  std::vector<int> slices;
  bool fallback = false;
  std::size_t skipped = 0;
  std::vector<MapPoint> points;
};

/// Posteriors for the rows of a feature matrix.
using InstanceScorer = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

InstanceScorer model_scorer(const MilModel& m);

/// Scores precomputed patch responses (one per plan centre, in plan order).
LesionMap score_dense_map(const DenseMapPlan& plan, const std::vector<PatchResponses>& responses,
                          const BinningScheme& bins, const InstanceScorer& scorer, double threshold = 0.5);

/// Plans, filters and scores one volume.
LesionMap classify_slices(const Volume& v, const std::string& subject, const BinningScheme& bins,
                          const InstanceScorer& scorer, const DenseMapParams& params = {});

/// 100 * positives / evaluated points, pooled over slices. Throws for an empty map.
double lesion_percentage(const LesionMap& map, double threshold = 0.5);

/// CSV with columns subject,z,x,y,posterior,label.
void write_map_csv(std::ostream& os, const std::vector<LesionMap>& maps);

/// 8-bit PGM of one slice: lattice posteriors scaled to 1..255, zero elsewhere.
void write_slice_pgm(std::ostream& os, const LesionMap& map, int z, const Dims& dims);

// ---------------------------------------------------------------------------
// Synthetic observers

/// A corrupted copy of the ground truth: morphological radius (positive
/// dilates, negative erodes) followed by independent per-voxel retention.
struct ObserverSpec {
  int radius = 0;
  double keep = 1.0;
  std::uint64_t seed = 0;
};

Mask morph(const Mask& m, int radius);
Mask observer_mask(const Mask& truth, const ObserverSpec& spec);

/// Expected Dice between two observers: 2 pa pb |A & B| / (pa |A| + pb |B|)
/// over the morphed sets A and B; 1 when both are empty.
double expected_observer_dice(const Mask& truth, const ObserverSpec& a, const ObserverSpec& b);

}  // namespace milq
