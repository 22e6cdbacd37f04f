#include "milq/densemap.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "milq/rng.hpp"

namespace milq {

SliceSelection select_slices(const Volume& v, int count, int spacing) {
  if (count < 1 || spacing < 1) throw InvalidArgument("slice count and spacing must be >= 1");
  if (!v.mask()) throw InvalidArgument("slice selection needs a mask");
  const Mask& m = *v.mask();
  const Dims d = m.dims();
  int first = -1, last = -1;
  for (int z = 0; z < d.nz; ++z) {
    bool any = false;
    for (int y = 0; y < d.ny && !any; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (m.at(x, y, z)) {
          any = true;
          break;
        }
      }
    }
    if (any) {
      if (first < 0) first = z;
      last = z;
    }
  }
  if (first < 0) throw DataError("slice selection on an empty mask");
  SliceSelection s;
  s.z_first = first;
  s.z_last = last;
  const long extent = last - first + 1;
  const long span = static_cast<long>(count - 1) * spacing + 1;
  if (span <= extent) {
    const long start = first + (extent - span) / 2;
    for (int k = 0; k < count; ++k) s.slices.push_back(static_cast<int>(start + static_cast<long>(k) * spacing));
    return s;
  }
  s.fallback = true;
  for (int k = 0; k < count; ++k) {
    s.slices.push_back(static_cast<int>(first + ((2L * k + 1) * extent) / (2L * count)));
  }
  return s;
}

DenseMapPlan plan_dense_map(const Volume& v, const std::string& subject, const DenseMapParams& p) {
  if (p.step < 1) throw InvalidArgument("lattice step must be >= 1");
  if (p.patch_size < 1) throw InvalidArgument("patch size must be >= 1");
  DenseMapPlan plan;
  plan.subject = subject;
  plan.selection = select_slices(v, p.count, p.spacing);
  const Mask& m = *v.mask();
  const Dims d = v.dims();
  const int half = p.patch_size / 2;
  auto fits = [&](int c, int n) { return c - half >= 0 && c - half + p.patch_size <= n; };
  for (int z : plan.selection.slices) {
    for (int y = 0; y < d.ny; y += p.step) {
      for (int x = 0; x < d.nx; x += p.step) {
        if (!m.at(x, y, z)) continue;
        if (fits(x, d.nx) && fits(y, d.ny) && fits(z, d.nz)) {
          plan.centers.push_back({x, y, z});
        } else {
          ++plan.skipped;
        }
      }
    }
  }
  return plan;
}

InstanceScorer model_scorer(const MilModel& m) {
  return [&m](const Eigen::MatrixXd& X) { return m.predict_instances(X); };
}

LesionMap score_dense_map(const DenseMapPlan& plan, const std::vector<PatchResponses>& responses,
                          const BinningScheme& bins, const InstanceScorer& scorer, double threshold) {
  if (responses.size() != plan.centers.size()) throw InvalidArgument("one response set per lattice point required");
  LesionMap map;
  map.subject = plan.subject;
  map.slices = plan.selection.slices;
  map.fallback = plan.selection.fallback;
  map.skipped = plan.skipped;
  if (plan.centers.empty()) return map;
  Eigen::MatrixXd X;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const FeatureVector fv = histogram_features(responses[i], bins);
    if (i == 0) X.resize(static_cast<Eigen::Index>(responses.size()), static_cast<Eigen::Index>(fv.dim()));
    for (std::size_t j = 0; j < fv.dim(); ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = fv.values[j];
  }
  const Eigen::VectorXd post = scorer(X);
  if (post.size() != X.rows()) throw InvalidArgument("scorer returned the wrong number of posteriors");
  for (std::size_t i = 0; i < plan.centers.size(); ++i) {
    const auto& c = plan.centers[i];
    const double p = post[static_cast<Eigen::Index>(i)];
    map.points.push_back({c[0], c[1], c[2], p, p >= threshold});
  }
  return map;
}

LesionMap classify_slices(const Volume& v, const std::string& subject, const BinningScheme& bins,
                          const InstanceScorer& scorer, const DenseMapParams& params) {
  const DenseMapPlan plan = plan_dense_map(v, subject, params);
  std::vector<PatchResponses> responses;
  if (!plan.centers.empty()) {
    responses = collect_patch_responses(v, plan.centers, params.patch_size, params.gauss, params.stride);
  }
  return score_dense_map(plan, responses, bins, scorer, params.threshold);
}

double lesion_percentage(const LesionMap& map, double threshold) {
  if (map.points.empty()) throw DataError("lesion percentage of an empty map");
  std::size_t pos = 0;
  for (const auto& p : map.points) pos += p.posterior >= threshold;
  return 100.0 * static_cast<double>(pos) / static_cast<double>(map.points.size());
}

void write_map_csv(std::ostream& os, const std::vector<LesionMap>& maps) {
  os << "subject,z,x,y,posterior,label\n";
  char buf[32];
  for (const auto& m : maps) {
    for (const auto& p : m.points) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), p.posterior);
      os << m.subject << ',' << p.z << ',' << p.x << ',' << p.y << ',' << std::string_view(buf, res.ptr - buf) << ','
         << (p.label ? 1 : 0) << '\n';
    }
  }
}

void write_slice_pgm(std::ostream& os, const LesionMap& map, int z, const Dims& dims) {
  std::vector<unsigned char> pixels(static_cast<std::size_t>(dims.nx) * static_cast<std::size_t>(dims.ny), 0);
  for (const auto& p : map.points) {
    if (p.z != z) continue;
    const auto v = static_cast<unsigned char>(1 + std::lround(std::clamp(p.posterior, 0.0, 1.0) * 254.0));
    pixels[static_cast<std::size_t>(p.y) * static_cast<std::size_t>(dims.nx) + static_cast<std::size_t>(p.x)] = v;
  }
  os << "P5\n" << dims.nx << ' ' << dims.ny << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

Mask morph(const Mask& m, int radius) {
  if (radius == 0) return m;
  const int r = std::abs(radius);
  const bool dilate = radius > 0;
  std::vector<Index3> ball;
  for (int dz = -r; dz <= r; ++dz) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy + dz * dz <= r * r) ball.push_back({dx, dy, dz});
      }
    }
  }
  const Dims d = m.dims();
  Mask out(d, m.spacing(), std::uint8_t{0});
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        // Dilation: any set neighbour. Erosion: every neighbour set (outside counts as unset).
        bool value = !dilate;
        for (const auto& o : ball) {
          const int xx = x + o[0], yy = y + o[1], zz = z + o[2];
          const bool set = m.contains(xx, yy, zz) && m.at(xx, yy, zz);
          if (dilate && set) {
            value = true;
            break;
          }
          if (!dilate && !set) {
            value = false;
            break;
          }
        }
        out.at(x, y, z) = value ? 1 : 0;
      }
    }
  }
  return out;
}

Mask observer_mask(const Mask& truth, const ObserverSpec& spec) {
  if (!(spec.keep >= 0.0 && spec.keep <= 1.0)) throw InvalidArgument("observer keep probability must lie in [0, 1]");
  Mask out = morph(truth, spec.radius);
  Rng rng(spec.seed);
  for (auto& v : out.values()) {
    if (v && rng.uniform() >= spec.keep) v = 0;
  }
  return out;
}

double expected_observer_dice(const Mask& truth, const ObserverSpec& a, const ObserverSpec& b) {
  const Mask ma = morph(truth, a.radius);
  const Mask mb = morph(truth, b.radius);
  const auto va = ma.values();
  const auto vb = mb.values();
  double na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    na += va[i] != 0;
    nb += vb[i] != 0;
    both += va[i] && vb[i];
  }
  const double denom = a.keep * na + b.keep * nb;
  if (denom == 0.0) return 1.0;
  return 2.0 * a.keep * b.keep * both / denom;
}

}  // namespace milq
