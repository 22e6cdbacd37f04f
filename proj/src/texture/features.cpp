#include "milq/texture.hpp"

namespace milq {

std::string to_string(Schema s) {
  switch (s) {
    case Schema::Cooc:
      return "cooc";
    case Schema::Gauss:
      return "gauss";
    case Schema::Both:
      return "both";
  }
  return "?";
}

Schema parse_schema(const std::string& s) {
  if (s == "cooc") return Schema::Cooc;
  if (s == "gauss") return Schema::Gauss;
  if (s == "both") return Schema::Both;
  throw InvalidArgument("unknown feature schema '" + s + "' (expected cooc|gauss|both)");
}

std::size_t feature_dim(Schema s, std::size_t num_distances, std::size_t num_scales) {
  const std::size_t cooc = kNumDirections * num_distances * kNumHaralick;
  const std::size_t gauss = num_scales * kNumFilters * kNumBins;
  switch (s) {
    case Schema::Cooc:
      return cooc;
    case Schema::Gauss:
      return gauss;
    case Schema::Both:
      return cooc + gauss;
  }
  return 0;
}

FeatureVector extract(const Patch& patch, const Spacing& spacing, Schema schema, const TextureConfig& config,
                      const BinningScheme* bins) {
  if (schema != Schema::Cooc && bins == nullptr) throw InvalidArgument("gauss features need a binning scheme");
  switch (schema) {
    case Schema::Cooc:
      return cooc_features(patch, config.cooc);
    case Schema::Gauss:
      return gauss_features(patch, spacing, config.gauss, *bins);
    case Schema::Both: {
      FeatureVector fv = cooc_features(patch, config.cooc);
      const FeatureVector g = gauss_features(patch, spacing, config.gauss, *bins);
      fv.values.insert(fv.values.end(), g.values.begin(), g.values.end());
      fv.schema = Schema::Both;
      return fv;
    }
  }
  throw InvalidArgument("unknown schema");
}

}  // namespace milq
