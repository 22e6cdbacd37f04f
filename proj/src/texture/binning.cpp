#include <algorithm>
#include <cmath>
#include <limits>

#include "milq/texture.hpp"

namespace milq {

int BinningScheme::bin_of(std::size_t channel, double value) const {
  const auto& e = edges[channel];
  // Interior edges e[1..9]; bin b covers [e[b], e[b+1]).
  return static_cast<int>(std::upper_bound(e.begin() + 1, e.end() - 1, value) - (e.begin() + 1));
}

BinningScheme fit_adaptive_bins(const std::vector<std::vector<double>>& samples, std::string provenance,
                                std::vector<std::string> fit_subjects) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr int kInterior = kNumBins - 1;
  BinningScheme scheme;
  scheme.provenance = std::move(provenance);
  scheme.fit_subjects = std::move(fit_subjects);
  for (std::size_t c = 0; c < samples.size(); ++c) {
    if (samples[c].size() < 100) {
      throw InvalidArgument("channel " + std::to_string(c) + " has " + std::to_string(samples[c].size()) +
                            " sample values, need >= 100");
    }
    std::vector<double> s = samples[c];
    std::sort(s.begin(), s.end());
    std::vector<std::size_t> boundaries;  // positions i with s[i-1] < s[i]
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i - 1] < s[i]) boundaries.push_back(i);
    }
    if (boundaries.size() < static_cast<std::size_t>(kInterior)) {
      throw DataError("degenerate bin edges: channel " + std::to_string(c) + " has " +
                      std::to_string(boundaries.size() + 1) + " distinct values, need >= 10");
    }
    std::array<double, kNumBins + 1> e{};
    e.front() = -inf;
    e.back() = inf;
    std::ptrdiff_t prev = -1;
    const auto nb = static_cast<std::ptrdiff_t>(boundaries.size());
    for (int k = 1; k <= kInterior; ++k) {
      const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(k) * s.size() / kNumBins));
      auto it = std::lower_bound(boundaries.begin(), boundaries.end(), target);
      std::ptrdiff_t idx = it - boundaries.begin();
      if (idx == nb || (idx > 0 && target - boundaries[static_cast<std::size_t>(idx - 1)] <=
                                       boundaries[static_cast<std::size_t>(idx)] - target)) {
        --idx;
      }
      idx = std::clamp(idx, prev + 1, nb - (kInterior - k) - 1);
      prev = idx;
      const std::size_t b = boundaries[static_cast<std::size_t>(idx)];
      double edge = s[b - 1] + (s[b] - s[b - 1]) / 2.0;
      if (!(edge > s[b - 1])) edge = s[b];
      e[static_cast<std::size_t>(k)] = edge;
    }
    scheme.edges.push_back(e);
  }
  return scheme;
}

}  // namespace milq
