#include <algorithm>
#include <cmath>
#include <numeric>

#include "milq/eval.hpp"

namespace milq {

std::vector<double> midranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double bag_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("auc: score/label count mismatch");
  check_binary_labels(labels, "auc");
  const auto ranks = midranks(scores);
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 0) {
      ++pos;
      rank_sum += ranks[i];
    } else {
      ++neg;
    }
  }
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

double dice(const Mask& a, const Mask& b) {
  if (a.dims() != b.dims()) throw InvalidArgument("dice: mask dimensions differ");
  const auto va = a.values();
  const auto vb = b.values();
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const bool x = va[i] != 0, y = vb[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double laa_percentage(const Volume& v, double threshold) {
  if (!v.mask()) throw InvalidArgument("LAA needs a mask");
  const auto img = v.image().values();
  const auto msk = v.mask()->values();
  std::size_t inside = 0, low = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!msk[i]) continue;
    ++inside;
    if (img[i] < threshold) ++low;
  }
  if (inside == 0) throw DataError("LAA on an empty mask");
  return 100.0 * static_cast<double>(low) / static_cast<double>(inside);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace milq
