#include <algorithm>
#include <cmath>

#include "milq/mil.hpp"

namespace milq {

std::size_t quantile_index(std::size_t n, double q) {
  if (n == 0) throw InvalidArgument("quantile of an empty set");
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("quantile q must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n) - 1;
}

double quantile(std::span<const double> values, double q) {
  const std::size_t k = quantile_index(values.size(), q);
  std::vector<double> v(values.begin(), values.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

std::size_t required_positives(std::size_t n, double q) { return n - quantile_index(n, q); }

Eigen::VectorXd quantile_embedding(const Eigen::MatrixXd& sim, double q) {
  const std::size_t k = quantile_index(static_cast<std::size_t>(sim.rows()), q);
  Eigen::VectorXd out(sim.cols());
  std::vector<double> col(static_cast<std::size_t>(sim.rows()));
  for (Eigen::Index c = 0; c < sim.cols(); ++c) {
    for (Eigen::Index r = 0; r < sim.rows(); ++r) col[static_cast<std::size_t>(r)] = sim(r, c);
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(k), col.end());
    out[c] = col[k];
  }
  return out;
}

double separability(const std::vector<std::vector<double>>& pos, const std::vector<std::vector<double>>& neg) {
  auto mean = [](const std::vector<std::vector<double>>& bags) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& b : bags) {
      for (double p : b) sum += p;
      n += b.size();
    }
    return n == 0 ? std::nan("") : sum / static_cast<double>(n);
  };
  const double mp = mean(pos), mn = mean(neg);
  if (std::isnan(mp) || std::isnan(mn)) throw DataError("separability needs instances from both classes");
  return mp - mn;
}

double separability(const MilModel& m, const MilDataset& data) {
  std::vector<std::vector<double>> pos, neg;
  for (const auto& b : data.bags) {
    const Eigen::VectorXd p = m.predict_instances(b.instances);
    (b.label > 0 ? pos : neg).emplace_back(p.data(), p.data() + p.size());
  }
  return separability(pos, neg);
}

}  // namespace milq
