#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "milq/eval.hpp"

namespace milq {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation undefined: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

Correlation spearman(std::span<const double> x, std::span<const double> y, std::size_t permutation_below) {
  if (x.size() != y.size()) throw InvalidArgument("spearman: length mismatch");
  if (x.size() < 3) throw InvalidArgument("spearman needs at least 3 pairs");
  const auto rx = midranks(x);
  auto ry = midranks(y);
  Correlation c;
  c.rho = pearson(rx, ry);
  const std::size_t n = x.size();
  if (n < permutation_below) {
    std::sort(ry.begin(), ry.end());
    std::size_t extreme = 0, total = 0;
    do {
      ++total;
      if (std::abs(pearson(rx, ry)) >= std::abs(c.rho) - 1e-12) ++extreme;
    } while (std::next_permutation(ry.begin(), ry.end()));
    c.p = static_cast<double>(extreme) / static_cast<double>(total);
    c.exact = true;
    return c;
  }
  const double r2 = c.rho * c.rho;
  if (r2 >= 1.0) {
    c.p = 0.0;
    return c;
  }
  const double t = std::abs(c.rho) * std::sqrt(static_cast<double>(n - 2) / (1.0 - r2));
  const boost::math::students_t dist(static_cast<double>(n - 2));
  c.p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
  return c;
}

FisherTest fisher_rz(double r1, std::size_t n1, double r2, std::size_t n2) {
  if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0)) throw InvalidArgument("fisher_rz needs |r| < 1");
  if (n1 <= 3 || n2 <= 3) throw InvalidArgument("fisher_rz needs n > 3");
  FisherTest f;
  const double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
  f.z = (std::atanh(r1) - std::atanh(r2)) / se;
  f.p = std::erfc(std::abs(f.z) / std::sqrt(2.0));
  return f;
}

}  // namespace milq
