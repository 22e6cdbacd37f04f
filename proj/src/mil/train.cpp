#include <algorithm>
#include <cstdio>
#include <numeric>

#include "milq/mil.hpp"

namespace milq {

namespace {

std::string kernel_key(const Kernel& k) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d:%d:%.17g", static_cast<int>(k.kind), k.degree, k.sigma);
  return buf;
}

}  // namespace

MilTrainer::MilTrainer(const MilDataset& train) : data_(train) {
  train.validate_training();
  Eigen::MatrixXd raw(train.num_instances(), train.dim());
  offsets_.push_back(0);
  for (const auto& b : train.bags) {
    raw.middleRows(offsets_.back(), b.size()) = b.instances;
    offsets_.push_back(offsets_.back() + b.size());
  }
  standardizer_ = Standardizer::fit(raw, train.ids());
  X_ = standardizer_.apply(raw);
}

const Eigen::MatrixXd& MilTrainer::gram(const Kernel& k) {
  k.validate();
  const std::string key = kernel_key(k);
  auto it = grams_.find(key);
  if (it != grams_.end()) return it->second;
  if (dots_.size() == 0) {
    dots_ = X_ * X_.transpose();
    norms_ = dots_.diagonal();
  }
  return grams_.emplace(key, kernel_from_dots(k, dots_, norms_, norms_)).first->second;
}

void MilTrainer::precompute(const std::vector<Kernel>& kernels) {
  for (const auto& k : kernels) gram(k);
}

MilModel MilTrainer::train(Variant variant, const Kernel& k, double C, double q, const TrainOptions& opts) {
  quantile_index(1, q);
  return variant == Variant::MisvmQ ? train_misvm(k, C, q, opts) : train_miles(k, C, q, opts);
}

MilModel MilTrainer::train_misvm(const Kernel& k, double C, double q, const TrainOptions& opts) {
  const Eigen::MatrixXd& K = gram(k);
  const Eigen::Index n = X_.rows();
  std::vector<int> y(static_cast<std::size_t>(n));
  for (std::size_t b = 0; b < data_.bags.size(); ++b) {
    for (Eigen::Index r = offsets_[b]; r < offsets_[b + 1]; ++r) y[static_cast<std::size_t>(r)] = data_.bags[b].label;
  }

  MilModel m;
  m.variant = Variant::MisvmQ;
  m.q = q;
  m.kernel = k;
  m.C = C;
  m.standardizer = standardizer_;
  m.converged = false;

  DualSolution sol;
  Eigen::VectorXd g(n);
  for (int it = 0; it < std::max(1, opts.max_iters); ++it) {
    sol = smo_solve(K, y, C, opts.smo);
    m.iterations = it + 1;
    Eigen::VectorXd ay(n);
    for (Eigen::Index i = 0; i < n; ++i) ay[i] = sol.alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    g = (K * ay).array() + sol.bias;

    std::vector<int> next = y;
    for (std::size_t b = 0; b < data_.bags.size(); ++b) {
      if (data_.bags[b].label != 1) continue;
      const Eigen::Index lo = offsets_[b], hi = offsets_[b + 1];
      std::size_t positives = 0;
      for (Eigen::Index r = lo; r < hi; ++r) {
        next[static_cast<std::size_t>(r)] = g[r] > 0.0 ? 1 : -1;
        if (g[r] > 0.0) ++positives;
      }
      const std::size_t need = required_positives(static_cast<std::size_t>(hi - lo), q);
      if (positives >= need) continue;
      std::vector<Eigen::Index> order(static_cast<std::size_t>(hi - lo));
      std::iota(order.begin(), order.end(), lo);
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) { return g[a] > g[c]; });
      for (Eigen::Index r : order) {
        if (positives >= need) break;
        if (next[static_cast<std::size_t>(r)] != 1) {
          next[static_cast<std::size_t>(r)] = 1;
          ++positives;
        }
      }
    }
    if (next == y) {
      m.converged = true;
      break;
    }
    if (it + 1 < std::max(1, opts.max_iters)) y = std::move(next);
  }

  m.svm = make_svm_model(X_, y, sol, k, C);
  m.svm.platt = platt_fit(std::span<const double>(g.data(), static_cast<std::size_t>(n)), y);
  m.training_labels = std::move(y);
  return m;
}

MilModel MilTrainer::train_miles(const Kernel& k, double C, double q, const TrainOptions& opts) {
  const Eigen::MatrixXd& K = gram(k);
  const auto nb = static_cast<Eigen::Index>(data_.bags.size());
  Eigen::MatrixXd S(nb, X_.rows());
  std::vector<int> labels(static_cast<std::size_t>(nb));
  for (Eigen::Index b = 0; b < nb; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    S.row(b) = quantile_embedding(K.middleRows(offsets_[ub], offsets_[ub + 1] - offsets_[ub]), q).transpose();
    labels[ub] = data_.bags[ub].label;
  }
  const L1LinearModel lin = l1_linear_train(S, labels, C, opts.l1);

  MilModel m;
  m.variant = Variant::MilesQ;
  m.q = q;
  m.kernel = k;
  m.C = C;
  m.standardizer = standardizer_;
  m.bias = lin.bias;
  m.prototype_index = lin.support();
  const auto np = static_cast<Eigen::Index>(m.prototype_index.size());
  m.prototypes.resize(np, X_.cols());
  m.weights.resize(np);
  for (Eigen::Index p = 0; p < np; ++p) {
    const int src = m.prototype_index[static_cast<std::size_t>(p)];
    m.prototypes.row(p) = X_.row(src);
    m.weights[p] = lin.weights[src];
  }
  return m;
}

MilModel misvmq_train(const MilDataset& data, const Kernel& k, double C, double q, const TrainOptions& opts) {
  MilTrainer trainer(data);
  return trainer.train(Variant::MisvmQ, k, C, q, opts);
}

MilModel milesq_train(const MilDataset& data, const Kernel& k, double C, double q, const TrainOptions& opts) {
  MilTrainer trainer(data);
  return trainer.train(Variant::MilesQ, k, C, q, opts);
}

}  // namespace milq
