#include <algorithm>
#include <map>
#include <set>

#include "milq/eval.hpp"
#include "milq/rng.hpp"

namespace milq {

std::vector<std::size_t> CvPlan::train_indices(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if (fold[i] != f) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> CvPlan::test_indices(int f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if (fold[i] == f) out.push_back(i);
  }
  return out;
}

CvPlan make_cv_plan(std::vector<std::string> subjects, std::vector<std::string> strata, int folds,
                    std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  if (subjects.size() != strata.size()) throw InvalidArgument("one stratum key per subject required");
  if (subjects.size() < static_cast<std::size_t>(folds)) {
    throw InvalidArgument("cannot split " + std::to_string(subjects.size()) + " subjects into " +
                          std::to_string(folds) + " folds");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < subjects.size(); ++i) groups[strata[i]].push_back(i);

  CvPlan plan;
  plan.folds = folds;
  plan.seed = seed;
  plan.fold.assign(subjects.size(), -1);
  Rng rng(seed);
  std::size_t next = 0;
  for (auto& [key, members] : groups) {
    rng.shuffle(members);
    for (std::size_t i : members) plan.fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(folds));
  }
  plan.subjects = std::move(subjects);
  plan.strata = std::move(strata);
  return plan;
}

CvPlan sub_plan(const CvPlan& plan, const std::vector<std::size_t>& members, int folds, std::uint64_t seed) {
  std::vector<std::string> subjects, strata;
  for (std::size_t i : members) {
    subjects.push_back(plan.subjects.at(i));
    strata.push_back(plan.strata.at(i));
  }
  return make_cv_plan(std::move(subjects), std::move(strata), folds, seed);
}

std::vector<Kernel> ParamGrid::kernels() const {
  std::vector<Kernel> out;
  for (int p : degrees) out.push_back(Kernel::polynomial(p));
  for (double s : sigmas) out.push_back(Kernel::rbf(s));
  return out;
}

std::vector<GridPoint> ParamGrid::points() const {
  std::vector<GridPoint> out;
  for (const auto& k : kernels()) {
    for (double c : Cs) {
      for (double q : qs) out.push_back({k, c, q});
    }
  }
  return out;
}

void ParamGrid::validate() const {
  if (degrees.empty() && sigmas.empty()) throw InvalidArgument("grid has no kernels");
  if (Cs.empty() || qs.empty()) throw InvalidArgument("grid needs at least one C and one q");
  for (double c : Cs) {
    if (!(c > 0)) throw InvalidArgument("grid C values must be > 0");
  }
  for (double q : qs) {
    if (!(q > 0 && q <= 1)) throw InvalidArgument("grid q values must lie in (0, 1]");
  }
  kernels();
}

void HygieneLog::check(const std::string& what, const std::vector<std::string>& fit_subjects,
                       const std::vector<std::string>& eval_subjects) {
  ++checks;
  const std::set<std::string> fit(fit_subjects.begin(), fit_subjects.end());
  for (const auto& id : eval_subjects) {
    if (fit.count(id)) violations.push_back(what + ": evaluation subject '" + id + "' was used in the fit");
  }
}

}  // namespace milq
