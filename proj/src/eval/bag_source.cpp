#include "milq/eval.hpp"

namespace milq {

namespace {

MilDataset subset(const MilDataset& data, const std::vector<std::size_t>& idx) {
  MilDataset out;
  out.schema_id = data.schema_id;
  for (std::size_t i : idx) out.bags.push_back(data.bags.at(i));
  return out;
}

}  // namespace

std::vector<int> FixedBagSource::labels() const {
  std::vector<int> out;
  for (const auto& b : data_.bags) out.push_back(b.label);
  return out;
}

FoldData FixedBagSource::prepare(const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval) const {
  return {subset(data_, train), subset(data_, eval), nullptr};
}

ResponseBagSource::ResponseBagSource(std::shared_ptr<const std::vector<SubjectResponses>> subjects,
                                     std::size_t max_bin_samples)
    : data_(std::move(subjects)), max_bin_samples_(max_bin_samples) {
  if (!data_ || data_->empty()) throw InvalidArgument("response source needs subjects");
  if (max_bin_samples_ < 100) throw InvalidArgument("bin sample cap must be >= 100");
}

std::vector<std::string> ResponseBagSource::subjects() const {
  std::vector<std::string> out;
  for (const auto& s : *data_) out.push_back(s.id);
  return out;
}

std::vector<int> ResponseBagSource::labels() const {
  std::vector<int> out;
  for (const auto& s : *data_) out.push_back(s.label);
  return out;
}

BinningScheme ResponseBagSource::fit_bins(const std::vector<std::size_t>& members, const std::string& provenance) const {
  if (members.empty()) throw InvalidArgument("bin fit needs subjects");
  const std::size_t channels = data_->at(members.front()).patches.at(0).channels.size();
  std::size_t total = 0;
  for (std::size_t m : members) {
    for (const auto& p : data_->at(m).patches) total += p.channels.at(0).size();
  }
  const std::size_t stride = (total + max_bin_samples_ - 1) / max_bin_samples_;
  std::vector<std::vector<double>> samples(channels);
  for (auto& s : samples) s.reserve(total / stride + 1);
  std::size_t k = 0;
  std::vector<std::string> ids;
  for (std::size_t m : members) {
    const auto& subj = data_->at(m);
    ids.push_back(subj.id);
    for (const auto& p : subj.patches) {
      const std::size_t nv = p.channels.at(0).size();
      for (std::size_t v = 0; v < nv; ++v, ++k) {
        if (k % stride != 0) continue;
        for (std::size_t c = 0; c < channels; ++c) samples[c].push_back(p.channels[c][v]);
      }
    }
  }
  return fit_adaptive_bins(samples, provenance, std::move(ids));
}

bool ResponseBagSource::has_responses() const { return !data_->front().patches.empty(); }

Bag ResponseBagSource::make_bag(std::size_t subject, const BinningScheme* bins) const {
  const auto& s = data_->at(subject);
  Bag b;
  b.id = s.id;
  b.label = s.label;
  b.instance_labels = s.instance_labels;
  const auto n = static_cast<Eigen::Index>(s.num_instances());
  if (s.fixed.rows() != 0 && s.fixed.rows() != n) throw DataError("subject '" + s.id + "' has inconsistent instance counts");
  const Eigen::Index nf = s.fixed.cols();
  const Eigen::Index ng = s.patches.empty() ? 0 : static_cast<Eigen::Index>(s.patches[0].channels.size() * kNumBins);
  if (ng > 0 && bins == nullptr) throw InvalidArgument("filter responses need a binning scheme");
  b.instances.resize(n, nf + ng);
  if (nf > 0) b.instances.leftCols(nf) = s.fixed;
  for (std::size_t i = 0; i < s.patches.size(); ++i) {
    const FeatureVector fv = histogram_features(s.patches[i], *bins);
    for (std::size_t j = 0; j < fv.dim(); ++j) {
      b.instances(static_cast<Eigen::Index>(i), nf + static_cast<Eigen::Index>(j)) = fv.values[j];
    }
  }
  return b;
}

FoldData ResponseBagSource::prepare(const std::vector<std::size_t>& train, const std::vector<std::size_t>& eval) const {
  FoldData fd;
  if (has_responses()) {
    fd.bins = std::make_shared<BinningScheme>(fit_bins(train, "adaptive deciles over training-fold responses"));
  }
  for (std::size_t i : train) fd.train.bags.push_back(make_bag(i, fd.bins.get()));
  for (std::size_t i : eval) fd.eval.bags.push_back(make_bag(i, fd.bins.get()));
  return fd;
}

}  // namespace milq
