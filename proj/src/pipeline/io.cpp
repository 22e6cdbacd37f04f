#include <bit>
#include <fstream>
#include <limits>

#include "milq/pipeline.hpp"

namespace milq {

using nlohmann::json;

namespace {

void put(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

double take(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("model blob is truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put(os, m(r, c));
  }
}

Eigen::MatrixXd take_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = take(is);
  }
  return m;
}

Eigen::VectorXd take_vector(std::istream& is, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = take(is);
  return v;
}

json bins_json(const BinningScheme& b) {
  json edges = json::array();
  for (const auto& e : b.edges) edges.push_back(std::vector<double>(e.begin() + 1, e.end() - 1));
  return {{"provenance", b.provenance}, {"fit_subjects", b.fit_subjects}, {"edges", edges}};
}

BinningScheme bins_from(const json& j) {
  BinningScheme b;
  b.provenance = j.at("provenance").get<std::string>();
  b.fit_subjects = j.at("fit_subjects").get<std::vector<std::string>>();
  for (const auto& ej : j.at("edges")) {
    const auto interior = ej.get<std::vector<double>>();
    if (interior.size() != kNumBins - 1) throw DataError("binning scheme needs 9 interior edges per channel");
    std::array<double, kNumBins + 1> e{};
    e.front() = -std::numeric_limits<double>::infinity();
    e.back() = std::numeric_limits<double>::infinity();
    std::copy(interior.begin(), interior.end(), e.begin() + 1);
    b.edges.push_back(e);
  }
  return b;
}

}  // namespace

void save_model(const std::filesystem::path& path, const MilModel& m, const BinningScheme* bins,
                const std::vector<std::string>& test_subjects, int fold) {
  const bool misvm = m.variant == Variant::MisvmQ;
  const Eigen::MatrixXd& vectors = misvm ? m.svm.support_vectors : m.prototypes;
  const Eigen::VectorXd& coef = misvm ? m.svm.coef : m.weights;
  auto blob_path = path;
  blob_path.replace_extension(".bin");
  json j = {{"format", "milq-model"},
            {"version", 1},
            {"variant", to_string(m.variant)},
            {"q", m.q},
            {"C", m.C},
            {"kernel", kernel_to_json(m.kernel)},
            {"bias", misvm ? m.svm.bias : m.bias},
            {"platt", {{"A", m.svm.platt.A}, {"B", m.svm.platt.B}}},
            {"converged", m.converged},
            {"iterations", m.iterations},
            {"prototype_index", m.prototype_index},
            {"dim", m.standardizer.mean.size()},
            {"num_vectors", vectors.rows()},
            {"fold", fold},
            {"test_subjects", test_subjects},
            {"standardizer_fit_subjects", m.standardizer.fit_subjects},
            {"blob", blob_path.filename().string()},
            {"bins", bins ? bins_json(*bins) : json(nullptr)}};
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw DataError("cannot write " + blob_path.string());
  put_matrix(blob, m.standardizer.mean.transpose());
  put_matrix(blob, m.standardizer.scale.transpose());
  put_matrix(blob, vectors);
  put_matrix(blob, coef.transpose());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("model " + path.string() + " is not valid JSON");
  }
  try {
    if (j.at("format") != "milq-model" || j.at("version") != 1) throw DataError("unsupported model file " + path.string());
    LoadedModel lm;
    MilModel& m = lm.model;
    m.variant = parse_variant(j.at("variant").get<std::string>());
    m.q = j.at("q").get<double>();
    m.C = j.at("C").get<double>();
    m.kernel = kernel_from_json(j.at("kernel"));
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<int>();
    m.prototype_index = j.at("prototype_index").get<std::vector<int>>();
    m.standardizer.fit_subjects = j.at("standardizer_fit_subjects").get<std::vector<std::string>>();
    lm.fold = j.at("fold").get<int>();
    lm.test_subjects = j.at("test_subjects").get<std::vector<std::string>>();
    if (!j.at("bins").is_null()) lm.bins = bins_from(j.at("bins"));
    const auto dim = j.at("dim").get<Eigen::Index>();
    const auto nv = j.at("num_vectors").get<Eigen::Index>();
    std::ifstream blob(path.parent_path() / j.at("blob").get<std::string>(), std::ios::binary);
    if (!blob) throw DataError("cannot open model blob for " + path.string());
    m.standardizer.mean = take_vector(blob, dim);
    m.standardizer.scale = take_vector(blob, dim);
    Eigen::MatrixXd vectors = take_matrix(blob, nv, dim);
    Eigen::VectorXd coef = take_vector(blob, nv);
    const double bias = j.at("bias").get<double>();
    if (m.variant == Variant::MisvmQ) {
      m.svm.kernel = m.kernel;
      m.svm.C = m.C;
      m.svm.support_vectors = std::move(vectors);
      m.svm.coef = std::move(coef);
      m.svm.bias = bias;
      m.svm.platt = {j.at("platt").at("A").get<double>(), j.at("platt").at("B").get<double>()};
    } else {
      m.prototypes = std::move(vectors);
      m.weights = std::move(coef);
      m.bias = bias;
    }
    return lm;
  } catch (const json::exception& e) {
    throw DataError("model " + path.string() + " is missing fields: " + e.what());
  }
}

}  // namespace milq
