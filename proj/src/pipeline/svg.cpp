#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "milq/pipeline.hpp"

namespace milq {

namespace {

constexpr double kSize = 400.0;
constexpr double kMargin = 50.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void open_svg(std::ostringstream& os, const std::string& title, const std::string& x_label, const std::string& y_label) {
  const double w = kSize + 2 * kMargin;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(w) << "\" viewBox=\"0 0 "
     << num(w) << ' ' << num(w) << "\">\n"
     << "<title>" << escape(title) << "</title>\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(w) << "\" fill=\"white\"/>\n"
     << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(kSize) << "\" height=\"" << num(kSize)
     << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "<text x=\"" << num(w / 2) << "\" y=\"" << num(kMargin / 2) << "\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n"
     << "<text x=\"" << num(w / 2) << "\" y=\"" << num(w - 12) << "\" text-anchor=\"middle\" font-size=\"12\">"
     << escape(x_label) << "</text>\n"
     << "<text x=\"14\" y=\"" << num(w / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << num(w / 2) << ")\">" << escape(y_label) << "</text>\n";
}

double px(double u) { return kMargin + u * kSize; }
double py(double v) { return kMargin + (1.0 - v) * kSize; }

}  // namespace

std::string roc_svg(const std::vector<double>& scores, const std::vector<int>& labels, const std::string& title) {
  if (scores.size() != labels.size()) throw InvalidArgument("roc: score/label count mismatch");
  check_binary_labels(labels, "roc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double pos = 0, neg = 0;
  for (int l : labels) (l > 0 ? pos : neg) += 1;
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] > 0 ? tp : fp) += 1;
      ++j;
    }
    pts.emplace_back(fp / neg, tp / pos);
    i = j;
  }
  std::ostringstream os;
  open_svg(os, title, "False positive rate", "True positive rate");
  os << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(1)) << "\" y2=\"" << num(py(1))
     << "\" stroke=\"grey\" stroke-dasharray=\"4 4\"/>\n";
  os << "<path d=\"M " << num(px(0)) << ' ' << num(py(0));
  for (std::size_t k = 1; k < pts.size(); ++k) os << " L " << num(px(pts[k].first)) << ' ' << num(py(pts[k].second));
  os << "\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n</svg>\n";
  return os.str();
}

std::string scatter_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                        const std::string& x_label, const std::string& y_label) {
  if (x.size() != y.size()) throw InvalidArgument("scatter: length mismatch");
  std::ostringstream os;
  open_svg(os, title, x_label + " (log scale)", y_label);
  double min_pos = std::numeric_limits<double>::infinity();
  for (double v : x) {
    if (v > 0) min_pos = std::min(min_pos, v);
  }
  if (!std::isfinite(min_pos)) min_pos = 1e-4;
  std::vector<double> lx;
  for (double v : x) lx.push_back(std::log10(std::max(v, min_pos)));
  double lo = lx.empty() ? 0 : *std::min_element(lx.begin(), lx.end());
  double hi = lx.empty() ? 1 : *std::max_element(lx.begin(), lx.end());
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  double ylo = 0, yhi = 1;
  if (!y.empty()) {
    ylo = std::min(0.0, *std::min_element(y.begin(), y.end()));
    yhi = std::max(ylo + 1e-9, *std::max_element(y.begin(), y.end()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = (lx[i] - lo) / (hi - lo);
    const double v = (y[i] - ylo) / (yhi - ylo);
    os << "<circle cx=\"" << num(px(u)) << "\" cy=\"" << num(py(v)) << "\" r=\"3\" fill=\"firebrick\"/>\n";
  }
  for (int k = static_cast<int>(std::ceil(lo)); k <= static_cast<int>(std::floor(hi)); ++k) {
    const double u = (k - lo) / (hi - lo);
    os << "<text x=\"" << num(px(u)) << "\" y=\"" << num(py(0) + 16) << "\" text-anchor=\"middle\" font-size=\"10\">1e"
       << k << "</text>\n";
  }
  os << "<text x=\"" << num(px(0) - 4) << "\" y=\"" << num(py(0)) << "\" text-anchor=\"end\" font-size=\"10\">" << num(ylo)
     << "</text>\n<text x=\"" << num(px(0) - 4) << "\" y=\"" << num(py(1)) << "\" text-anchor=\"end\" font-size=\"10\">"
     << num(yhi) << "</text>\n</svg>\n";
  return os.str();
}

}  // namespace milq
