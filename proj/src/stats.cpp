#include "auscult/stats.hpp"

#include <algorithm>
#include <cmath>

namespace auscult::stats {

namespace {

// Central moment of given order.
double central_moment(std::span<const double> v, double m, int order) {
  double acc = 0.0;
  for (double x : v) acc += std::pow(x - m, order);
  return acc / static_cast<double>(v.size());
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) return kNa;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double stdev_pop(std::span<const double> v) {
  if (v.empty()) return kNa;
  const double m = mean(v);
  return std::sqrt(std::max(0.0, central_moment(v, m, 2)));
}

double stdev_sample(std::span<const double> v) {
  if (v.size() < 2) return kNa;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double skewness(std::span<const double> v) {
  if (v.empty()) return kNa;
  const double m = mean(v);
  const double m2 = central_moment(v, m, 2);
  if (m2 < 1e-24) return 0.0;
  return central_moment(v, m, 3) / std::pow(m2, 1.5);
}

double kurtosis_excess(std::span<const double> v) {
  if (v.empty()) return kNa;
  const double m = mean(v);
  const double m2 = central_moment(v, m, 2);
  if (m2 < 1e-24) return 0.0;
  return central_moment(v, m, 4) / (m2 * m2) - 3.0;
}

double minimum(std::span<const double> v) {
  if (v.empty()) return kNa;
  return *std::min_element(v.begin(), v.end());
}

double maximum(std::span<const double> v) {
  if (v.empty()) return kNa;
  return *std::max_element(v.begin(), v.end());
}

double percentile(std::span<const double> v, double p) {
  if (v.empty()) return kNa;
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::span<const double> v) { return percentile(v, 50.0); }

double index_slope(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return kNa;
  if (n == 1) return 0.0;
  const double mx = static_cast<double>(n - 1) / 2.0;
  const double my = mean(v);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - mx;
    sxy += dx * (v[i] - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double abs_diff_mean(std::span<const double> v) {
  if (v.empty()) return kNa;
  if (v.size() == 1) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) acc += std::abs(v[i] - v[i - 1]);
  return acc / static_cast<double>(v.size() - 1);
}

double diff_stdev(std::span<const double> v) {
  if (v.empty()) return kNa;
  if (v.size() == 1) return 0.0;
  std::vector<double> d(v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i) d[i - 1] = v[i] - v[i - 1];
  return stdev_pop(d);
}

}  // namespace auscult::stats
