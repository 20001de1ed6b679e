#include "auscult/rf_tune.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "auscult/error.hpp"
#include "auscult/rng.hpp"

namespace auscult::forest {

namespace {

struct Point {
  double x0, x1;  // normalized (mtry, min_node_size)
};

double rbf(const Point& a, const Point& b) {
  constexpr double kLengthScale = 0.2;
  const double d0 = a.x0 - b.x0;
  const double d1 = a.x1 - b.x1;
  return std::exp(-(d0 * d0 + d1 * d1) / (2.0 * kLengthScale * kLengthScale));
}

// In-place Cholesky of a small SPD matrix (row-major). Returns false if a
// pivot collapses.
bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
      if (i == j) {
        if (sum <= 0.0) return false;
        a[i * n + i] = std::sqrt(sum);
      } else {
        a[i * n + j] = sum / a[j * n + j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  }
  return true;
}

// Solves L L^T x = b given the Cholesky factor L.
std::vector<double> cholesky_solve(const std::vector<double>& chol,
                                   std::size_t n, std::vector<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= chol[i * n + k] * b[k];
    b[i] = sum / chol[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double sum = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) sum -= chol[k * n + ii] * b[k];
    b[ii] = sum / chol[ii * n + ii];
  }
  return b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

RfTuneResult rf_tune(const dataset::Dataset& train, const RfTuneOptions& opt) {
  if (opt.warmup < 1 || opt.budget < opt.warmup)
    fail(Errc::BadConfig, "tuning needs budget >= warmup >= 1");

  const int n_cols = static_cast<int>(train.cols());
  const int n_rows = static_cast<int>(train.rows());
  const int mtry_max = std::max(1, n_cols);
  const int node_max = std::max(1, n_rows / 4);
  const int default_mtry = std::max(
      1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_cols)))));

  Rng rng(derive_seed(opt.seed, 0x7e57));
  const std::uint64_t fit_seed = derive_seed(opt.seed, 0xf17);

  RfTuneResult result;
  std::map<std::pair<int, int>, double> cache;

  auto evaluate = [&](int mtry, int min_node_size) -> double {
    mtry = std::clamp(mtry, 1, mtry_max);
    min_node_size = std::clamp(min_node_size, 1, node_max);
    const auto key = std::make_pair(mtry, min_node_size);
    const auto hit = cache.find(key);
    if (hit != cache.end()) return hit->second;
    RfConfig cfg;
    cfg.num_trees = opt.num_trees;
    cfg.mtry = mtry;
    cfg.min_node_size = min_node_size;
    cfg.always_split = opt.always_split;
    cfg.seed = fit_seed;
    const double loss =
        RandomForest::fit(train, cfg, opt.threads).oob_log_loss();
    cache.emplace(key, loss);
    result.history.push_back({mtry, min_node_size, loss});
    return loss;
  };

  auto random_config = [&]() -> std::pair<int, int> {
    const int mtry = 1 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(mtry_max)));
    const int node = 1 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(node_max)));
    return {mtry, node};
  };

  // Warmup: the default first (so the result can never be worse than it),
  // then random probes.
  evaluate(default_mtry, 1);
  int spent = 1;
  const std::size_t space =
      static_cast<std::size_t>(mtry_max) * static_cast<std::size_t>(node_max);
  while (spent < opt.warmup && cache.size() < space) {
    auto [mtry, node] = random_config();
    if (cache.count({mtry, node})) continue;  // probe again, budget uncharged
    evaluate(mtry, node);
    ++spent;
  }

  auto normalize = [&](int mtry, int node) -> Point {
    return {mtry_max > 1 ? static_cast<double>(mtry - 1) / (mtry_max - 1) : 0.0,
            node_max > 1 ? static_cast<double>(node - 1) / (node_max - 1) : 0.0};
  };

  while (spent < opt.budget && cache.size() < space) {
    std::pair<int, int> chosen{0, 0};
    bool have_choice = false;

    if (!opt.random_search_only) {
      // Fit the surrogate to everything evaluated so far.
      std::vector<Point> xs;
      std::vector<double> ys;
      for (const auto& eval : result.history) {
        xs.push_back(normalize(eval.mtry, eval.min_node_size));
        ys.push_back(eval.oob_log_loss);
      }
      const std::size_t m = xs.size();
      double y_mean = 0.0;
      for (double y : ys) y_mean += y;
      y_mean /= static_cast<double>(m);
      double y_var = 0.0;
      for (double y : ys) y_var += (y - y_mean) * (y - y_mean);
      const double y_sd = std::sqrt(y_var / static_cast<double>(m));

      if (y_sd > 1e-12) {
        std::vector<double> k(m * m);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) k[i * m + j] = rbf(xs[i], xs[j]);
          k[i * m + i] += 1e-6;  // nugget
        }
        std::vector<double> z(m);
        for (std::size_t i = 0; i < m; ++i) z[i] = (ys[i] - y_mean) / y_sd;
        if (cholesky(k, m)) {
          const std::vector<double> alpha = cholesky_solve(k, m, z);
          const double z_best = *std::min_element(z.begin(), z.end());

          double best_ei = -1.0;
          for (int c = 0; c < 256; ++c) {
            const auto [mtry, node] = random_config();
            if (cache.count({mtry, node})) continue;
            const Point p = normalize(mtry, node);
            std::vector<double> kx(m);
            for (std::size_t i = 0; i < m; ++i) kx[i] = rbf(p, xs[i]);
            double mu = 0.0;
            for (std::size_t i = 0; i < m; ++i) mu += kx[i] * alpha[i];
            const std::vector<double> v = cholesky_solve(k, m, kx);
            double var = 1.0 + 1e-6;
            for (std::size_t i = 0; i < m; ++i) var -= kx[i] * v[i];
            const double sigma = std::sqrt(std::max(var, 1e-12));
            const double gap = z_best - mu;
            const double zz = gap / sigma;
            const double ei = sigma * (zz * normal_cdf(zz) + normal_pdf(zz));
            if (ei > best_ei) {
              best_ei = ei;
              chosen = {mtry, node};
              have_choice = true;
            }
          }
        }
      }
    }

    if (!have_choice) {
      // Flat surrogate or exhausted candidates: fall back to a random probe.
      do {
        chosen = random_config();
      } while (cache.count(chosen) && cache.size() < space);
      if (cache.count(chosen)) break;
    }
    evaluate(chosen.first, chosen.second);
    ++spent;
  }

  const auto best = std::min_element(
      result.history.begin(), result.history.end(),
      [](const auto& a, const auto& b) { return a.oob_log_loss < b.oob_log_loss; });
  result.best.num_trees = opt.num_trees;
  result.best.mtry = best->mtry;
  result.best.min_node_size = best->min_node_size;
  result.best.always_split = opt.always_split;
  result.best.seed = fit_seed;
  result.best_oob_log_loss = best->oob_log_loss;
  return result;
}

}  // namespace auscult::forest
