#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "smsvm/dataset.hpp"
#include "smsvm/model.hpp"

namespace smsvm {

// Trains on an already standardized (and bias-augmented) dataset. warm is
// either empty or a previous solution of a neighboring hyperparameter point,
// which the trainer may use as its starting iterate.
using Trainer =
    std::function<Vector(const Dataset&, double lambda, double mu, const std::optional<Vector>& warm)>;

struct FoldResult {
  int fold = 0;
  double lambda_star = 0;
  double mu_star = 0;
  double val_acc = 0;   // mean inner validation accuracy of the selected point
  double test_acc = 0;
  double seconds = 0;
  Eigen::MatrixXd val_grid;  // lambda index x mu index, mean validation accuracy
};

struct CVReport {
  int outer_k = 0;
  int inner_l = 0;
  std::vector<double> lambda_grid;
  std::vector<double> mu_grid;
  std::vector<FoldResult> folds;
  double mean_test_accuracy = 0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
  return splitmix64_next(x);
}

}  // namespace detail

// Deterministic shuffle by seed, then contiguous chunking; stratified keeps
// the class ratios of y in every fold.
inline std::vector<std::vector<Index>> fold_split(const Vector& y, int k, std::uint64_t seed,
                                                  bool stratified = true) {
  const Index n = y.size();
  if (k < 2) throw std::invalid_argument("cv: need at least 2 folds");
  if (n < k) throw std::invalid_argument("cv: fold would be empty (N < k)");

  std::vector<std::vector<Index>> groups;
  if (stratified) {
    std::vector<Index> pos, neg;
    for (Index i = 0; i < n; ++i) (y[i] > 0 ? pos : neg).push_back(i);
    groups = {std::move(pos), std::move(neg)};
  } else {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    groups = {std::move(all)};
  }

  Xoshiro256pp rng(seed);
  std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
  for (auto& g : groups) {
    deterministic_shuffle(g, rng);
    const std::size_t sz = g.size();
    for (int f = 0; f < k; ++f) {
      const std::size_t lo = sz * static_cast<std::size_t>(f) / static_cast<std::size_t>(k);
      const std::size_t hi = sz * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(k);
      for (std::size_t t = lo; t < hi; ++t) folds[static_cast<std::size_t>(f)].push_back(g[t]);
    }
  }
  for (const auto& f : folds) {
    if (f.empty()) throw std::invalid_argument("cv: fold would be empty");
  }
  return folds;
}

inline Dataset subset(const Dataset& d, const std::vector<Index>& rows) {
  Dataset out;
  out.X = Matrix(static_cast<Index>(rows.size()), d.cols());
  out.y = Vector(static_cast<Index>(rows.size()));
  for (Index i = 0; i < out.rows(); ++i) {
    out.X.row(i) = d.X.row(rows[static_cast<std::size_t>(i)]);
    out.y[i] = d.y[rows[static_cast<std::size_t>(i)]];
  }
  return out;
}

// Accuracy of sign(X w) (sign(0) = +1) on an already prepared dataset.
inline double accuracy_of_weights(const Vector& w, const Dataset& d) {
  Index correct = 0;
  for (Index i = 0; i < d.rows(); ++i) {
    const double label = d.X.row(i).dot(w) >= 0.0 ? 1.0 : -1.0;
    if (label == d.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(d.rows());
}

// Nested cross-validation: an outer k-fold loop estimates test accuracy, an
// inner l-fold loop selects (lambda, mu) by mean validation accuracy.
// Standardization is fitted on each training portion only and applied to the
// matching validation/test portion. Equal-accuracy ties prefer larger mu,
// then larger lambda. Outer folds may run on several threads; results are
// merged by fold index so the report does not depend on scheduling.
inline CVReport nested_cv(const Dataset& d, const std::vector<double>& lambda_grid,
                          const std::vector<double>& mu_grid, int k, int l,
                          const Trainer& train_val, const Trainer& train_final,
                          std::uint64_t seed, bool bias = true, bool stratified = true,
                          int jobs = 1) {
  if (lambda_grid.empty() || mu_grid.empty()) throw std::invalid_argument("cv: empty hyperparameter grid");
  if (l < 2) throw std::invalid_argument("cv: need at least 2 inner folds");
  d.validate();

  const auto outer_folds = fold_split(d.y, k, seed, stratified);

  CVReport report;
  report.outer_k = k;
  report.inner_l = l;
  report.lambda_grid = lambda_grid;
  report.mu_grid = mu_grid;
  report.folds.resize(static_cast<std::size_t>(k));

  auto prepare = [bias](const Standardizer& s, const Dataset& raw) {
    Dataset out = standardize_apply(s, raw);
    return bias ? augment_bias(out) : out;
  };

  auto run_fold = [&](int fold) {
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<Index> train_rows;
    for (int f = 0; f < k; ++f) {
      if (f == fold) continue;
      const auto& rows = outer_folds[static_cast<std::size_t>(f)];
      train_rows.insert(train_rows.end(), rows.begin(), rows.end());
    }
    const Dataset train_d = subset(d, train_rows);
    const Dataset test_d = subset(d, outer_folds[static_cast<std::size_t>(fold)]);

    const auto inner_folds =
        fold_split(train_d.y, l, detail::mix_seed(seed, static_cast<std::uint64_t>(fold)), stratified);

    Eigen::MatrixXd acc(static_cast<Index>(lambda_grid.size()), static_cast<Index>(mu_grid.size()));
    acc.setZero();
    std::optional<Vector> warm;  // chained through every training of this outer fold
    for (int j = 0; j < l; ++j) {
      std::vector<Index> inner_rows;
      for (int f = 0; f < l; ++f) {
        if (f == j) continue;
        const auto& rows = inner_folds[static_cast<std::size_t>(f)];
        inner_rows.insert(inner_rows.end(), rows.begin(), rows.end());
      }
      const Dataset inner_raw = subset(train_d, inner_rows);
      const Dataset val_raw = subset(train_d, inner_folds[static_cast<std::size_t>(j)]);
      const Standardizer s = standardize_fit(inner_raw);
      const Dataset inner_prepared = prepare(s, inner_raw);
      const Dataset val_prepared = prepare(s, val_raw);

      // the grid is walked in a fixed order, each training warm-started
      // from the previous grid point of this inner fold
      std::optional<Vector> warm;
      for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
        for (std::size_t mi = 0; mi < mu_grid.size(); ++mi) {
          const Vector w = train_val(inner_prepared, lambda_grid[li], mu_grid[mi], warm);
          warm = w;
          acc(static_cast<Index>(li), static_cast<Index>(mi)) +=
              accuracy_of_weights(w, val_prepared) / static_cast<double>(l);
        }
      }
    }

    std::size_t best_li = 0, best_mi = 0;
    for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
      for (std::size_t mi = 0; mi < mu_grid.size(); ++mi) {
        const double a = acc(static_cast<Index>(li), static_cast<Index>(mi));
        const double best = acc(static_cast<Index>(best_li), static_cast<Index>(best_mi));
        const bool better =
            a > best ||
            (a == best && (mu_grid[mi] > mu_grid[best_mi] ||
                           (mu_grid[mi] == mu_grid[best_mi] && lambda_grid[li] > lambda_grid[best_li])));
        if (better) {
          best_li = li;
          best_mi = mi;
        }
      }
    }

    const Standardizer s_full = standardize_fit(train_d);
    const Dataset train_prepared = prepare(s_full, train_d);
    const Dataset test_prepared = prepare(s_full, test_d);
    const Vector w = train_final(train_prepared, lambda_grid[best_li], mu_grid[best_mi], std::nullopt);

    FoldResult& r = report.folds[static_cast<std::size_t>(fold)];
    r.fold = fold;
    r.lambda_star = lambda_grid[best_li];
    r.mu_star = mu_grid[best_mi];
    r.val_acc = acc(static_cast<Index>(best_li), static_cast<Index>(best_mi));
    r.test_acc = accuracy_of_weights(w, test_prepared);
    r.val_grid = acc;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  if (jobs <= 1) {
    for (int fold = 0; fold < k; ++fold) run_fold(fold);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(jobs, k);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (int fold = next.fetch_add(1); fold < k; fold = next.fetch_add(1)) run_fold(fold);
      });
    }
    for (auto& th : pool) th.join();
  }

  double mean = 0;
  for (const auto& f : report.folds) mean += f.test_acc;
  report.mean_test_accuracy = mean / static_cast<double>(k);
  return report;
}

// CSV: fold,lambda_star,mu_star,val_acc,test_acc,seconds
inline void write_cv_csv(const CVReport& r, std::ostream& out) {
  out << "fold,lambda_star,mu_star,val_acc,test_acc,seconds\n";
  char buf[192];
  for (const auto& f : r.folds) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.6f\n", f.fold, f.lambda_star,
                  f.mu_star, f.val_acc, f.test_acc, f.seconds);
    out << buf;
  }
}

inline void print_cv_table(const CVReport& r, std::ostream& out) {
  char buf[192];
  out << "fold   lambda*      mu*          val acc   test acc  seconds\n";
  for (const auto& f : r.folds) {
    std::snprintf(buf, sizeof(buf), "%-6d %-12g %-12g %8.2f %9.2f %9.3f\n", f.fold, f.lambda_star,
                  f.mu_star, 100.0 * f.val_acc, 100.0 * f.test_acc, f.seconds);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "Mean test accuracy: %.2f\n", 100.0 * r.mean_test_accuracy);
  out << buf;
}

}  // namespace smsvm
