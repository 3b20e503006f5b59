#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "smsvm/dataset.hpp"

namespace smsvm {

enum class LineSearchStatus {
  interior,    // minimizer strictly between breakpoints (or clamped to s_max)
  breakpoint,  // minimizer is exactly -w[j]/d[j]; caller should zero w[j]
  at_zero,     // right slope at 0 is nonnegative: d is not a descent direction
  unbounded,   // a = 0 and the slope never turns nonnegative
};

struct LineSearchResult {
  double s = 0.0;
  std::optional<Index> zero_index;  // set iff status == breakpoint
  LineSearchStatus status = LineSearchStatus::interior;
};

struct LineSearchStats {
  int slope_evals = 0;      // slope evaluations during the binary search
  int breakpoints = 0;      // count of distinct positive breakpoints
};

// Exact minimizer of j(s) = a s^2 + b s + c + mu ||w + s d||_1 over
// [0, s_max], located by binary search over the sorted breakpoints
// sigma_i = -w_i/d_i. j' is nondecreasing with jumps mu|d_i| at the
// breakpoints; on each open segment it is linear with slope 2a. Duplicate
// breakpoints are merged into one with the summed jump.
//
// Requires d != 0 and either a > 0 or mu ||d||_1 > -b; otherwise j has no
// minimizer and status unbounded is returned.
inline LineSearchResult linesearch_l1(const Vector& w, const Vector& d, double b, double a,
                                      double mu, double s_max,
                                      LineSearchStats* stats = nullptr) {
  const Index m = w.size();
  const double inf = std::numeric_limits<double>::infinity();
  const double d_l1 = d.lpNorm<1>();

  auto sgn = [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };

  // zero-slope tolerance at a breakpoint, scaled to the slope's own terms
  auto zero_tol = [&](double s) { return 1e-12 * (std::abs(b) + 2.0 * a * s + mu * d_l1); };

  auto clamp_to_smax = [&](double s) {
    LineSearchResult r;
    r.s = std::min(s, s_max);
    r.status = LineSearchStatus::interior;
    return r;
  };

  // positive breakpoints, ties merged (smallest coordinate index reported)
  struct Breakpoint {
    double sigma;
    double abs_d_sum;
    std::vector<Index> members;
  };
  std::vector<std::pair<double, Index>> raw;
  raw.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    if (d[i] == 0.0) continue;
    const double sigma = -w[i] / d[i];
    if (sigma > 0.0) raw.emplace_back(sigma, i);
  }
  std::sort(raw.begin(), raw.end());
  std::vector<Breakpoint> bp;
  for (const auto& [sigma, i] : raw) {
    if (!bp.empty() && bp.back().sigma == sigma) {
      bp.back().abs_d_sum += std::abs(d[i]);
      bp.back().members.push_back(i);
    } else {
      bp.push_back({sigma, std::abs(d[i]), {i}});
    }
  }
  const int r = static_cast<int>(bp.size());
  if (stats) stats->breakpoints = r;

  // right slope at s = 0: coordinates sitting exactly at zero contribute
  // mu |d_i| since |w_i + s d_i| grows immediately
  double slope1 = b;
  for (Index i = 0; i < m; ++i) {
    slope1 += mu * (w[i] != 0.0 ? sgn(w[i]) * d[i] : std::abs(d[i]));
  }
  if (stats) ++stats->slope_evals;
  if (slope1 >= 0.0) return {0.0, std::nullopt, LineSearchStatus::at_zero};

  // slope beyond the last breakpoint (a = 0) or +inf (a > 0)
  double slope2 = a > 0 ? inf : b + mu * d_l1;
  if (stats) ++stats->slope_evals;
  if (slope2 <= 0.0) {
    if (std::isfinite(s_max)) return clamp_to_smax(s_max);
    return {inf, std::nullopt, LineSearchStatus::unbounded};
  }

  // sided slopes at breakpoint t: slope0 excludes the breakpoint's own
  // coordinates, which contribute -+ mu |d| on either side
  auto sided_slopes = [&](const Breakpoint& p, double& minus, double& plus) {
    double slope0 = 2.0 * a * p.sigma + b;
    std::size_t next_member = 0;
    for (Index k = 0; k < m; ++k) {
      if (next_member < p.members.size() && p.members[next_member] == k) {
        ++next_member;
        continue;
      }
      slope0 += mu * sgn(w[k] + p.sigma * d[k]) * d[k];
    }
    const double jump = mu * p.abs_d_sum;
    minus = slope0 - jump;
    plus = slope0 + jump;
    if (stats) ++stats->slope_evals;
  };

  int i1 = 0, i2 = r + 1;
  double s1 = 0.0, s2 = inf;
  // binary search for the segment (or breakpoint) where j' crosses zero
  while (i2 > i1 + 1) {
    const int i = (i1 + i2) / 2;
    const Breakpoint& p = bp[static_cast<std::size_t>(i - 1)];
    double slope_minus = 0, slope_plus = 0;
    sided_slopes(p, slope_minus, slope_plus);
    const double tol = zero_tol(p.sigma);
    if (std::abs(slope_minus) <= tol || std::abs(slope_plus) <= tol ||
        (slope_minus < 0.0 && slope_plus > 0.0)) {
      if (p.sigma > s_max) return clamp_to_smax(p.sigma);
      return {p.sigma, p.members.front(), LineSearchStatus::breakpoint};
    }
    if (slope_plus < 0.0) {
      i1 = i;
      s1 = p.sigma;
      slope1 = slope_plus;  // j'(s1^+)
    } else {
      i2 = i;
      s2 = p.sigma;
      slope2 = slope_minus;  // j'(s2^-)
    }
  }

  // crossing strictly inside (s1, s2), where j'(s) = slope1 + 2a (s - s1)
  if (a > 0.0) {
    const double s = s1 - slope1 / (2.0 * a);
    return clamp_to_smax(s);
  }
  // a = 0: j' is constant on the segment, so the crossing sits at s2
  if (i2 <= r) {
    const Breakpoint& p = bp[static_cast<std::size_t>(i2 - 1)];
    if (p.sigma > s_max) return clamp_to_smax(p.sigma);
    return {p.sigma, p.members.front(), LineSearchStatus::breakpoint};
  }
  // a = 0 past the last breakpoint: the constant tail slope equals slope2 > 0
  // which was checked above, so up to rounding the crossing is the last
  // breakpoint itself
  if (i1 >= 1) {
    const Breakpoint& p = bp[static_cast<std::size_t>(i1 - 1)];
    if (p.sigma > s_max) return clamp_to_smax(p.sigma);
    return {p.sigma, p.members.front(), LineSearchStatus::breakpoint};
  }
  return {0.0, std::nullopt, LineSearchStatus::at_zero};
}

}  // namespace smsvm
