#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smsvm/rng.hpp"

namespace smsvm {

// Design matrices are row major: a data item is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Dataset {
  Matrix X;  // N x m
  Vector y;  // entries +1 / -1
  std::vector<std::string> feature_names;  // optional, empty or size m

  Index rows() const { return X.rows(); }
  Index cols() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("dataset: N >= 1 and m >= 1 required");
    if (y.size() != X.rows()) throw std::invalid_argument("dataset: label count does not match row count");
    if (!X.allFinite()) throw std::invalid_argument("dataset: non-finite feature value");
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] != 1.0 && y[i] != -1.0) throw std::invalid_argument("dataset: labels must be +1 or -1");
    }
  }
};

struct Standardizer {
  Vector means;
  Vector stds;  // strictly positive; constant columns fall back to 1

  Index cols() const { return means.size(); }
};

struct SyntheticSpec {
  Index m = 50;
  Index n = 10000;            // must be even, half per class
  double centroid_scale = 0;  // <= 0 means the default 5/sqrt(m)
  std::uint64_t seed = 0;

  double effective_scale() const {
    return centroid_scale > 0 ? centroid_scale : 5.0 / std::sqrt(static_cast<double>(m));
  }
};

namespace detail {

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

// Label token vs. the requested positive label: string match first, numeric
// match as a fallback so "+1" and "1" compare equal.
inline bool label_matches(const std::string& tok, const std::string& positive) {
  if (tok == positive) return true;
  double a = 0, b = 0;
  return parse_double(tok, a) && parse_double(positive, b) && a == b;
}

}  // namespace detail

// LIBSVM text format: "<label> <idx>:<val> ...", 1-based strictly increasing
// indices, absent indices are zero. Without positive_label the sign of the
// numeric label decides the class; with it, equality to positive_label does.
inline Dataset load_libsvm(const std::string& path,
                           const std::optional<std::string>& positive_label = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::vector<std::vector<std::pair<Index, double>>> rows;
  std::vector<double> labels;
  Index max_index = 0;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;

    std::istringstream ls(line);
    std::string label_tok;
    ls >> label_tok;
    double label_value = 0;
    if (!detail::parse_double(label_tok, label_value)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed label '" + label_tok + "'");
    }
    if (positive_label) {
      labels.push_back(detail::label_matches(label_tok, *positive_label) ? 1.0 : -1.0);
    } else {
      labels.push_back(label_value > 0 ? 1.0 : -1.0);
    }

    std::vector<std::pair<Index, double>> row;
    Index prev_index = 0;
    std::string feat;
    while (ls >> feat) {
      const auto colon = feat.find(':');
      if (colon == std::string::npos) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed feature '" + feat + "'");
      }
      double idx_val = 0, val = 0;
      if (!detail::parse_double(feat.substr(0, colon), idx_val) || idx_val != std::floor(idx_val) || idx_val < 1) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad feature index in '" + feat + "'");
      }
      if (!detail::parse_double(feat.substr(colon + 1), val)) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad feature value in '" + feat + "'");
      }
      const Index idx = static_cast<Index>(idx_val);
      if (idx <= prev_index) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": non-increasing index " + std::to_string(idx));
      }
      prev_index = idx;
      max_index = std::max(max_index, idx);
      row.emplace_back(idx - 1, val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty file");

  Dataset d;
  d.X = Matrix::Zero(static_cast<Index>(rows.size()), max_index);
  d.y = Vector(static_cast<Index>(labels.size()));
  for (Index i = 0; i < d.X.rows(); ++i) {
    d.y[i] = labels[static_cast<std::size_t>(i)];
    for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) d.X(i, j) = v;
  }
  d.validate();
  return d;
}

// Numeric CSV with an optional header row. label_column is a header name or
// a 0-based column index; negative indices count from the end (-1 = last).
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& positive_label, bool has_header,
                        char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  auto split = [delimiter](const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, delimiter)) out.push_back(cell);
    if (!line.empty() && line.back() == delimiter) out.emplace_back();
    return out;
  };

  std::string raw;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> body;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = detail::strip_cr(raw);
    if (detail::is_blank(line)) continue;
    auto cells = split(line);
    if (has_header && header.empty()) {
      header = std::move(cells);
      continue;
    }
    if (!body.empty() && cells.size() != body.front().size()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": ragged row (" +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(body.front().size()) + ")");
    }
    body.push_back(std::move(cells));
  }
  if (body.empty()) throw std::runtime_error(path + ": empty file");

  const Index ncols = static_cast<Index>(body.front().size());
  Index label_idx = -1;
  if (!header.empty()) {
    for (Index j = 0; j < static_cast<Index>(header.size()); ++j) {
      if (header[static_cast<std::size_t>(j)] == label_column) label_idx = j;
    }
  }
  if (label_idx < 0) {
    double as_num = 0;
    if (!detail::parse_double(label_column, as_num) || as_num != std::floor(as_num)) {
      throw std::runtime_error("label column '" + label_column + "' not found");
    }
    label_idx = static_cast<Index>(as_num);
    if (label_idx < 0) label_idx += ncols;
  }
  if (label_idx < 0 || label_idx >= ncols) {
    throw std::runtime_error("label column index " + std::to_string(label_idx) + " out of range");
  }

  Dataset d;
  d.X = Matrix(static_cast<Index>(body.size()), ncols - 1);
  d.y = Vector(static_cast<Index>(body.size()));
  for (Index i = 0; i < d.X.rows(); ++i) {
    const auto& cells = body[static_cast<std::size_t>(i)];
    Index jx = 0;
    for (Index j = 0; j < ncols; ++j) {
      const std::string& cell = cells[static_cast<std::size_t>(j)];
      if (j == label_idx) {
        d.y[i] = detail::label_matches(cell, positive_label) ? 1.0 : -1.0;
        continue;
      }
      double v = 0;
      if (!detail::parse_double(cell, v)) {
        throw std::runtime_error(path + ": non-numeric feature cell '" + cell + "' at row " +
                                 std::to_string(i + 1) + ", column " + std::to_string(j + 1));
      }
      d.X(i, jx++) = v;
    }
  }
  if (!header.empty()) {
    for (Index j = 0; j < ncols; ++j) {
      if (j != label_idx) d.feature_names.push_back(header[static_cast<std::size_t>(j)]);
    }
  }
  d.validate();
  return d;
}

// Column means and population standard deviations; scale falls back to 1 for
// (numerically) constant columns so transforms never divide by zero.
inline Standardizer standardize_fit(const Dataset& d) {
  const Index n = d.rows(), m = d.cols();
  Standardizer s;
  s.means = Vector::Zero(m);
  s.stds = Vector::Ones(m);
  for (Index i = 0; i < n; ++i) s.means += d.X.row(i).transpose();
  s.means /= static_cast<double>(n);
  Vector ssq = Vector::Zero(m);
  for (Index i = 0; i < n; ++i) {
    ssq.array() += (d.X.row(i).transpose() - s.means).array().square();
  }
  for (Index j = 0; j < m; ++j) {
    const double sd = std::sqrt(ssq[j] / static_cast<double>(n));
    s.stds[j] = sd < 1e-12 ? 1.0 : sd;
  }
  return s;
}

inline Dataset standardize_apply(const Standardizer& s, const Dataset& d) {
  if (s.cols() != d.cols()) throw std::invalid_argument("standardizer/dataset dimension mismatch");
  Dataset out = d;
  for (Index i = 0; i < out.rows(); ++i) {
    out.X.row(i) = (d.X.row(i).transpose() - s.means).cwiseQuotient(s.stds).transpose();
  }
  return out;
}

// Two centroids with N(0,1) components, scaled, then unit-covariance samples
// around each; draw order and the final row shuffle are fixed by the seed.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 2 || spec.n % 2 != 0) throw std::invalid_argument("synthetic: N must be even and >= 2");
  if (spec.m < 1) throw std::invalid_argument("synthetic: m >= 1 required");
  if (spec.effective_scale() <= 0) throw std::invalid_argument("synthetic: centroid scale must be positive");

  NormalSampler normals(spec.seed);
  const double scale = spec.effective_scale();

  Matrix centroids(2, spec.m);
  for (Index c = 0; c < 2; ++c) {
    for (Index j = 0; j < spec.m; ++j) centroids(c, j) = scale * normals.next();
  }

  Dataset d;
  d.X = Matrix(spec.n, spec.m);
  d.y = Vector(spec.n);
  const Index half = spec.n / 2;
  for (Index i = 0; i < spec.n; ++i) {
    const Index c = i < half ? 0 : 1;
    d.y[i] = c == 0 ? 1.0 : -1.0;
    for (Index j = 0; j < spec.m; ++j) d.X(i, j) = centroids(c, j) + normals.next();
  }

  std::vector<Index> order(static_cast<std::size_t>(spec.n));
  std::iota(order.begin(), order.end(), Index{0});
  deterministic_shuffle(order, normals.generator());

  Dataset shuffled;
  shuffled.X = Matrix(spec.n, spec.m);
  shuffled.y = Vector(spec.n);
  for (Index i = 0; i < spec.n; ++i) {
    shuffled.X.row(i) = d.X.row(order[static_cast<std::size_t>(i)]);
    shuffled.y[i] = d.y[order[static_cast<std::size_t>(i)]];
  }
  return shuffled;
}

// Appends a trailing all-ones column (the bias trick x~ = (x, 1)).
inline Dataset augment_bias(const Dataset& d) {
  Dataset out;
  out.X = Matrix(d.rows(), d.cols() + 1);
  out.X.leftCols(d.cols()) = d.X;
  out.X.col(d.cols()).setOnes();
  out.y = d.y;
  out.feature_names = d.feature_names;
  if (!out.feature_names.empty()) out.feature_names.push_back("__bias__");
  return out;
}

inline void save_libsvm(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  char buf[64];
  for (Index i = 0; i < d.rows(); ++i) {
    out << (d.y[i] > 0 ? "+1" : "-1");
    for (Index j = 0; j < d.cols(); ++j) {
      if (d.X(i, j) == 0.0) continue;
      std::snprintf(buf, sizeof(buf), " %lld:%.17g", static_cast<long long>(j + 1), d.X(i, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace smsvm
