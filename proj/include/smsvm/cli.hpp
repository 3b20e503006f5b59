#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "smsvm/cross_validation.hpp"
#include "smsvm/model.hpp"
#include "smsvm/sgd.hpp"
#include "smsvm/solver.hpp"

namespace smsvm::cli {

// Exit codes: 0 success, 1 runtime error, 2 command line parse error,
// 3 invalid flag range, 4 missing input file.
enum ExitCode : int {
  exit_ok = 0,
  exit_runtime = 1,
  exit_usage = 2,
  exit_range = 3,
  exit_missing_file = 4,
};

struct MissingFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataFlags {
  std::string path;
  std::string format = "libsvm";  // libsvm | csv
  std::string label_column = "-1";
  std::string positive_label;  // empty: numeric sign rule (libsvm only)
  bool header = false;
  std::string delimiter = ",";
};

namespace detail {

inline void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.path, "input data file")->required();
  cmd->add_option("--format", f.format, "data format: libsvm or csv")
      ->check(CLI::IsMember({"libsvm", "csv"}));
  cmd->add_option("--label-column", f.label_column,
                  "csv label column (header name or 0-based index; -1 = last)");
  cmd->add_option("--positive-label", f.positive_label,
                  "label value mapped to +1; everything else maps to -1");
  cmd->add_flag("--header", f.header, "csv file has a header row");
  cmd->add_option("--delimiter", f.delimiter, "csv delimiter (default ,)");
}

inline Dataset load_data(const DataFlags& f) {
  if (!std::filesystem::exists(f.path)) throw MissingFileError("no such file: " + f.path);
  if (f.format == "csv") {
    const std::string positive = f.positive_label.empty() ? "1" : f.positive_label;
    const char delim = f.delimiter.empty() ? ',' : f.delimiter[0];
    return load_csv(f.path, f.label_column, positive, f.header, delim);
  }
  std::optional<std::string> positive;
  if (!f.positive_label.empty()) positive = f.positive_label;
  return load_libsvm(f.path, positive);
}

inline void add_hyperparam_flags(CLI::App* cmd, Hyperparams& h) {
  cmd->add_option("--lambda", h.lambda, "l2 penalty weight");
  cmd->add_option("--mu", h.mu, "l1 penalty weight");
  cmd->add_option("--alpha0", h.alpha0, "initial smoothing parameter");
  cmd->add_option("--alpha-min", h.alpha_min, "terminal smoothing parameter");
  cmd->add_option("--beta", h.beta, "smoothing reduction factor");
  cmd->add_option("--eta", h.eta, "near-solved threshold parameter");
  cmd->add_option("--c1", h.c1, "Armijo sufficient decrease parameter");
  cmd->add_option("--s-min", h.s_min, "minimal line search step");
}

inline void add_sgd_flags(CLI::App* cmd, SgdConfig& c, std::string& optimizer) {
  cmd->add_option("--learning-rate", c.learning_rate, "sgd learning rate");
  cmd->add_option("--rho", c.rho, "momentum / gradient decay");
  cmd->add_option("--adam-beta1", c.adam_beta1, "adam first moment decay");
  cmd->add_option("--adam-beta2", c.adam_beta2, "adam second moment decay");
  cmd->add_option("--epsilon", c.epsilon, "sgd numerical stability constant");
  cmd->add_option("--batch-size", c.batch_size, "minibatch size");
  cmd->add_option("--epochs", c.epochs, "number of passes over the data");
  (void)optimizer;
}

inline SgdOptimizer parse_optimizer(const std::string& name) {
  if (name == "nesterov") return SgdOptimizer::nesterov;
  if (name == "adadelta") return SgdOptimizer::adadelta;
  if (name == "adam") return SgdOptimizer::adam;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

inline std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v = 0;
    if (!smsvm::detail::parse_double(tok, v)) throw std::invalid_argument("bad grid value '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty hyperparameter grid");
  return out;
}

// Unsmoothed l1-l2 SVM objective, for reporting.
inline double exact_objective(const Vector& w, const Dataset& d, const Hyperparams& h) {
  double loss = 0;
  for (Index i = 0; i < d.rows(); ++i) {
    loss += std::max(0.0, 1.0 - d.y[i] * d.X.row(i).dot(w));
  }
  return 0.5 * h.lambda * w.squaredNorm() + loss / static_cast<double>(d.rows()) +
         h.mu * w.lpNorm<1>();
}

inline Index nonzero_count(const Vector& w) {
  Index nz = 0;
  for (Index j = 0; j < w.size(); ++j) nz += w[j] != 0.0;
  return nz;
}

struct PreparedTraining {
  Standardizer standardizer;
  Dataset prepared;
};

inline PreparedTraining prepare_training(const Dataset& raw, bool bias) {
  PreparedTraining p;
  p.standardizer = standardize_fit(raw);
  p.prepared = standardize_apply(p.standardizer, raw);
  if (bias) p.prepared = augment_bias(p.prepared);
  return p;
}

inline int cmd_train(const DataFlags& data_flags, Hyperparams h, const std::string& solver,
                     SgdConfig sgd_cfg, std::uint64_t seed, bool bias, bool verbose,
                     const std::string& out_path) {
  h.validate();
  const Dataset raw = load_data(data_flags);
  const auto prep = prepare_training(raw, bias);

  Model model;
  model.standardizer = prep.standardizer;
  model.bias_augmented = bias;
  model.hyperparams = h;

  if (solver == "smsvm") {
    SolveOptions opt;
    if (verbose) opt.trace = &std::cerr;
    const SolveResult res = solve(prep.prepared, h, opt);
    model.w = res.w;
    model.solver_tag = "smsvm";
    std::vector<int> steps;
    for (const auto& lvl : res.history) steps.push_back(lvl.newton_steps);
    std::sort(steps.begin(), steps.end());
    const int median = steps.empty() ? 0 : steps[steps.size() / 2];
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "alpha schedule: %g -> %g, %zu levels, median %d newton steps per level\n",
                  h.alpha0, res.alpha_final, res.history.size(), median);
    std::cout << buf;
  } else {
    sgd_cfg.optimizer = parse_optimizer(solver);
    sgd_cfg.seed = seed;
    sgd_cfg.validate();
    model.w = sgd_train(prep.prepared, h, sgd_cfg);
    model.solver_tag = std::string("sgd-") + solver;
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf), "final f: %.10g\n", exact_objective(model.w, prep.prepared, h));
  std::cout << buf;
  std::cout << "nonzeros: " << nonzero_count(model.w) << " of " << model.w.size() << '\n';
  save_model(model, out_path);
  std::cout << "model written to " << out_path << '\n';
  return exit_ok;
}

inline int cmd_predict(const std::string& model_path, const DataFlags& data_flags) {
  if (!std::filesystem::exists(model_path)) throw MissingFileError("no such file: " + model_path);
  const Model m = load_model(model_path);
  const Dataset d = load_data(data_flags);
  if (d.cols() > m.raw_features()) {
    throw std::runtime_error("data has more features than the model (" + std::to_string(d.cols()) +
                             " > " + std::to_string(m.raw_features()) + ")");
  }
  Vector x = Vector::Zero(m.raw_features());  // libsvm files may omit trailing zeros
  for (Index i = 0; i < d.rows(); ++i) {
    x.head(d.cols()) = d.X.row(i).transpose();
    std::cout << (predict(m, x) > 0 ? 1 : -1) << '\n';
  }
  return exit_ok;
}

inline int cmd_cv(const DataFlags& data_flags, Hyperparams h, double alpha_min_val,
                  double alpha0_warm, const std::string& lambda_grid_csv,
                  const std::string& mu_grid_csv, int k, int l, std::uint64_t seed, bool bias,
                  bool no_stratify, int jobs, const std::string& csv_out) {
  h.validate();
  const Dataset raw = load_data(data_flags);
  const auto lambda_grid = parse_grid(lambda_grid_csv);
  const auto mu_grid = parse_grid(mu_grid_csv);

  auto trainer_with = [&h, alpha0_warm](double alpha_min) {
    return [alpha_min, alpha0_warm, &h](const Dataset& d, double lambda, double mu,
                                        const std::optional<Vector>& warm) {
      Hyperparams local = h;
      local.lambda = lambda;
      local.mu = mu;
      local.alpha_min = alpha_min;
      SolveOptions opt;
      if (warm) {
        // a neighboring solution is already past the opening levels
        opt.w0 = *warm;
        local.alpha0 = std::max(alpha0_warm, alpha_min);
      }
      return solve(d, local, opt).w;
    };
  };
  const CVReport report = nested_cv(raw, lambda_grid, mu_grid, k, l, trainer_with(alpha_min_val),
                                    trainer_with(h.alpha_min), seed, bias, !no_stratify, jobs);
  print_cv_table(report, std::cout);
  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    if (!out) throw std::runtime_error("cannot write file: " + csv_out);
    write_cv_csv(report, out);
  }
  return exit_ok;
}

inline int cmd_synth(const std::string& shape, Index m, Index n, double scale, std::uint64_t seed,
                     const std::string& out_path) {
  SyntheticSpec spec;
  if (shape == "tall") {
    spec.m = 50;
    spec.n = 10000;
  } else if (shape == "wide") {
    spec.m = 2500;
    spec.n = 100;
  } else if (!shape.empty()) {
    throw std::invalid_argument("shape must be tall or wide");
  }
  if (m > 0) spec.m = m;
  if (n > 0) spec.n = n;
  spec.centroid_scale = scale;
  spec.seed = seed;
  const Dataset d = generate_synthetic(spec);
  save_libsvm(d, out_path);
  std::cout << "wrote " << d.rows() << " x " << d.cols() << " dataset to " << out_path << '\n';
  return exit_ok;
}

inline int cmd_bench(const DataFlags& data_flags, Hyperparams h, SgdConfig sgd_cfg,
                     std::uint64_t seed, bool bias, double test_fraction,
                     const std::string& csv_out) {
  h.validate();
  if (!(test_fraction > 0 && test_fraction < 1)) {
    throw std::invalid_argument("test fraction must be in (0,1)");
  }
  const Dataset raw = load_data(data_flags);

  // one seeded stratified split shared by every solver
  const int k = std::max(2, static_cast<int>(std::lround(1.0 / test_fraction)));
  const auto folds = fold_split(raw.y, k, seed, true);
  std::vector<Index> train_rows;
  for (int f = 1; f < k; ++f) {
    train_rows.insert(train_rows.end(), folds[static_cast<std::size_t>(f)].begin(),
                      folds[static_cast<std::size_t>(f)].end());
  }
  const Dataset train_raw = subset(raw, train_rows);
  const Dataset test_raw = subset(raw, folds[0]);
  const auto prep = prepare_training(train_raw, bias);
  Dataset test_prepared = standardize_apply(prep.standardizer, test_raw);
  if (bias) test_prepared = augment_bias(test_prepared);

  struct Row {
    std::string name;
    double acc;
    double seconds;
  };
  std::vector<Row> rows;
  auto time_run = [&](const std::string& name, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    const Vector w = fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back({name, accuracy_of_weights(w, test_prepared), secs});
  };

  Hyperparams h_l2 = h;
  h_l2.mu = 0.0;
  time_run("SmSVM-l2", [&] { return solve(prep.prepared, h_l2).w; });
  time_run("SmSVM-l1-l2", [&] { return solve(prep.prepared, h).w; });
  for (const auto* name : {"nesterov", "adadelta", "adam"}) {
    SgdConfig c = sgd_cfg;
    c.optimizer = parse_optimizer(name);
    c.seed = seed;
    c.validate();
    time_run(name, [&] { return sgd_train(prep.prepared, h, c); });
  }

  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-14s %8s %10s\n", "Algorithm", "Acc", "Time (s)");
  std::cout << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-14s %8.2f %10.4f\n", r.name.c_str(), 100.0 * r.acc, r.seconds);
    std::cout << buf;
  }
  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    if (!out) throw std::runtime_error("cannot write file: " + csv_out);
    out << "algorithm,accuracy,seconds\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s,%.17g,%.6f\n", r.name.c_str(), r.acc, r.seconds);
      out << buf;
    }
  }
  return exit_ok;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args) {
  CLI::App app{"SmSVM: smoothed hinge loss SVM training with an l1 active set"};
  app.require_subcommand(1);

  DataFlags data_flags;
  Hyperparams h;
  SgdConfig sgd_cfg;
  std::uint64_t seed = 1;
  bool no_bias = false;
  bool verbose = false;
  std::string solver = "smsvm";
  std::string out_path;
  std::string model_path;
  std::string optimizer_name;

  auto* train = app.add_subcommand("train", "train a model and write it as JSON");
  detail::add_data_flags(train, data_flags);
  detail::add_hyperparam_flags(train, h);
  detail::add_sgd_flags(train, sgd_cfg, optimizer_name);
  train->add_option("--solver", solver, "smsvm | nesterov | adadelta | adam")
      ->check(CLI::IsMember({"smsvm", "nesterov", "adadelta", "adam"}));
  train->add_option("--seed", seed, "random seed");
  train->add_flag("--no-bias", no_bias, "do not append a bias column");
  train->add_flag("--verbose", verbose, "per-iteration trace on stderr");
  train->add_option("-o,--output", out_path, "model output path")->required();

  auto* predict_cmd = app.add_subcommand("predict", "print a +-1 label per data row");
  predict_cmd->add_option("--model", model_path, "model JSON path")->required();
  detail::add_data_flags(predict_cmd, data_flags);

  int k = 10, l = 6, jobs = 1;
  std::string lambda_grid = "1e-4,1e-3,1e-2,1e-1,1";
  std::string mu_grid = "0,1e-4,1e-3,1e-2,1e-1";
  std::string cv_csv;
  double alpha_min_val = 1e-5;
  double alpha0_warm = 1e-2;
  bool no_stratify = false;
  auto* cv = app.add_subcommand("cv", "nested cross-validation over a (lambda, mu) grid");
  detail::add_data_flags(cv, data_flags);
  detail::add_hyperparam_flags(cv, h);
  cv->add_option("--k", k, "outer folds");
  cv->add_option("--l", l, "inner folds");
  cv->add_option("--lambda-grid", lambda_grid, "comma separated lambda values");
  cv->add_option("--mu-grid", mu_grid, "comma separated mu values");
  cv->add_option("--alpha-min-val", alpha_min_val, "alpha_min for inner validation trainings");
  cv->add_option("--alpha0-warm", alpha0_warm, "initial alpha for warm-started grid points");
  cv->add_option("--seed", seed, "random seed");
  cv->add_option("--jobs", jobs, "outer folds run on this many threads");
  cv->add_option("--csv", cv_csv, "write the per-fold report as CSV");
  cv->add_flag("--no-bias", no_bias, "do not append a bias column");
  cv->add_flag("--no-stratify", no_stratify, "plain (non-stratified) fold split");

  std::string shape;
  Index synth_m = 0, synth_n = 0;
  double synth_scale = 0;
  auto* synth = app.add_subcommand("synth", "generate a two-centroid dataset as LIBSVM text");
  synth->add_option("--shape", shape, "tall (10000 x 50) or wide (100 x 2500)");
  synth->add_option("--m", synth_m, "feature count");
  synth->add_option("--n", synth_n, "instance count (even)");
  synth->add_option("--scale", synth_scale, "centroid scale (default 5/sqrt(m))");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("-o,--output", out_path, "output path")->required();

  double test_fraction = 0.2;
  std::string bench_csv;
  auto* bench = app.add_subcommand("bench", "compare SmSVM and SGD baselines on one split");
  detail::add_data_flags(bench, data_flags);
  detail::add_hyperparam_flags(bench, h);
  detail::add_sgd_flags(bench, sgd_cfg, optimizer_name);
  bench->add_option("--seed", seed, "random seed");
  bench->add_option("--test-fraction", test_fraction, "held-out fraction");
  bench->add_option("--csv", bench_csv, "write the table as CSV");
  bench->add_flag("--no-bias", no_bias, "do not append a bias column");

  // CLI11 wants argv-style input, last argument first
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (train->parsed()) {
      return detail::cmd_train(data_flags, h, solver, sgd_cfg, seed, !no_bias, verbose, out_path);
    }
    if (predict_cmd->parsed()) {
      return detail::cmd_predict(model_path, data_flags);
    }
    if (cv->parsed()) {
      return detail::cmd_cv(data_flags, h, alpha_min_val, alpha0_warm, lambda_grid, mu_grid, k, l,
                            seed, !no_bias, no_stratify, jobs, cv_csv);
    }
    if (synth->parsed()) {
      return detail::cmd_synth(shape, synth_m, synth_n, synth_scale, seed, out_path);
    }
    if (bench->parsed()) {
      return detail::cmd_bench(data_flags, h, sgd_cfg, seed, !no_bias, test_fraction, bench_csv);
    }
  } catch (const MissingFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_missing_file;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_range;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_usage;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace smsvm::cli
