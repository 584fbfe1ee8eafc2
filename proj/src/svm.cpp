#include "locpred/svm.hpp"

#include "locpred/eval.hpp"
#include "locpred/json_eigen.hpp"
#include "locpred/parallel.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace locpred::svm {

void KernelSpec::validate() const {
  if (kind == Kind::RBF && !(std::isfinite(gamma) && gamma > 0.0))
    throw DomainError("RBF kernel needs a finite positive gamma");
}

double dual_objective(const MatrixXd& kernel, std::span<const int> y,
                      const VectorXd& alpha) {
  const auto n = alpha.size();
  VectorXd ya(n);
  for (Eigen::Index i = 0; i < n; ++i) ya[i] = y[i] * alpha[i];
  return alpha.sum() - 0.5 * ya.dot(kernel * ya);
}

DualSolution solve_dual(const MatrixXd& kernel, std::span<const int> y, double C,
                        const SolverOptions& options) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (kernel.rows() != n || kernel.cols() != n)
    throw DomainError("kernel matrix does not match the label count");
  if (!(C > 0.0)) throw DomainError("C must be positive");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw DomainError("labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw DomainError("training data holds a single class");

  constexpr double kTau = 1e-12;
  const std::size_t budget =
      options.max_iterations
          ? options.max_iterations
          : static_cast<std::size_t>(std::min<double>(10.0 * double(n) * double(n), 1e6));

  VectorXd alpha = VectorXd::Zero(n);
  VectorXd grad = VectorXd::Constant(n, -1.0);  // Q alpha - e
  auto q = [&](Eigen::Index a, Eigen::Index b) { return y[a] * y[b] * kernel(a, b); };
  auto in_up = [&](Eigen::Index t) {
    return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0);
  };
  auto in_low = [&](Eigen::Index t) {
    return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C);
  };

  DualSolution sol;
  std::size_t iter = 0;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    sol.violation = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
    if (i < 0 || j < 0 || gmax - gmin < options.tol) {
      sol.converged = true;
      break;
    }
    if (iter >= budget) {
      sol.converged = false;
      break;
    }
    ++iter;

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = kernel(i, i) + kernel(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  sol.alpha = std::move(alpha);
  sol.bias = -rho;
  sol.iterations = iter;
  sol.objective = 0.5 * (sol.alpha.sum() - sol.alpha.dot(grad));
  return sol;
}

double SvmModel::decision_value(const VectorXd& x) const {
  if (x.size() != dimension()) throw DomainError("feature dimension differs from the model");
  const VectorXd z = scaler.apply_row(x.transpose());
  double f = bias;
  for (Eigen::Index s = 0; s < support_vectors.rows(); ++s)
    f += dual_coefficients[s] * kernel_eval(support_vectors.row(s).transpose(), z, kernel);
  return f;
}

VectorXd SvmModel::decision_values(const MatrixXd& x) const {
  if (x.cols() != dimension()) throw DomainError("feature dimension differs from the model");
  if (support_vectors.rows() == 0) return VectorXd::Constant(x.rows(), bias);
  const MatrixXd z = scaler.apply(x);
  return (kernel_matrix(z, support_vectors, kernel) * dual_coefficients).array() + bias;
}

SvmModel train_svm(const MatrixXd& x, std::span<const int> y,
                   const TrainOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw DomainError("feature rows and labels differ in length");
  options.kernel.validate();
  SvmModel model;
  model.kernel = options.kernel;
  model.C = options.C;
  model.scaler = options.standardize ? Standardizer<double>::fit(x)
                                     : Standardizer<double>::identity(x.cols());
  const MatrixXd z = model.scaler.apply(x);
  const MatrixXd k = kernel_matrix(z, z, options.kernel);
  const DualSolution sol =
      solve_dual(k, y, options.C, {options.tol, options.max_iterations});

  IndexList sv;
  for (Eigen::Index i = 0; i < sol.alpha.size(); ++i)
    if (sol.alpha[i] > 0.0) sv.push_back(static_cast<std::size_t>(i));
  model.support_vectors = take_rows(z, sv);
  model.dual_coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s)
    model.dual_coefficients[static_cast<Eigen::Index>(s)] =
        sol.alpha[static_cast<Eigen::Index>(sv[s])] * y[sv[s]];
  model.bias = sol.bias;
  model.converged = sol.converged;
  model.iterations = sol.iterations;
  model.objective = sol.objective;
  if (!sol.converged) {
    log_warning("SMO stopped at the iteration budget (" +
                std::to_string(sol.iterations) + " updates) before convergence");
  }
  return model;
}

nlohmann::json to_json(const SvmModel& m) {
  return {{"kernel", m.kernel.kind == KernelSpec::Kind::RBF ? "rbf" : "linear"},
          {"gamma", m.kernel.gamma},
          {"C", m.C},
          {"bias", m.bias},
          {"converged", m.converged},
          {"iterations", m.iterations},
          {"objective", m.objective},
          {"scaler_mean", to_std(m.scaler.mean)},
          {"scaler_scale", to_std(m.scaler.scale)},
          {"dual_coefficients", to_std(m.dual_coefficients)},
          {"support_vectors", matrix_json(m.support_vectors)}};
}

SvmModel svm_from_json(const nlohmann::json& j) {
  SvmModel m;
  const auto kind = j.at("kernel").get<std::string>();
  if (kind == "rbf") m.kernel = KernelSpec::rbf(j.at("gamma").get<double>());
  else if (kind == "linear") m.kernel = KernelSpec::linear();
  else throw ParseError("unknown kernel '" + kind + "'");
  m.C = j.at("C").get<double>();
  m.bias = j.at("bias").get<double>();
  m.converged = j.at("converged").get<bool>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.objective = j.at("objective").get<double>();
  m.scaler.mean = from_std(j.at("scaler_mean").get<std::vector<double>>());
  m.scaler.scale = from_std(j.at("scaler_scale").get<std::vector<double>>());
  m.dual_coefficients = from_std(j.at("dual_coefficients").get<std::vector<double>>());
  m.support_vectors = matrix_from_json(j.at("support_vectors"), m.scaler.dimension());
  if (m.support_vectors.rows() != m.dual_coefficients.size())
    throw ParseError("support vector count mismatch");
  return m;
}

GridResult grid_cv_svm(const MatrixXd& x, std::span<const int> y,
                       const GridOptions& options, std::uint64_t seed) {
  if (options.folds < 2) throw DomainError("grid search needs at least 2 folds");
  if (options.C_grid.empty() || options.gamma_grid.empty())
    throw DomainError("grid search needs non-empty grids");
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n) throw DomainError("feature rows and labels differ in length");

  std::vector<double> gammas;
  for (double g : options.gamma_grid)
    gammas.push_back(g > 0.0 ? g : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols())));
  std::vector<double> cs = options.C_grid;

  const auto plan = eval::kfold_split(n, options.folds, seed,
                                      std::vector<int>(y.begin(), y.end()));
  const std::size_t folds = options.folds;
  std::vector<char> degenerate(folds, 0);
  std::vector<IndexList> train(folds), test(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    train[f] = plan.train_indices(f);
    test[f] = plan.test_indices(f);
    bool pos = false, neg = false;
    for (auto i : train[f]) (y[i] > 0 ? pos : neg) = true;
    if (!pos || !neg || test[f].empty()) {
      degenerate[f] = 1;
      log_warning("grid search: fold " + std::to_string(f) +
                  " has a single-class training split and is skipped");
    }
  }
  if (std::all_of(degenerate.begin(), degenerate.end(), [](char d) { return d; }))
    throw DomainError("grid search: every fold is degenerate");

  // correct[g][f][c] = number of correctly classified test samples.
  std::vector<std::vector<std::vector<double>>> acc(
      gammas.size(), std::vector<std::vector<double>>(folds, std::vector<double>(cs.size(), 0.0)));
  parallel_for(gammas.size() * folds, options.workers, [&](std::size_t task) {
    const std::size_t g = task / folds, f = task % folds;
    if (degenerate[f]) return;
    const MatrixXd xtr = take_rows(x, train[f]);
    const MatrixXd xte = take_rows(x, test[f]);
    std::vector<int> ytr, yte;
    for (auto i : train[f]) ytr.push_back(y[i]);
    for (auto i : test[f]) yte.push_back(y[i]);
    const auto scaler = Standardizer<double>::fit(xtr);
    const MatrixXd ztr = scaler.apply(xtr);
    const MatrixXd zte = scaler.apply(xte);
    const KernelSpec spec = KernelSpec::rbf(gammas[g]);
    const MatrixXd ktr = kernel_matrix(ztr, ztr, spec);
    const MatrixXd kte = kernel_matrix(zte, ztr, spec);
    for (std::size_t c = 0; c < cs.size(); ++c) {
      const auto sol = solve_dual(ktr, ytr, cs[c], {options.tol, options.max_iterations});
      VectorXd ya(sol.alpha.size());
      for (Eigen::Index t = 0; t < ya.size(); ++t) ya[t] = sol.alpha[t] * ytr[t];
      const VectorXd f_te = (kte * ya).array() + sol.bias;
      std::size_t ok = 0;
      for (Eigen::Index t = 0; t < f_te.size(); ++t)
        ok += (f_te[t] >= 0.0 ? 1 : -1) == yte[t];
      acc[g][f][c] = static_cast<double>(ok) / static_cast<double>(yte.size());
    }
  });

  GridResult result;
  result.accuracy = -1.0;
  std::size_t used = 0;
  for (char d : degenerate) used += !d;
  // Candidates in (C ascending, gamma ascending) order so the first maximum
  // wins ties.
  std::vector<std::size_t> c_order(cs.size()), g_order(gammas.size());
  std::iota(c_order.begin(), c_order.end(), 0);
  std::iota(g_order.begin(), g_order.end(), 0);
  std::stable_sort(c_order.begin(), c_order.end(), [&](auto a, auto b) { return cs[a] < cs[b]; });
  std::stable_sort(g_order.begin(), g_order.end(),
                   [&](auto a, auto b) { return gammas[a] < gammas[b]; });
  for (auto c : c_order) {
    for (auto g : g_order) {
      double sum = 0.0;
      for (std::size_t f = 0; f < folds; ++f)
        if (!degenerate[f]) sum += acc[g][f][c];
      GridPoint p{cs[c], gammas[g], sum / static_cast<double>(used), used};
      result.table.push_back(p);
      if (p.accuracy > result.accuracy) {
        result.accuracy = p.accuracy;
        result.C = p.C;
        result.gamma = p.gamma;
      }
    }
  }
  return result;
}

}  // namespace locpred::svm
