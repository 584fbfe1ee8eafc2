#ifndef LOCPRED_SVM_HPP
#define LOCPRED_SVM_HPP

#include "locpred/common.hpp"
#include "locpred/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace locpred::svm {

struct KernelSpec {
  enum class Kind { RBF, Linear };
  Kind kind = Kind::RBF;
  double gamma = 1.0;

  static KernelSpec rbf(double gamma) { return {Kind::RBF, gamma}; }
  static KernelSpec linear() { return {Kind::Linear, 0.0}; }
  /// Throws DomainError for an RBF kernel without a finite positive gamma.
  void validate() const;

  bool operator==(const KernelSpec&) const = default;
};

/// exp(-gamma * |x - z|^2) for RBF, x . z for linear.
template <typename DerivedX, typename DerivedZ>
typename DerivedX::Scalar kernel_eval(const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedZ>& z,
                                      const KernelSpec& spec) {
  if (x.size() != z.size()) throw DomainError("kernel_eval: dimension mismatch");
  if (spec.kind == KernelSpec::Kind::Linear) return x.dot(z);
  return std::exp(-spec.gamma * (x - z).squaredNorm());
}

/// Gram matrix between the rows of `a` and the rows of `b`.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> kernel_matrix(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b,
                                                const KernelSpec& spec) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.cols()) throw DomainError("kernel_matrix: dimension mismatch");
  Matrix<Scalar> k = a * b.transpose();
  if (spec.kind == KernelSpec::Kind::Linear) return k;
  const Vector<Scalar> na = a.rowwise().squaredNorm();
  const Vector<Scalar> nb = b.rowwise().squaredNorm();
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      const Scalar d2 = std::max(Scalar(0), na[i] + nb[j] - Scalar(2) * k(i, j));
      k(i, j) = std::exp(-spec.gamma * d2);
    }
  }
  return k;
}

/// Solution of the soft-margin dual
///   max  sum(alpha) - 1/2 alpha' Q alpha,  Q_ij = y_i y_j K_ij
///   s.t. 0 <= alpha_i <= C,  y' alpha = 0
/// The decision function is f(x) = sum_i alpha_i y_i K(x_i, x) + bias.
struct DualSolution {
  VectorXd alpha;
  double bias = 0.0;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Maximal KKT violation m(alpha) - M(alpha) at exit.
  double violation = 0.0;
};

struct SolverOptions {
  double tol = 1e-3;
  /// Pair-update budget; 0 means min(10 n^2, 10^6).
  std::size_t max_iterations = 0;
};

/// SMO with maximal-violating-pair working-set selection over a precomputed
/// kernel matrix. Labels are +1 / -1.
DualSolution solve_dual(const MatrixXd& kernel, std::span<const int> y, double C,
                        const SolverOptions& options = {});

/// Dual objective sum(alpha) - 1/2 alpha' Q alpha.
double dual_objective(const MatrixXd& kernel, std::span<const int> y,
                      const VectorXd& alpha);

struct TrainOptions {
  double C = 1.0;
  KernelSpec kernel = KernelSpec::rbf(1.0);
  double tol = 1e-3;
  std::size_t max_iterations = 0;
  /// Standardize columns with training statistics before solving.
  bool standardize = true;
};

struct SvmModel {
  MatrixXd support_vectors;  // in the standardized space
  VectorXd dual_coefficients;  // alpha_i * y_i
  double bias = 0.0;
  KernelSpec kernel;
  double C = 1.0;
  Standardizer<double> scaler;
  bool converged = true;
  std::size_t iterations = 0;
  double objective = 0.0;

  Eigen::Index dimension() const { return scaler.dimension(); }
  double decision_value(const VectorXd& x) const;
  VectorXd decision_values(const MatrixXd& x) const;
  /// +1 when f(x) >= 0, else -1.
  int predict(const VectorXd& x) const { return decision_value(x) >= 0.0 ? 1 : -1; }
};

/// Trains a binary SVM. Requires both labels present and C > 0.
SvmModel train_svm(const MatrixXd& x, std::span<const int> y,
                   const TrainOptions& options);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& j);

struct GridPoint {
  double C = 1.0;
  double gamma = 1.0;
  double accuracy = 0.0;
  std::size_t folds_used = 0;
};

struct GridResult {
  double C = 1.0;
  double gamma = 1.0;
  double accuracy = 0.0;
  std::vector<GridPoint> table;
};

struct GridOptions {
  std::vector<double> C_grid{0.1, 1.0, 10.0, 100.0};
  /// Non-positive entries stand for 1 / dimension.
  std::vector<double> gamma_grid{0.0, 0.01, 0.1, 1.0};
  std::size_t folds = 5;
  std::size_t workers = 1;
  double tol = 1e-3;
  std::size_t max_iterations = 0;
};

/// Stratified k-fold grid search over (C, gamma) for an RBF SVM, maximizing
/// mean fold accuracy; ties go to the smaller C, then the smaller gamma.
/// Folds whose training split holds a single class are skipped with a
/// warning; if every fold is degenerate a DomainError is thrown.
GridResult grid_cv_svm(const MatrixXd& x, std::span<const int> y,
                       const GridOptions& options, std::uint64_t seed);

}  // namespace locpred::svm

#endif  // LOCPRED_SVM_HPP
