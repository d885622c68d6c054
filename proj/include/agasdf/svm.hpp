#pragma once

#include "agasdf/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace agasdf {

/// Per-column z-score fitted on training rows only. Constant columns map to zero.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 0 marks a constant column

  static Standardizer fit(const Eigen::MatrixXd& rows);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& row) const;
};

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b, double gamma);
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& rows, double gamma);

struct SmoResult {
  Eigen::VectorXd alpha;
  double bias = 0.0;  // decision f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  double objective = 0.0;  // 0.5 a'Qa - sum(a), Q_ij = y_i y_j K_ij
  long long iterations = 0;
  bool converged = false;
};

/// Dual C-SVM solved by SMO with second-order working-set selection. y is +/-1.
SmoResult smo_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double C, double tolerance = 1e-3,
                    long long max_iterations = -1);

double dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha);

struct BinarySvm {
  int positive_class = 0;
  int negative_class = 1;
  Eigen::MatrixXd support_vectors;  // standardized rows
  Eigen::VectorXd coefficients;     // alpha_i y_i
  double bias = 0.0;

  double decision(const Eigen::VectorXd& x, double gamma) const;
};

/// One-vs-one RBF SVM over standardized features.
struct SvmModel {
  std::vector<int> classes;
  std::vector<BinarySvm> machines;
  double C = 1.0;
  double gamma = 1.0;
  Standardizer scaler;

  int predict(const Eigen::VectorXd& raw_features) const;
  std::vector<int> predict(const Eigen::MatrixXd& raw_rows) const;
};

SvmModel svm_train(const Eigen::MatrixXd& rows, const std::vector<int>& labels, double C, double gamma,
                   std::uint64_t seed = 0);

struct SvmGrid {
  std::vector<double> C{0.1, 1.0, 10.0, 100.0};
  std::vector<double> gamma{0.001, 0.01, 0.1, 1.0};
};

struct CrossValidationResult {
  double C = 0.0;
  double gamma = 0.0;
  double accuracy = 0.0;
  Eigen::MatrixXd mean_accuracy;  // rows follow grid.C, columns grid.gamma
};

/// Fold index per sample: all samples of a group share a fold, and groups are dealt out
/// class by class so each fold sees every class.
std::vector<int> grouped_stratified_folds(const std::vector<int>& labels, const std::vector<std::string>& groups,
                                          int k, std::uint64_t seed);

/// Grid search by k-fold CV. Ties go to the smallest C, then the smallest gamma.
CrossValidationResult cross_validate(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                                     const std::vector<std::string>& groups, const SvmGrid& grid, int k,
                                     std::uint64_t seed);

struct EvaluationReport {
  std::array<std::optional<double>, kNumClasses> per_class;  // recall in percent; empty if class absent
  double average = 0.0;                                       // unweighted over present classes
  double overall = 0.0;                                       // plain accuracy in percent
};

EvaluationReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted);
EvaluationReport evaluate(const SvmModel& model, const Eigen::MatrixXd& rows, const std::vector<int>& labels);

}  // namespace agasdf
