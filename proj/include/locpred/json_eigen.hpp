#ifndef LOCPRED_JSON_EIGEN_HPP
#define LOCPRED_JSON_EIGEN_HPP

#include "locpred/common.hpp"

#include <json.hpp>

#include <vector>

namespace locpred {

inline std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline VectorXd vector_from_json(const nlohmann::json& j) {
  return from_std(j.get<std::vector<double>>());
}

/// Row-major array of arrays.
inline nlohmann::json matrix_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

/// Inverse of matrix_json; every row must hold `cols` values.
inline MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
  MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ParseError("matrix row width mismatch");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace locpred

#endif  // LOCPRED_JSON_EIGEN_HPP
