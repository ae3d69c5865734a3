#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordstat/array_spec.hpp"

namespace ordstat {

struct CovarianceFile {
  Eigen::MatrixXd matrix;
  std::optional<int> d;
  std::optional<int> n;
};

namespace detail {

inline Eigen::MatrixXd matrix_from_rows(const std::vector<std::vector<double>>& rows,
                                        const std::string& origin) {
  if (rows.empty())
    throw std::invalid_argument(origin + ": empty matrix");
  const std::size_t cols = rows.front().size();
  for (const auto& row : rows)
    if (row.size() != cols)
      throw std::invalid_argument(origin + ": ragged rows");
  Eigen::MatrixXd m(static_cast<long>(rows.size()), static_cast<long>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
  return m;
}

}  // namespace detail

// JSON covariance: either a bare nested array [[...], ...] or an object
// { "d": ..., "n": ..., "cov": [[...], ...] }.
inline CovarianceFile load_cov_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open covariance file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": malformed JSON (" + e.what() + ")");
  }
  CovarianceFile out;
  const nlohmann::json* cov = &j;
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "d" && key != "n" && key != "cov")
        throw std::invalid_argument(path + ": unknown key \"" + key + "\"");
    }
    if (!j.contains("cov"))
      throw std::invalid_argument(path + ": missing \"cov\"");
    if (j.contains("d")) out.d = j.at("d").get<int>();
    if (j.contains("n")) out.n = j.at("n").get<int>();
    cov = &j.at("cov");
  }
  if (!cov->is_array())
    throw std::invalid_argument(path + ": covariance must be a nested array");
  std::vector<std::vector<double>> rows;
  for (const auto& row : *cov) {
    if (!row.is_array())
      throw std::invalid_argument(path + ": covariance must be a nested array");
    rows.emplace_back();
    for (const auto& v : row) rows.back().push_back(v.get<double>());
  }
  out.matrix = detail::matrix_from_rows(rows, path);
  return out;
}

// CSV covariance: dn rows by dn columns, optional header line.
inline CovarianceFile load_cov_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open covariance file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;  // header line
        continue;
      }
      throw std::invalid_argument(path + ": non-numeric cell in row " +
                                  std::to_string(rows.size() + 1));
    }
    first = false;
    rows.push_back(std::move(row));
  }
  CovarianceFile out;
  out.matrix = detail::matrix_from_rows(rows, path);
  return out;
}

// Dispatch on content: JSON if the first non-space character opens an object
// or array, CSV otherwise. Shape comes from the file when present, else from
// the caller; everything routes through validation.
inline GaussianArraySpec load_spec(const std::string& path,
                                   std::optional<int> d_hint,
                                   std::optional<int> n_hint) {
  std::ifstream probe(path);
  if (!probe) throw std::invalid_argument("cannot open covariance file: " + path);
  char first = 0;
  probe >> std::ws;
  probe.get(first);
  CovarianceFile file =
      (first == '{' || first == '[') ? load_cov_json(path) : load_cov_csv(path);
  const int dim = static_cast<int>(file.matrix.rows());
  int d = file.d.value_or(d_hint.value_or(0));
  int n = file.n.value_or(n_hint.value_or(0));
  if (d <= 0 && n > 0 && dim % n == 0) d = dim / n;
  if (n <= 0 && d > 0 && dim % d == 0) n = dim / d;
  if (d <= 0 || n <= 0)
    throw std::invalid_argument(path +
                                ": array shape (d, n) not determined; pass it "
                                "explicitly or embed it in the file");
  return GaussianArraySpec::validated(d, n, std::move(file.matrix));
}

}  // namespace ordstat
