/*
 * Copyright 2026 The stabren Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace stabren {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Categories mirror the status codes of the C API.
enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kParse,
  kIo,
  kInfeasible,
  kSolver,
  kNonConvergence,
  kSingular,
  kEnvelopeViolation,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

inline void require_shape(const Matrix& m, Eigen::Index rows,
                          Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(name) + ": expected " + std::to_string(rows) +
                    "x" + std::to_string(cols) + ", got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Symmetric part (M + M^T) / 2.
inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// Extremal eigenvalues of the symmetric part of a square matrix.
double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);

/// True when the symmetric matrix admits a Cholesky factorization.
bool is_positive_definite(const Matrix& m);

/// Builds a matrix from nested rows, e.g. `from_rows({{1, 2}, {3, 4}})`.
Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

}  // namespace stabren
