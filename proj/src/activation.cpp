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

#include "stabren/activation.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

namespace stabren {

double Activation::value(double v) const {
  switch (kind) {
    case ActivationKind::kIdentity: return v;
    case ActivationKind::kTanh: return std::tanh(v);
    case ActivationKind::kRelu: return v > 0.0 ? v : 0.0;
    case ActivationKind::kLeakyRelu: return v > 0.0 ? v : param * v;
    case ActivationKind::kVMinusSin: return v - std::sin(v);
  }
  return v;
}

double Activation::slope(double v) const {
  switch (kind) {
    case ActivationKind::kIdentity: return 1.0;
    case ActivationKind::kTanh: {
      const double t = std::tanh(v);
      return 1.0 - t * t;
    }
    case ActivationKind::kRelu: return v > 0.0 ? 1.0 : 0.0;
    case ActivationKind::kLeakyRelu: return v > 0.0 ? 1.0 : param;
    case ActivationKind::kVMinusSin: return 1.0 - std::cos(v);
  }
  return 1.0;
}

double Activation::sector_alpha() const {
  switch (kind) {
    case ActivationKind::kIdentity: return 1.0;
    case ActivationKind::kLeakyRelu: return param;
    default: return 0.0;
  }
}

double Activation::sector_beta() const {
  return kind == ActivationKind::kVMinusSin ? 2.0 : 1.0;
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::kIdentity: return "identity";
    case ActivationKind::kTanh: return "tanh";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kLeakyRelu: {
      // Shortest representation that parses back to the same double.
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, param);
      return "leaky_relu(" + std::string(buf, r.ptr) + ")";
    }
    case ActivationKind::kVMinusSin: return "v_minus_sin";
  }
  return "unknown";
}

Activation Activation::from_name(const std::string& name) {
  if (name == "identity") return {ActivationKind::kIdentity, 0.0};
  if (name == "tanh") return {ActivationKind::kTanh, 0.0};
  if (name == "relu") return {ActivationKind::kRelu, 0.0};
  if (name == "v_minus_sin") return {ActivationKind::kVMinusSin, 0.0};
  const std::string prefix = "leaky_relu(";
  if (name.rfind(prefix, 0) == 0 && name.back() == ')') {
    const std::string arg =
        name.substr(prefix.size(), name.size() - prefix.size() - 1);
    char* end = nullptr;
    const double a = std::strtod(arg.c_str(), &end);
    if (end != arg.c_str() && *end == '\0' && a >= 0.0 && a <= 1.0)
      return {ActivationKind::kLeakyRelu, a};
  }
  throw Error(ErrorKind::kParse, "unknown activation '" + name + "'");
}

void SectorSpec::validate() const {
  require(alpha.size() == beta.size(), ErrorKind::kDimensionMismatch,
          "sector: alpha and beta sizes differ");
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    require(std::isfinite(alpha(i)) && std::isfinite(beta(i)),
            ErrorKind::kInvalidArgument, "sector: non-finite bound");
    require(alpha(i) <= beta(i), ErrorKind::kInvalidArgument,
            "sector: alpha > beta in channel " + std::to_string(i));
  }
}

SectorSpec SectorSpec::uniform(Eigen::Index n, double a, double b) {
  return {Vector::Constant(n, a), Vector::Constant(n, b)};
}

bool SectorSpec::is_unit() const {
  return (alpha.array() == -1.0).all() && (beta.array() == 1.0).all();
}

Vector Nonlinearity::apply(const Vector& v) const {
  require(v.size() == size(), ErrorKind::kDimensionMismatch,
          "nonlinearity: input size mismatch");
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = channels[i].value(v(i));
  return out;
}

Vector Nonlinearity::slope(const Vector& v) const {
  require(v.size() == size(), ErrorKind::kDimensionMismatch,
          "nonlinearity: input size mismatch");
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = channels[i].slope(v(i));
  return out;
}

Nonlinearity Nonlinearity::uniform(const Activation& act, Eigen::Index n) {
  return with_sector(
      act, SectorSpec::uniform(n, act.sector_alpha(), act.sector_beta()));
}

Nonlinearity Nonlinearity::with_sector(const Activation& act,
                                       SectorSpec sector) {
  sector.validate();
  Nonlinearity out;
  out.channels.assign(static_cast<std::size_t>(sector.size()), Channel{act});
  out.sector = std::move(sector);
  return out;
}

Nonlinearity Nonlinearity::loop_transformed() const {
  sector.validate();
  Nonlinearity out;
  out.channels = channels;
  for (Eigen::Index i = 0; i < size(); ++i) {
    const double s = 0.5 * (sector.alpha(i) + sector.beta(i));
    const double l = 0.5 * (sector.beta(i) - sector.alpha(i));
    require(l > 0.0, ErrorKind::kSingular,
            "loop transform: degenerate sector in channel " +
                std::to_string(i));
    Channel& c = out.channels[i];
    c.shift = c.shift + s * c.scale;
    c.scale = c.scale * l;
  }
  out.sector = SectorSpec::unit(size());
  return out;
}

bool Nonlinearity::homogeneous() const {
  for (const auto& c : channels) {
    if (c.act.kind != channels.front().act.kind ||
        c.act.param != channels.front().act.param)
      return false;
  }
  return true;
}

namespace {

Vector residual(const Nonlinearity& g, const Matrix& d, const Vector& b,
                const Vector& z) {
  return z - g.apply(b + d * z);
}

}  // namespace

FixedPointResult solve_fixed_point(const Nonlinearity& g, const Matrix& d,
                                   const Vector& b, const Vector& z0,
                                   const FixedPointOptions& opts) {
  const Eigen::Index n = g.size();
  require(d.rows() == n && d.cols() == n && b.size() == n && z0.size() == n,
          ErrorKind::kDimensionMismatch, "fixed point: dimension mismatch");
  FixedPointResult res;
  res.z = z0;
  if (n == 0) return res;

  const bool explicit_map = (d.array() == 0.0).all();
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vector next = g.apply(b + d * res.z);
    const double step = (next - res.z).lpNorm<Eigen::Infinity>();
    res.z = explicit_map ? next
                         : ((1.0 - opts.damping) * res.z + opts.damping * next);
    res.iterations = it + 1;
    if (explicit_map) break;
    if (step <= opts.tol) break;
  }
  res.residual = residual(g, d, b, res.z).lpNorm<Eigen::Infinity>();
  if (res.residual <= opts.tol) {
    // Optional Newton polish down to rounding level; keeps a step only when
    // it lowers the residual.
    for (int it = 0; it < opts.polish_steps && res.residual > 0.0; ++it) {
      const Vector gp = g.slope(b + d * res.z);
      const Matrix jac = Matrix::Identity(n, n) - gp.asDiagonal() * d;
      const Vector trial =
          res.z + jac.partialPivLu().solve(-residual(g, d, b, res.z));
      const double rt = residual(g, d, b, trial).lpNorm<Eigen::Infinity>();
      if (!(rt < res.residual)) break;
      res.z = trial;
      res.residual = rt;
    }
    return res;
  }

  // Newton on r(z) = z - g(b + D z); J_r = I - diag(g') D.
  res.used_newton = true;
  for (int it = 0; it < opts.newton_iterations; ++it) {
    const Vector r = residual(g, d, b, res.z);
    const double rn = r.lpNorm<Eigen::Infinity>();
    if (rn <= opts.tol) break;
    const Vector gp = g.slope(b + d * res.z);
    const Matrix jac =
        Matrix::Identity(n, n) - gp.asDiagonal() * d;
    const Vector step = jac.partialPivLu().solve(-r);
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      const Vector trial = res.z + alpha * step;
      if (residual(g, d, b, trial).lpNorm<Eigen::Infinity>() < rn) {
        res.z = trial;
        break;
      }
      alpha *= 0.5;
    }
    ++res.iterations;
  }
  res.residual = residual(g, d, b, res.z).lpNorm<Eigen::Infinity>();
  if (!(res.residual <= opts.tol)) {
    throw Error(ErrorKind::kNonConvergence,
                "fixed point: residual " + std::to_string(res.residual) +
                    " above tolerance after " +
                    std::to_string(res.iterations) + " iterations");
  }
  return res;
}

Matrix implicit_sensitivity(const Vector& slope, const Matrix& d) {
  const Eigen::Index n = slope.size();
  const Matrix m = Matrix::Identity(n, n) - slope.asDiagonal() * d;
  Eigen::FullPivLU<Matrix> lu(m);
  require(lu.isInvertible(), ErrorKind::kSingular,
          "implicit sensitivity: I - g'D is singular");
  return lu.solve(Matrix(slope.asDiagonal()));
}

}  // namespace stabren
