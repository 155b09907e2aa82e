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

#include "stabren/plant.hpp"

#include <cmath>
#include <vector>

namespace stabren {

namespace {

void require_finite(const Matrix& m, const char* name) {
  require(m.allFinite(), ErrorKind::kInvalidArgument,
          std::string(name) + ": non-finite entry");
}

}  // namespace

double well_posedness_norm(const Matrix& d) { return spectral_norm(d); }

void PlantLti::validate() const {
  const auto n = a_g.rows();
  require_shape(a_g, n, n, "a_g");
  require(b_g.rows() == n, ErrorKind::kDimensionMismatch, "b_g: row count");
  require(c_g.cols() == n, ErrorKind::kDimensionMismatch, "c_g: column count");
  require_finite(a_g, "a_g");
  require_finite(b_g, "b_g");
  require_finite(c_g, "c_g");
}

void PlantSector::validate() const {
  const auto n = a_g.rows();
  const auto nd = delta.size();
  require_shape(a_g, n, n, "a_g");
  require_shape(b_g1, n, nd, "b_g1");
  require(b_g2.rows() == n, ErrorKind::kDimensionMismatch, "b_g2: row count");
  require(c_g1.cols() == n, ErrorKind::kDimensionMismatch,
          "c_g1: column count");
  require_shape(c_g2, nd, n, "c_g2");
  require_shape(d_g3, nd, nd, "d_g3");
  for (const Matrix* m : {&a_g, &b_g1, &b_g2, &c_g1, &c_g2, &d_g3})
    require_finite(*m, "plant matrix");
  require(delta.sector.size() == nd, ErrorKind::kDimensionMismatch,
          "delta: sector size");
  delta.sector.validate();
  if (nd > 0 && !(d_g3.array() == 0.0).all()) {
    const PlantSector t = loop_transform_plant(*this);
    const double sigma = well_posedness_norm(t.d_g3);
    require(sigma < 1.0, ErrorKind::kInvalidArgument,
            "plant not well posed: ||D~_G3|| = " + std::to_string(sigma));
  }
}

void ImplicitNnPlant::validate() const {
  const auto n = a.rows();
  const auto nq = d3.rows();
  require_shape(a, n, n, "a");
  require_shape(b1, n, nq, "b1");
  require(b2.rows() == n, ErrorKind::kDimensionMismatch, "b2: row count");
  require(c1.cols() == n, ErrorKind::kDimensionMismatch, "c1: column count");
  require_shape(c2, nq, n, "c2");
  require_shape(d3, nq, nq, "d3");
  require(delta.size() == nq, ErrorKind::kDimensionMismatch,
          "delta: channel count");
  for (const Matrix* m : {&a, &b1, &b2, &c1, &c2, &d3})
    require_finite(*m, "nn matrix");
  const double sigma = well_posedness_norm(d3);
  require(sigma < 1.0, ErrorKind::kInvalidArgument,
          "nn plant not well posed: ||D3|| = " + std::to_string(sigma));
}

LtiStep lti_step(const PlantLti& plant, const Vector& x, const Vector& u) {
  require(x.size() == plant.n_state() && u.size() == plant.n_input(),
          ErrorKind::kDimensionMismatch, "lti_step: dimension mismatch");
  return {plant.a_g * x + plant.b_g * u, plant.c_g * x};
}

SectorStep sector_plant_step(const PlantSector& plant, const Vector& x,
                             const Vector& u, const FixedPointOptions& opts) {
  require(x.size() == plant.n_state() && u.size() == plant.n_input(),
          ErrorKind::kDimensionMismatch, "sector_plant_step: dimension mismatch");
  SectorStep out;
  const Vector b = plant.c_g2 * x;
  out.q_prime = solve_fixed_point(plant.delta, plant.d_g3, b,
                                  Vector::Zero(plant.n_delta()), opts)
                    .z;
  out.p = b + plant.d_g3 * out.q_prime;
  out.y = plant.c_g1 * x;
  out.x_next = plant.a_g * x + plant.b_g1 * out.q_prime + plant.b_g2 * u;
  return out;
}

namespace {

Matrix select_rows(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

Matrix select_cols(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

// Folds channels with alpha_i == beta_i (q'_i = alpha_i p_i) into the linear
// part of the plant.
PlantSector eliminate_linear_channels(const PlantSector& plant) {
  std::vector<Eigen::Index> lin, nl;
  for (Eigen::Index i = 0; i < plant.n_delta(); ++i) {
    (plant.delta.sector.alpha(i) == plant.delta.sector.beta(i) ? lin : nl)
        .push_back(i);
  }
  if (lin.empty()) return plant;

  const auto nl_count = static_cast<Eigen::Index>(lin.size());
  Vector s_lin(nl_count);
  for (Eigen::Index k = 0; k < nl_count; ++k)
    s_lin(k) = plant.delta.sector.alpha(lin[static_cast<std::size_t>(k)]);

  const Matrix c2_l = select_rows(plant.c_g2, lin);
  const Matrix c2_n = select_rows(plant.c_g2, nl);
  const Matrix d_ll = select_cols(select_rows(plant.d_g3, lin), lin);
  const Matrix d_ln = select_cols(select_rows(plant.d_g3, lin), nl);
  const Matrix d_nl = select_cols(select_rows(plant.d_g3, nl), lin);
  const Matrix d_nn = select_cols(select_rows(plant.d_g3, nl), nl);
  const Matrix b1_l = select_cols(plant.b_g1, lin);
  const Matrix b1_n = select_cols(plant.b_g1, nl);

  const Matrix lhs =
      Matrix::Identity(nl_count, nl_count) - s_lin.asDiagonal() * d_ll;
  Eigen::FullPivLU<Matrix> lu(lhs);
  require(lu.isInvertible(), ErrorKind::kSingular,
          "loop transform: linear channels form a singular loop");
  // q'_l = K (S_l C2_l x + S_l D_ln q'_n)
  const Matrix k_cx = lu.solve(Matrix(s_lin.asDiagonal() * c2_l));
  const Matrix k_dq = lu.solve(Matrix(s_lin.asDiagonal() * d_ln));

  PlantSector out;
  out.a_g = plant.a_g + b1_l * k_cx;
  out.b_g1 = b1_n + b1_l * k_dq;
  out.b_g2 = plant.b_g2;
  out.c_g1 = plant.c_g1;
  out.c_g2 = c2_n + d_nl * k_cx;
  out.d_g3 = d_nn + d_nl * k_dq;
  out.delta.sector.alpha.resize(static_cast<Eigen::Index>(nl.size()));
  out.delta.sector.beta.resize(static_cast<Eigen::Index>(nl.size()));
  for (std::size_t k = 0; k < nl.size(); ++k) {
    out.delta.channels.push_back(plant.delta.channels[static_cast<std::size_t>(nl[k])]);
    out.delta.sector.alpha(static_cast<Eigen::Index>(k)) = plant.delta.sector.alpha(nl[k]);
    out.delta.sector.beta(static_cast<Eigen::Index>(k)) = plant.delta.sector.beta(nl[k]);
  }
  return out;
}

}  // namespace

PlantSector loop_transform_plant(const PlantSector& plant) {
  const PlantSector base = eliminate_linear_channels(plant);
  const auto nd = base.n_delta();
  PlantSector out = base;
  out.delta = base.delta.loop_transformed();
  if (nd == 0) return out;

  const Vector s = base.delta.center();
  const Vector l = base.delta.radius();
  const Matrix lhs = Matrix::Identity(nd, nd) - s.asDiagonal() * base.d_g3;
  Eigen::FullPivLU<Matrix> lu(lhs);
  require(lu.isInvertible(), ErrorKind::kSingular,
          "loop transform: I - S D_G3 is singular");
  const Matrix m = lu.inverse();
  const Matrix msc = m * s.asDiagonal() * base.c_g2;
  const Matrix ml = m * l.asDiagonal();
  out.a_g = base.a_g + base.b_g1 * msc;
  out.b_g1 = base.b_g1 * ml;
  out.c_g2 = base.c_g2 + base.d_g3 * msc;
  out.d_g3 = base.d_g3 * ml;
  return out;
}

Vector implicit_nn_hidden(const ImplicitNnPlant& nn, const Vector& x,
                          const FixedPointOptions& opts) {
  require(x.size() == nn.n_state(), ErrorKind::kDimensionMismatch,
          "implicit_nn: state size");
  return solve_fixed_point(nn.delta, nn.d3, nn.c2 * x,
                           Vector::Zero(nn.n_hidden()), opts)
      .z;
}

Vector implicit_nn_forward(const ImplicitNnPlant& nn, const Vector& x,
                           const Vector& u, const FixedPointOptions& opts) {
  require(u.size() == nn.n_input(), ErrorKind::kDimensionMismatch,
          "implicit_nn: input size");
  const Vector q = implicit_nn_hidden(nn, x, opts);
  return nn.a * x + nn.b1 * q + nn.b2 * u;
}

PlantSector to_sector_plant(const PlantLti& plant) {
  plant.validate();
  PlantSector out;
  const auto n = plant.n_state();
  out.a_g = plant.a_g;
  out.b_g1 = Matrix::Zero(n, 0);
  out.b_g2 = plant.b_g;
  out.c_g1 = plant.c_g;
  out.c_g2 = Matrix::Zero(0, n);
  out.d_g3 = Matrix::Zero(0, 0);
  out.delta.sector = SectorSpec::uniform(0, 0.0, 0.0);
  return out;
}

PlantSector to_sector_plant(const ImplicitNnPlant& nn) {
  PlantSector out;
  out.a_g = nn.a;
  out.b_g1 = nn.b1;
  out.b_g2 = nn.b2;
  out.c_g1 = nn.c1;
  out.c_g2 = nn.c2;
  out.d_g3 = nn.d3;
  out.delta = nn.delta;
  return out;
}

PlantSector pendulum_plant(const PendulumParams& p) {
  const double gdl = p.gravity * p.dt / p.length;
  const double ml2 = p.mass * p.length * p.length;
  PlantSector out;
  out.a_g = from_rows({{1.0, p.dt}, {gdl, 1.0 - p.dt * p.friction / ml2}});
  out.b_g1 = from_rows({{0.0}, {-gdl}});
  out.b_g2 = from_rows({{0.0}, {p.dt / ml2}});
  out.c_g1 = from_rows({{1.0, 0.0}});
  out.c_g2 = from_rows({{1.0, 0.0}});
  out.d_g3 = Matrix::Zero(1, 1);
  out.delta = Nonlinearity::uniform(Activation::from_name("v_minus_sin"), 1);
  return out;
}

PlantLti pendulum_linear_part(const PendulumParams& params) {
  const PlantSector s = pendulum_plant(params);
  return {s.a_g, s.b_g2, s.c_g1};
}

}  // namespace stabren
