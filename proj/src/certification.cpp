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

#include "stabren/certification.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace stabren {

namespace {

// Assembles a symmetric matrix from lower-triangular blocks; `blocks[i][j]`
// for j <= i, empty matrices denote zeros.
Matrix assemble_sym(const std::vector<Eigen::Index>& sizes,
                    const std::vector<std::vector<Matrix>>& blocks) {
  Eigen::Index total = 0;
  std::vector<Eigen::Index> off;
  for (auto s : sizes) {
    off.push_back(total);
    total += s;
  }
  Matrix out = Matrix::Zero(total, total);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const Matrix& b = blocks[i][j];
      if (b.size() == 0) continue;
      require_shape(b, sizes[i], sizes[j], "lmi block");
      out.block(off[i], off[j], sizes[i], sizes[j]) = b;
      if (i != j) out.block(off[j], off[i], sizes[j], sizes[i]) = b.transpose();
    }
  }
  return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Matrix block2(const Matrix& a, const Matrix& b, const Matrix& c,
              const Matrix& d) {
  return vstack(hstack(a, b), hstack(c, d));
}

Matrix blkdiag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

Matrix inverse_checked(const Matrix& m, const char* what) {
  Eigen::FullPivLU<Matrix> lu(m);
  require(lu.isInvertible(), ErrorKind::kSingular,
          std::string(what) + " is singular");
  return lu.inverse();
}

}  // namespace

Vector ClosedLoop::step(const Vector& zeta, const FixedPointOptions& opts) const {
  const Vector b = c_cal * zeta;
  const Vector t =
      solve_fixed_point(psi, d_cal, b, Vector::Zero(n_nl()), opts).z;
  return a_cal * zeta + b_cal * t;
}

ClosedLoop assemble_closed_loop(const PlantSector& plant,
                                const TransformedRenParams& tt) {
  const PlantSector g = loop_transform_plant(plant);
  tt.validate_shapes();
  require(tt.n_u() == g.n_input() && tt.n_y() == g.n_output(),
          ErrorKind::kDimensionMismatch,
          "closed loop: controller and plant I/O sizes differ");
  ClosedLoop cl;
  cl.n_g = g.n_state();
  cl.n_xi = tt.n_xi();
  cl.n_delta = g.n_delta();
  cl.n_phi = tt.n_phi();
  const auto nd = cl.n_delta, nx = cl.n_xi;

  cl.a_cal = block2(g.a_g + g.b_g2 * tt.d_k2 * g.c_g1, g.b_g2 * tt.c_k1,
                    tt.b_k2 * g.c_g1, tt.a_k);
  cl.b_cal = block2(g.b_g1, g.b_g2 * tt.d_k1, Matrix::Zero(nx, nd), tt.b_k1);
  cl.c_cal = block2(g.c_g2, Matrix::Zero(nd, nx), tt.d_k4 * g.c_g1, tt.c_k2);
  cl.d_cal = blkdiag(g.d_g3, tt.d_k3);
  cl.psi.channels = g.delta.channels;
  cl.psi.channels.insert(cl.psi.channels.end(), tt.phi_tilde.channels.begin(),
                         tt.phi_tilde.channels.end());
  cl.psi.sector = SectorSpec::unit(cl.n_nl());
  return cl;
}

Matrix qc_matrix(const SectorSpec& sector, const Vector& lambda) {
  sector.validate();
  require(lambda.size() == sector.size(), ErrorKind::kDimensionMismatch,
          "qc_matrix: lambda size");
  require((lambda.array() >= 0.0).all(), ErrorKind::kInvalidArgument,
          "qc_matrix: lambda must be nonnegative");
  const Vector ab = sector.alpha.cwiseProduct(sector.beta);
  const Vector sum = sector.alpha + sector.beta;
  const Matrix tl = (-2.0 * ab.cwiseProduct(lambda)).asDiagonal();
  const Matrix off = sum.cwiseProduct(lambda).asDiagonal();
  const Matrix br = (-2.0 * lambda).asDiagonal();
  return block2(tl, off, off, br);
}

Matrix lyapunov_lmi_matrix(const ClosedLoop& cl, const Matrix& p,
                           const Vector& lambda, double rho) {
  require_shape(p, cl.n_state(), cl.n_state(), "P");
  require(lambda.size() == cl.n_nl(), ErrorKind::kDimensionMismatch,
          "lambda size");
  const Matrix& a = cl.a_cal;
  const Matrix& b = cl.b_cal;
  const Matrix lam = lambda.asDiagonal();
  Matrix out(cl.n_state() + cl.n_nl(), cl.n_state() + cl.n_nl());
  const Matrix pa = p * a, pb = p * b;
  out << a.transpose() * pa - rho * rho * p, a.transpose() * pb,
      b.transpose() * pa, b.transpose() * pb;
  Matrix outer(cl.n_nl() + cl.n_nl(), cl.n_state() + cl.n_nl());
  outer << cl.c_cal, cl.d_cal, Matrix::Zero(cl.n_nl(), cl.n_state()),
      Matrix::Identity(cl.n_nl(), cl.n_nl());
  const Matrix mid = blkdiag(lam, -lam);
  out += outer.transpose() * mid * outer;
  return sym(out);
}

double check_lyapunov_lmi(const ClosedLoop& cl, const Matrix& p,
                          const Vector& lambda, double rho) {
  return max_eigenvalue(lyapunov_lmi_matrix(cl, p, lambda, rho));
}

Matrix schur_lyapunov_matrix(const ClosedLoop& cl, const Matrix& p,
                             const Vector& lambda, double rho) {
  const auto ns = cl.n_state(), nn = cl.n_nl();
  return assemble_sym(
      {ns, nn, ns, nn},
      {{rho * rho * p},
       {Matrix(), Matrix(lambda.asDiagonal())},
       {cl.a_cal, cl.b_cal, inverse_checked(p, "P")},
       {cl.c_cal, cl.d_cal, Matrix(),
        Matrix(lambda.cwiseInverse().asDiagonal())}});
}

// ---------------------------------------------------------------------------
// Convex parameterization

Eigen::Index ConvexLayout::size() const {
  const auto n = n_g, nx = n_xi();
  return n * (n + 1) + (nx + n_u) * (nx + n_y) + n_phi + n_u * n_phi +
         nx * n_phi + n_phi * n + n_phi * n_phi + n_phi * n_y;
}

ConvexParams ConvexLayout::zeros() const {
  ConvexParams p;
  p.x_mat = Matrix::Zero(n_g, n_g);
  p.y_mat = Matrix::Zero(n_g, n_g);
  p.n_mat = Matrix::Zero(n_xi() + n_u, n_xi() + n_y);
  p.lambda_phi = Vector::Zero(n_phi);
  p.d_k1_tilde = Matrix::Zero(n_u, n_phi);
  p.n_hat_12 = Matrix::Zero(n_xi(), n_phi);
  p.n_hat_21 = Matrix::Zero(n_phi, n_g);
  p.d_hat_k3 = Matrix::Zero(n_phi, n_phi);
  p.d_hat_k4 = Matrix::Zero(n_phi, n_y);
  return p;
}

void ConvexLayout::check(const ConvexParams& p) const {
  const ConvexParams z = zeros();
  require_shape(p.x_mat, n_g, n_g, "X");
  require_shape(p.y_mat, n_g, n_g, "Y");
  require_shape(p.n_mat, z.n_mat.rows(), z.n_mat.cols(), "N");
  require(p.lambda_phi.size() == n_phi, ErrorKind::kDimensionMismatch,
          "lambda_phi size");
  require_shape(p.d_k1_tilde, n_u, n_phi, "D~_K1");
  require_shape(p.n_hat_12, n_xi(), n_phi, "N^_12");
  require_shape(p.n_hat_21, n_phi, n_g, "N^_21");
  require_shape(p.d_hat_k3, n_phi, n_phi, "D^_K3");
  require_shape(p.d_hat_k4, n_phi, n_y, "D^_K4");
}

namespace {

template <typename F>
void visit_layout(const ConvexLayout& l, F&& f) {
  // f(kind, block index, rows, cols); kind 0 = symmetric, 1 = full, 2 = diag
  f(0, 0, l.n_g, l.n_g);
  f(0, 1, l.n_g, l.n_g);
  f(1, 2, l.n_xi() + l.n_u, l.n_xi() + l.n_y);
  f(2, 3, l.n_phi, l.n_phi);
  f(1, 4, l.n_u, l.n_phi);
  f(1, 5, l.n_xi(), l.n_phi);
  f(1, 6, l.n_phi, l.n_g);
  f(1, 7, l.n_phi, l.n_phi);
  f(1, 8, l.n_phi, l.n_y);
}

Matrix* block_ptr(ConvexParams& p, int idx) {
  switch (idx) {
    case 0: return &p.x_mat;
    case 1: return &p.y_mat;
    case 2: return &p.n_mat;
    case 4: return &p.d_k1_tilde;
    case 5: return &p.n_hat_12;
    case 6: return &p.n_hat_21;
    case 7: return &p.d_hat_k3;
    case 8: return &p.d_hat_k4;
    default: return nullptr;
  }
}

}  // namespace

Vector ConvexLayout::pack(const ConvexParams& p) const {
  check(p);
  Vector out(size());
  Eigen::Index k = 0;
  ConvexParams& q = const_cast<ConvexParams&>(p);
  visit_layout(*this, [&](int kind, int idx, Eigen::Index r, Eigen::Index c) {
    if (kind == 2) {
      for (Eigen::Index i = 0; i < r; ++i) out(k++) = p.lambda_phi(i);
      return;
    }
    const Matrix& m = *block_ptr(q, idx);
    if (kind == 0) {
      for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i <= j; ++i)
          out(k++) = i == j ? m(i, j) : 0.5 * (m(i, j) + m(j, i));
    } else {
      for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) out(k++) = m(i, j);
    }
  });
  return out;
}

ConvexParams ConvexLayout::unpack(const Vector& v) const {
  require(v.size() == size(), ErrorKind::kDimensionMismatch,
          "convex params: packed size");
  ConvexParams p = zeros();
  Eigen::Index k = 0;
  visit_layout(*this, [&](int kind, int idx, Eigen::Index r, Eigen::Index c) {
    if (kind == 2) {
      for (Eigen::Index i = 0; i < r; ++i) p.lambda_phi(i) = v(k++);
      return;
    }
    Matrix& m = *block_ptr(p, idx);
    if (kind == 0) {
      for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) {
          m(i, j) = v(k);
          m(j, i) = v(k);
          ++k;
        }
    } else {
      for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = v(k++);
    }
  });
  return p;
}

Vector ConvexLayout::frobenius_weights() const {
  Vector w(size());
  Eigen::Index k = 0;
  visit_layout(*this, [&](int kind, int, Eigen::Index r, Eigen::Index c) {
    if (kind == 0) {
      for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i <= j; ++i) w(k++) = i == j ? 1.0 : 2.0;
    } else if (kind == 2) {
      for (Eigen::Index i = 0; i < r; ++i) w(k++) = 1.0;
    } else {
      for (Eigen::Index i = 0; i < r * c; ++i) w(k++) = 1.0;
    }
  });
  return w;
}

ConvexLayout ConvexLayout::for_plant(const PlantSector& plant,
                                     Eigen::Index n_phi) {
  return {plant.n_state(), plant.n_input(), plant.n_output(), n_phi};
}

double convex_distance(const ConvexParams& a, const ConvexParams& b) {
  double s = (a.x_mat - b.x_mat).squaredNorm() +
             (a.y_mat - b.y_mat).squaredNorm() +
             (a.n_mat - b.n_mat).squaredNorm() +
             (a.lambda_phi - b.lambda_phi).squaredNorm() +
             (a.d_k1_tilde - b.d_k1_tilde).squaredNorm() +
             (a.n_hat_12 - b.n_hat_12).squaredNorm() +
             (a.n_hat_21 - b.n_hat_21).squaredNorm() +
             (a.d_hat_k3 - b.d_hat_k3).squaredNorm() +
             (a.d_hat_k4 - b.d_hat_k4).squaredNorm();
  return std::sqrt(s);
}

ConvexParams convex_combination(const ConvexParams& a, const ConvexParams& b,
                                double wa) {
  const double wb = 1.0 - wa;
  ConvexParams p;
  p.x_mat = wa * a.x_mat + wb * b.x_mat;
  p.y_mat = wa * a.y_mat + wb * b.y_mat;
  p.n_mat = wa * a.n_mat + wb * b.n_mat;
  p.lambda_phi = wa * a.lambda_phi + wb * b.lambda_phi;
  p.d_k1_tilde = wa * a.d_k1_tilde + wb * b.d_k1_tilde;
  p.n_hat_12 = wa * a.n_hat_12 + wb * b.n_hat_12;
  p.n_hat_21 = wa * a.n_hat_21 + wb * b.n_hat_21;
  p.d_hat_k3 = wa * a.d_hat_k3 + wb * b.d_hat_k3;
  p.d_hat_k4 = wa * a.d_hat_k4 + wb * b.d_hat_k4;
  return p;
}

namespace {

Matrix build_lmi_transformed(const ConvexParams& th, const PlantSector& g,
                             double rho, const Vector& lambda_delta) {
  const auto n = g.n_state(), nu = g.n_input(), ny = g.n_output();
  const auto nd = g.n_delta(), np = th.lambda_phi.size();
  const ConvexLayout layout{n, nu, ny, np};
  layout.check(th);
  require(lambda_delta.size() == nd, ErrorKind::kDimensionMismatch,
          "build_lmi: lambda_delta size must equal the plant's nonlinear "
          "channel count");

  const Matrix& x = th.x_mat;
  const Matrix& y = th.y_mat;
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix n11 = th.n_mat.topLeftCorner(n, n);
  const Matrix n12 = th.n_mat.topRightCorner(n, ny);
  const Matrix n21 = th.n_mat.bottomLeftCorner(nu, n);
  const Matrix n22 = th.n_mat.bottomRightCorner(nu, ny);
  const Matrix lam_d = lambda_delta.asDiagonal();
  const Matrix lam = Vector(concat(lambda_delta, th.lambda_phi)).asDiagonal();

  const Matrix yp_y = block2(y, eye, eye, x);
  const Matrix b31 = block2(g.a_g * y + g.b_g2 * n21,
                            g.a_g + g.b_g2 * n22 * g.c_g1, n11,
                            x * g.a_g + n12 * g.c_g1);
  const Matrix b32 = block2(g.b_g1, g.b_g2 * th.d_k1_tilde, x * g.b_g1,
                            th.n_hat_12);
  const Matrix b41 = block2(lam_d * g.c_g2 * y, lam_d * g.c_g2, th.n_hat_21,
                            th.d_hat_k4 * g.c_g1);
  const Matrix b42 = blkdiag(lam_d * g.d_g3, th.d_hat_k3);
  const auto nz = 2 * n, nt = nd + np;
  return assemble_sym({nz, nt, nz, nt}, {{rho * rho * yp_y},
                                         {Matrix(), lam},
                                         {b31, b32, yp_y},
                                         {b41, b42, Matrix(), lam}});
}

}  // namespace

Matrix build_lmi(const ConvexParams& th, const PlantSector& plant, double rho,
                 const Vector& lambda_delta) {
  require(rho >= 0.0 && rho < 1.0, ErrorKind::kInvalidArgument,
          "build_lmi: rho must lie in [0, 1)");
  return build_lmi_transformed(th, loop_transform_plant(plant), rho,
                               lambda_delta);
}

sdp::AffineSymMatrix lmi_affine_in_theta(const PlantSector& plant,
                                         Eigen::Index n_phi, double rho,
                                         const Vector& lambda_delta) {
  const PlantSector g = loop_transform_plant(plant);
  const ConvexLayout layout = ConvexLayout::for_plant(g, n_phi);
  return sdp::AffineSymMatrix::from_function(
      static_cast<int>(layout.size()), [&](const Vector& v) {
        return build_lmi_transformed(layout.unpack(v), g, rho, lambda_delta);
      });
}

sdp::AffineSymMatrix lmi_affine_in_lambda_delta(const ConvexParams& th,
                                                const PlantSector& plant,
                                                double rho) {
  const PlantSector g = loop_transform_plant(plant);
  return sdp::AffineSymMatrix::from_function(
      static_cast<int>(g.n_delta()), [&](const Vector& ld) {
        return build_lmi_transformed(th, g, rho, ld);
      });
}

ConvexParams convexify(const TransformedRenParams& tt, const PlantSector& plant,
                       const Matrix& p, const Vector& lambda_phi) {
  const PlantSector g = loop_transform_plant(plant);
  const auto n = g.n_state(), nu = g.n_input(), ny = g.n_output();
  require(tt.n_xi() == n, ErrorKind::kInvalidArgument,
          "convexify: controller state size must equal plant state size");
  require_shape(p, 2 * n, 2 * n, "P");
  const Matrix pinv = inverse_checked(p, "P");
  const Matrix x = p.topLeftCorner(n, n);
  const Matrix u = p.topRightCorner(n, n);
  const Matrix y = pinv.topLeftCorner(n, n);
  const Matrix v = pinv.topRightCorner(n, n);
  const Matrix lam = lambda_phi.asDiagonal();

  ConvexParams out;
  out.x_mat = x;
  out.y_mat = y;
  const Matrix left = block2(u, x * g.b_g2, Matrix::Zero(nu, n),
                             Matrix::Identity(nu, nu));
  const Matrix right = block2(v.transpose(), Matrix::Zero(n, ny), g.c_g1 * y,
                              Matrix::Identity(ny, ny));
  const Matrix ctrl = block2(tt.a_k, tt.b_k2, tt.c_k1, tt.d_k2);
  Matrix base = Matrix::Zero(n + nu, n + ny);
  base.topLeftCorner(n, n) = x * g.a_g * y;
  out.n_mat = base + left * ctrl * right;
  out.lambda_phi = lambda_phi;
  out.d_k1_tilde = tt.d_k1;
  out.n_hat_12 = x * g.b_g2 * tt.d_k1 + u * tt.b_k1;
  out.d_hat_k4 = lam * tt.d_k4;
  out.d_hat_k3 = lam * tt.d_k3;
  out.n_hat_21 = out.d_hat_k4 * g.c_g1 * y + lam * tt.c_k2 * v.transpose();
  return out;
}

Vector StabilityCertificate::lambda() const {
  return concat(lambda_delta, lambda_phi);
}

double StabilityCertificate::condition_number() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(p_mat), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev(ev.size() - 1) / ev(0);
}

ControllerRecovery recover_controller(const ConvexParams& th,
                                      const PlantSector& plant,
                                      const Nonlinearity& phi,
                                      const RecoveryOptions& opts) {
  const PlantSector g = loop_transform_plant(plant);
  const auto n = g.n_state(), nu = g.n_input(), ny = g.n_output();
  const auto np = th.lambda_phi.size();
  ConvexLayout{n, nu, ny, np}.check(th);
  require(phi.size() == np, ErrorKind::kDimensionMismatch,
          "recover_controller: activation count");
  require((th.lambda_phi.array() > 0.0).all(), ErrorKind::kInfeasible,
          "recover_controller: Lambda_phi must be positive");

  const Matrix& x = th.x_mat;
  const Matrix& y = th.y_mat;
  ControllerRecovery rec;
  Matrix u = x;
  Matrix v = inverse_checked(x, "X") - y;
  if (!opts.force_u_equals_x) {
    Eigen::JacobiSVD<Matrix> vsvd(v);
    const double vmin = vsvd.singularValues()(n - 1);
    if (!(vmin > 0.0) || 1.0 / vmin > opts.singular_v_threshold) {
      Eigen::JacobiSVD<Matrix> svd(Matrix::Identity(n, n) - x * y,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Vector root = svd.singularValues().cwiseSqrt();
      u = svd.matrixU() * root.asDiagonal();
      v = svd.matrixV() * root.asDiagonal();
      rec.used_svd = true;
    }
  }

  const Vector lam_inv = th.lambda_phi.cwiseInverse();
  const Matrix left = block2(u, x * g.b_g2, Matrix::Zero(nu, n),
                             Matrix::Identity(nu, nu));
  const Matrix right = block2(v.transpose(), Matrix::Zero(n, ny), g.c_g1 * y,
                              Matrix::Identity(ny, ny));
  Matrix mid = th.n_mat;
  mid.topLeftCorner(n, n) -= x * g.a_g * y;
  const Matrix ctrl = inverse_checked(left, "[[U, X B], [0, I]]") * mid *
                      inverse_checked(right, "[[V', 0], [C Y, I]]");

  RenMatrices m;
  m.a_k = ctrl.topLeftCorner(n, n);
  m.b_k2 = ctrl.topRightCorner(n, ny);
  m.c_k1 = ctrl.bottomLeftCorner(nu, n);
  m.d_k2 = ctrl.bottomRightCorner(nu, ny);
  m.d_k1 = th.d_k1_tilde;
  m.b_k1 = inverse_checked(u, "U") * (th.n_hat_12 - x * g.b_g2 * th.d_k1_tilde);
  m.c_k2 = lam_inv.asDiagonal() * (th.n_hat_21 - th.d_hat_k4 * g.c_g1 * y) *
           inverse_checked(v.transpose(), "V'");
  m.d_k3 = lam_inv.asDiagonal() * th.d_hat_k3;
  m.d_k4 = lam_inv.asDiagonal() * th.d_hat_k4;
  rec.theta_tilde = TransformedRenParams::from_matrices(std::move(m), phi);
  rec.u_mat = std::move(u);
  rec.v_mat = std::move(v);
  return rec;
}

RenMatrices recovery_differential(const ConvexParams& th,
                                  const PlantSector& plant,
                                  const TransformedRenParams& tt,
                                  const ConvexParams& dth) {
  const PlantSector g = loop_transform_plant(plant);
  const auto n = g.n_state(), nu = g.n_input(), ny = g.n_output();
  const Matrix& x = th.x_mat;
  const Matrix& y = th.y_mat;
  const Matrix xinv = inverse_checked(x, "X");
  const Matrix v = xinv - y;
  const Matrix& dx = dth.x_mat;
  const Matrix& dy = dth.y_mat;
  const Matrix dv = -xinv * dx * xinv - dy;

  const Matrix left = block2(x, x * g.b_g2, Matrix::Zero(nu, n),
                             Matrix::Identity(nu, nu));
  const Matrix right = block2(v.transpose(), Matrix::Zero(n, ny), g.c_g1 * y,
                              Matrix::Identity(ny, ny));
  const Matrix dleft = block2(dx, dx * g.b_g2, Matrix::Zero(nu, n),
                              Matrix::Zero(nu, nu));
  const Matrix dright = block2(dv.transpose(), Matrix::Zero(n, ny),
                               g.c_g1 * dy, Matrix::Zero(ny, ny));
  const Matrix ctrl = block2(tt.a_k, tt.b_k2, tt.c_k1, tt.d_k2);
  Matrix dmid = dth.n_mat;
  dmid.topLeftCorner(n, n) -= dx * g.a_g * y + x * g.a_g * dy;
  const Matrix left_inv = inverse_checked(left, "[[U, X B], [0, I]]");
  const Matrix right_inv = inverse_checked(right, "[[V', 0], [C Y, I]]");
  const Matrix dctrl =
      left_inv * (dmid - dleft * ctrl * right - left * ctrl * dright) *
      right_inv;

  RenMatrices d;
  d.a_k = dctrl.topLeftCorner(n, n);
  d.b_k2 = dctrl.topRightCorner(n, ny);
  d.c_k1 = dctrl.bottomLeftCorner(nu, n);
  d.d_k2 = dctrl.bottomRightCorner(nu, ny);
  d.d_k1 = dth.d_k1_tilde;
  d.b_k1 = xinv * (dth.n_hat_12 - dx * g.b_g2 * th.d_k1_tilde -
                   x * g.b_g2 * dth.d_k1_tilde - dx * tt.b_k1);
  const Vector lam_inv = th.lambda_phi.cwiseInverse();
  const Matrix dlam = dth.lambda_phi.asDiagonal();
  d.d_k3 = lam_inv.asDiagonal() * (dth.d_hat_k3 - dlam * tt.d_k3);
  d.d_k4 = lam_inv.asDiagonal() * (dth.d_hat_k4 - dlam * tt.d_k4);
  const Matrix lam = th.lambda_phi.asDiagonal();
  const Matrix dq = dth.n_hat_21 - dth.d_hat_k4 * g.c_g1 * y -
                    th.d_hat_k4 * g.c_g1 * dy;
  d.c_k2 = lam_inv.asDiagonal() *
           (dq - dlam * tt.c_k2 * v.transpose() -
            lam * tt.c_k2 * dv.transpose()) *
           inverse_checked(v.transpose(), "V'");
  return d;
}

Recovery recover_parameters(const ConvexParams& th, const PlantSector& plant,
                            double rho, const Vector& lambda_delta,
                            const Nonlinearity& phi,
                            const RecoveryOptions& opts) {
  const PlantSector g = loop_transform_plant(plant);
  const auto n = g.n_state();
  const Matrix lmi = build_lmi_transformed(th, g, rho, lambda_delta);
  const double lmi_margin = min_eigenvalue(lmi);
  require(lmi_margin > 0.0, ErrorKind::kInfeasible,
          "recover_parameters: theta_hat is not strictly feasible (margin " +
              std::to_string(lmi_margin) + ")");

  ControllerRecovery cr = recover_controller(th, g, phi, opts);
  Recovery rec;
  rec.theta_tilde = std::move(cr.theta_tilde);
  rec.used_svd = cr.used_svd;

  const Matrix& x = th.x_mat;
  const Matrix& y = th.y_mat;
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix ycal =
      block2(y, eye, cr.v_mat.transpose(), Matrix::Zero(n, n));
  const Matrix ycal_inv = inverse_checked(ycal, "Y-cal");
  const Matrix p =
      sym(ycal_inv.transpose() * block2(y, eye, eye, x) * ycal_inv);

  auto& cert = rec.certificate;
  cert.p_mat = p;
  cert.lambda_delta = lambda_delta;
  cert.lambda_phi = th.lambda_phi;
  cert.rho = rho;
  cert.u_mat = cr.u_mat;
  cert.v_mat = cr.v_mat;
  const Matrix pinv = inverse_checked(p, "P");
  cert.x_hat = p.bottomRightCorner(n, n);
  cert.y_hat = pinv.bottomRightCorner(n, n);
  const ClosedLoop cl = assemble_closed_loop(g, rec.theta_tilde);
  cert.margin = check_lyapunov_lmi(cl, p, cert.lambda(), rho);
  require(cert.margin < 0.0, ErrorKind::kNumeric,
          "recover_parameters: recovered certificate has nonnegative margin " +
              std::to_string(cert.margin));
  return rec;
}

double decay_envelope(const StabilityCertificate& cert, double x0_norm,
                      int k) {
  return std::sqrt(cert.condition_number()) * std::pow(cert.rho, k) * x0_norm;
}

namespace {

struct SlackSolution {
  Matrix p;
  Vector lambda;
  double slack = 0.0;
};

// Maximizes s with L(P, Lambda) <= -s I, P >= I, Lambda >= 1 and a trace
// bound, on the closed loop as given.
SlackSolution max_slack_certificate(const ClosedLoop& cl, double rho) {
  const auto ns = cl.n_state(), nn = cl.n_nl();
  const int n_p = static_cast<int>(ns * (ns + 1) / 2);
  const int nvar = n_p + static_cast<int>(nn) + 1;  // P, Lambda, slack

  auto unpack_p = [&](const Vector& v) {
    Matrix p(ns, ns);
    int k = 0;
    for (Eigen::Index j = 0; j < ns; ++j)
      for (Eigen::Index i = 0; i <= j; ++i) {
        p(i, j) = v(k);
        p(j, i) = v(k);
        ++k;
      }
    return p;
  };
  auto lam_of = [&](const Vector& v) { return Vector(v.segment(n_p, nn)); };

  sdp::BarrierProblem prob;
  prob.num_vars = nvar;
  prob.lmis.push_back(sdp::AffineSymMatrix::from_function(
      nvar, [&](const Vector& v) {
        Matrix m = -lyapunov_lmi_matrix(cl, unpack_p(v), lam_of(v), rho);
        m.diagonal().array() -= v(nvar - 1);
        return m;
      }));
  prob.lmis.push_back(sdp::AffineSymMatrix::from_function(
      nvar, [&](const Vector& v) {
        return Matrix(unpack_p(v) - Matrix::Identity(ns, ns));
      }));
  const double bound = 1e4 * static_cast<double>(ns + nn);
  prob.lin_a = Matrix::Zero(nn + 1, nvar);
  prob.lin_b = Vector::Zero(nn + 1);
  for (Eigen::Index i = 0; i < nn; ++i) {
    prob.lin_a(i, n_p + i) = 1.0;
    prob.lin_b(i) = -1.0;
  }
  {
    int k = 0;
    for (Eigen::Index j = 0; j < ns; ++j)
      for (Eigen::Index i = 0; i <= j; ++i, ++k)
        if (i == j) prob.lin_a(nn, k) = -1.0;
    for (Eigen::Index i = 0; i < nn; ++i) prob.lin_a(nn, n_p + i) = -1.0;
    prob.lin_b(nn) = bound;
  }
  prob.linear_cost = Vector::Zero(nvar);
  prob.linear_cost(nvar - 1) = -1.0;

  Vector start = Vector::Zero(nvar);
  {
    int k = 0;
    for (Eigen::Index j = 0; j < ns; ++j)
      for (Eigen::Index i = 0; i <= j; ++i, ++k)
        if (i == j) start(k) = 2.0;
    for (Eigen::Index i = 0; i < nn; ++i) start(n_p + i) = 2.0;
    start(nvar - 1) = 0.0;
    const Matrix g0 = prob.lmis[0].evaluate(start);
    start(nvar - 1) = min_eigenvalue(g0) - 1.0;
  }
  sdp::BarrierOptions opts;
  opts.gap_tol = 1e-8;
  const sdp::BarrierResult res = sdp::solve_barrier(prob, start, opts);
  return {unpack_p(res.x), lam_of(res.x), res.x(nvar - 1)};
}

// Closed loop in coordinates zeta = T z.
ClosedLoop change_state_basis(const ClosedLoop& cl, const Matrix& t) {
  ClosedLoop out = cl;
  const Matrix t_inv = t.inverse();
  out.a_cal = t_inv * cl.a_cal * t;
  out.b_cal = t_inv * cl.b_cal;
  out.c_cal = cl.c_cal * t;
  return out;
}

}  // namespace

StabilityCertificate find_certificate(const PlantSector& plant,
                                      const TransformedRenParams& tt,
                                      double rho, double min_slack) {
  require(rho >= 0.0 && rho < 1.0, ErrorKind::kInvalidArgument,
          "certify: rho must lie in [0, 1)");
  const ClosedLoop cl = assemble_closed_loop(plant, tt);
  const auto ns = cl.n_state();

  // Controllers near the edge of the certifiable set need P with a large
  // condition number, which the barrier cannot resolve directly. Each round
  // whitens the state with the previous round's P and solves again.
  Matrix t = Matrix::Identity(ns, ns);
  SlackSolution sol;
  Matrix p_orig;
  for (int round = 0; round < 6; ++round) {
    sol = max_slack_certificate(change_state_basis(cl, t), rho);
    const Matrix t_inv = t.inverse();
    p_orig = t_inv.transpose() * sol.p * t_inv;
    p_orig = 0.5 * (p_orig + p_orig.transpose()).eval();
    if (sol.slack > min_slack &&
        check_lyapunov_lmi(cl, p_orig, sol.lambda, rho) < 0.0)
      break;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sol.p);
    t = t * es.eigenvectors() *
        es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();
  }
  require(sol.slack > min_slack, ErrorKind::kInfeasible,
          "certify: no certificate found (best slack " +
              std::to_string(sol.slack) + ")");

  StabilityCertificate cert;
  cert.p_mat = p_orig;
  const Vector& lam = sol.lambda;
  cert.lambda_delta = lam.head(cl.n_delta);
  cert.lambda_phi = lam.tail(cl.n_phi);
  cert.rho = rho;
  cert.margin = check_lyapunov_lmi(cl, cert.p_mat, lam, rho);
  const Matrix pinv = inverse_checked(cert.p_mat, "P");
  const auto n = cl.n_g;
  if (cl.n_xi == n) {
    cert.u_mat = cert.p_mat.topRightCorner(n, n);
    cert.v_mat = pinv.topRightCorner(n, n);
    cert.x_hat = cert.p_mat.bottomRightCorner(n, n);
    cert.y_hat = pinv.bottomRightCorner(n, n);
  }
  require(cert.margin < 0.0, ErrorKind::kInfeasible,
          "certify: certificate margin is not negative");
  return cert;
}

}  // namespace stabren
