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

#include "stabren/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace stabren {

void SysidDataset::validate() const {
  require(x.cols() > 0, ErrorKind::kInvalidArgument, "dataset: no samples");
  require(u.cols() == x.cols() && x_next.cols() == x.cols(),
          ErrorKind::kDimensionMismatch, "dataset: sample counts differ");
  require(x_next.rows() == x.rows(), ErrorKind::kDimensionMismatch,
          "dataset: state sizes differ");
  require(x.allFinite() && u.allFinite() && x_next.allFinite(),
          ErrorKind::kInvalidArgument, "dataset: non-finite value");
}

SysidDataset SysidDataset::slice(Eigen::Index first, Eigen::Index count) const {
  require(first >= 0 && count >= 0 && first + count <= size(),
          ErrorKind::kInvalidArgument, "dataset: slice out of range");
  return {x.middleCols(first, count), u.middleCols(first, count),
          x_next.middleCols(first, count)};
}

void SysidDataset::write_csv(std::ostream& os) const {
  const auto n = x.rows(), m = u.rows();
  std::vector<std::string> head;
  for (Eigen::Index i = 0; i < n; ++i) head.push_back("x_" + std::to_string(i));
  for (Eigen::Index i = 0; i < m; ++i) head.push_back("u_" + std::to_string(i));
  for (Eigen::Index i = 0; i < n; ++i)
    head.push_back("xn_" + std::to_string(i));
  for (std::size_t i = 0; i < head.size(); ++i)
    os << (i ? "," : "") << head[i];
  os << "\n";
  const auto old = os.precision(17);
  for (Eigen::Index s = 0; s < size(); ++s) {
    for (Eigen::Index i = 0; i < n; ++i) os << (i ? "," : "") << x(i, s);
    for (Eigen::Index i = 0; i < m; ++i) os << "," << u(i, s);
    for (Eigen::Index i = 0; i < n; ++i) os << "," << x_next(i, s);
    os << "\n";
  }
  os.precision(old);
}

SysidDataset SysidDataset::read_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::kParse,
          "dataset: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      c.erase(std::remove_if(c.begin(), c.end(), ::isspace), c.end());
      cols.push_back(c);
    }
  }
  Eigen::Index n = 0, m = 0, nn = 0;
  for (const auto& c : cols) {
    const std::string want_x = "x_" + std::to_string(n);
    const std::string want_u = "u_" + std::to_string(m);
    const std::string want_xn = "xn_" + std::to_string(nn);
    if (m == 0 && nn == 0 && c == want_x) {
      ++n;
    } else if (nn == 0 && c == want_u) {
      ++m;
    } else if (c == want_xn) {
      ++nn;
    } else {
      throw Error(ErrorKind::kParse, "dataset: unexpected column '" + c + "'");
    }
  }
  require(n > 0 && nn == n, ErrorKind::kParse,
          "dataset: header must list x_i, u_j and xn_i columns");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(c, &used));
        require(c.find_first_not_of(" \t\r", used) == std::string::npos,
                ErrorKind::kParse, "trailing characters");
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParse, "dataset: bad number '" + c +
                                           "' on line " +
                                           std::to_string(line_no));
      }
    }
    require(vals.size() == cols.size(), ErrorKind::kParse,
            "dataset: wrong field count on line " + std::to_string(line_no));
    rows.push_back(std::move(vals));
  }
  const auto s = static_cast<Eigen::Index>(rows.size());
  SysidDataset d{Matrix(n, s), Matrix(m, s), Matrix(n, s)};
  for (Eigen::Index j = 0; j < s; ++j) {
    const auto& r = rows[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) d.x(i, j) = r[i];
    for (Eigen::Index i = 0; i < m; ++i) d.u(i, j) = r[n + i];
    for (Eigen::Index i = 0; i < n; ++i) d.x_next(i, j) = r[n + m + i];
  }
  d.validate();
  return d;
}

SysidDataset make_transition_dataset(const PlantSector& plant,
                                     const Vector& x_low, const Vector& x_high,
                                     const Vector& u_low, const Vector& u_high,
                                     Eigen::Index samples, std::uint64_t seed) {
  plant.validate();
  const auto n = plant.n_state(), m = plant.n_input();
  require(x_low.size() == n && x_high.size() == n && u_low.size() == m &&
              u_high.size() == m,
          ErrorKind::kDimensionMismatch, "dataset: box sizes");
  require(samples > 0, ErrorKind::kInvalidArgument, "dataset: sample count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SysidDataset d{Matrix(n, samples), Matrix(m, samples), Matrix(n, samples)};
  for (Eigen::Index s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i)
      d.x(i, s) = x_low(i) + (x_high(i) - x_low(i)) * unit(rng);
    for (Eigen::Index i = 0; i < m; ++i)
      d.u(i, s) = u_low(i) + (u_high(i) - u_low(i)) * unit(rng);
    d.x_next.col(s) = sector_plant_step(plant, d.x.col(s), d.u.col(s)).x_next;
  }
  return d;
}

namespace {

struct Weights {
  Matrix a, b1, b2, c2, d3;

  std::vector<Matrix*> all() { return {&a, &b1, &b2, &c2, &d3}; }
};

FixedPointOptions sysid_solver() {
  FixedPointOptions o;
  o.tol = 1e-12;
  o.max_iterations = 1000;
  return o;
}

// Loss and gradient over the columns `idx` of (x, u, t).
double loss_and_grad(const Weights& w, const Nonlinearity& delta,
                     const Matrix& x, const Matrix& u, const Matrix& t,
                     const std::vector<Eigen::Index>& idx, Weights* g) {
  const auto n = w.a.rows(), nq = w.d3.rows();
  const double scale =
      1.0 / (static_cast<double>(idx.size()) * static_cast<double>(n));
  if (g) {
    g->a = Matrix::Zero(w.a.rows(), w.a.cols());
    g->b1 = Matrix::Zero(w.b1.rows(), w.b1.cols());
    g->b2 = Matrix::Zero(w.b2.rows(), w.b2.cols());
    g->c2 = Matrix::Zero(w.c2.rows(), w.c2.cols());
    g->d3 = Matrix::Zero(nq, nq);
  }
  const FixedPointOptions fp = sysid_solver();
  double loss = 0.0;
  Vector q = Vector::Zero(nq);
  for (Eigen::Index s : idx) {
    const Vector xs = x.col(s);
    const Vector us = u.col(s);
    const Vector b = w.c2 * xs;
    q = solve_fixed_point(delta, w.d3, b, Vector::Zero(nq), fp).z;
    const Vector e = w.a * xs + w.b1 * q + w.b2 * us - t.col(s);
    loss += scale * e.squaredNorm();
    if (!g) continue;
    const Vector ge = 2.0 * scale * e;
    g->a.noalias() += ge * xs.transpose();
    g->b1.noalias() += ge * q.transpose();
    g->b2.noalias() += ge * us.transpose();
    if (nq > 0) {
      const Vector slope = delta.slope(b + w.d3 * q);
      const Vector mu =
          implicit_sensitivity(slope, w.d3).transpose() * (w.b1.transpose() * ge);
      g->c2.noalias() += mu * xs.transpose();
      g->d3.noalias() += mu * q.transpose();
    }
  }
  return loss;
}

void rescale_d3(Matrix& d3, double alpha) {
  if (d3.size() == 0) return;
  const double sigma = well_posedness_norm(d3);
  if (sigma >= 1.0) d3 *= alpha / sigma;
}

}  // namespace

double sysid_mse(const ImplicitNnPlant& nn, const SysidDataset& data) {
  nn.validate();
  data.validate();
  require(data.x.rows() == nn.n_state() && data.u.rows() == nn.n_input(),
          ErrorKind::kDimensionMismatch, "sysid: dataset and model sizes");
  Weights w{nn.a, nn.b1, nn.b2, nn.c2, nn.d3};
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), 0);
  return loss_and_grad(w, nn.delta, data.x, data.u, data.x_next, idx, nullptr);
}

SysidResult sysid_train(const SysidDataset& data, const ImplicitNnPlant& init,
                        const SysidOptions& opts,
                        const SysidCallback& on_epoch) {
  data.validate();
  init.validate();
  require(opts.alpha > 0.0 && opts.alpha < 1.0, ErrorKind::kInvalidArgument,
          "sysid: alpha must lie in (0, 1)");
  require(opts.learning_rate > 0.0 && opts.lr_decay > 0.0 && opts.epochs >= 0,
          ErrorKind::kInvalidArgument, "sysid: learning rate and epochs");
  require(data.x.rows() == init.n_state() && data.u.rows() == init.n_input(),
          ErrorKind::kDimensionMismatch, "sysid: dataset and model sizes");

  // Per-coordinate scaling folded into the weights (no offsets: the model
  // has no bias terms).
  const auto n = init.n_state(), m = init.n_input();
  Vector sx = Vector::Ones(n), su = Vector::Ones(m), st = Vector::Ones(n);
  if (opts.whiten) {
    auto rms = [](const Matrix& v) {
      Vector r = (v.array().square().rowwise().mean()).sqrt();
      for (Eigen::Index i = 0; i < r.size(); ++i)
        if (!(r(i) > 1e-12)) r(i) = 1.0;
      return r;
    };
    sx = rms(data.x);
    su = rms(data.u);
    st = rms(data.x_next);
  }
  const Matrix xw = sx.cwiseInverse().asDiagonal() * data.x;
  const Matrix uw = su.cwiseInverse().asDiagonal() * data.u;
  const Matrix tw = st.cwiseInverse().asDiagonal() * data.x_next;
  Weights w;
  w.a = st.cwiseInverse().asDiagonal() * init.a * sx.asDiagonal();
  w.b1 = st.cwiseInverse().asDiagonal() * init.b1;
  w.b2 = st.cwiseInverse().asDiagonal() * init.b2 * su.asDiagonal();
  w.c2 = init.c2 * sx.asDiagonal();
  w.d3 = init.d3;
  rescale_d3(w.d3, opts.alpha);
  if (opts.linear_warm_start) {
    // [a b2] from least squares on the residual left by the hidden layer.
    Matrix feats(n + m, xw.cols());
    feats << xw, uw;
    Matrix resid = tw;
    for (Eigen::Index s = 0; s < xw.cols(); ++s) {
      const Vector q = solve_fixed_point(init.delta, w.d3, w.c2 * xw.col(s),
                                         Vector::Zero(w.d3.rows()),
                                         sysid_solver())
                           .z;
      resid.col(s) -= w.b1 * q;
    }
    const Matrix coef = feats.transpose()
                            .colPivHouseholderQr()
                            .solve(resid.transpose())
                            .transpose();
    w.a = coef.leftCols(n);
    w.b2 = coef.rightCols(m);
  }

  auto to_plant = [&](const Weights& ww) {
    ImplicitNnPlant out = init;
    out.a = st.asDiagonal() * ww.a * sx.cwiseInverse().asDiagonal();
    out.b1 = st.asDiagonal() * ww.b1;
    out.b2 = st.asDiagonal() * ww.b2 * su.cwiseInverse().asDiagonal();
    out.c2 = ww.c2 * sx.cwiseInverse().asDiagonal();
    out.d3 = ww.d3;
    return out;
  };

  const Eigen::Index total = data.size();
  const Eigen::Index batch =
      opts.batch_size > 0 ? std::min(opts.batch_size, total) : total;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.seed);

  Weights m1{Matrix::Zero(w.a.rows(), w.a.cols()),
        Matrix::Zero(w.b1.rows(), w.b1.cols()),
        Matrix::Zero(w.b2.rows(), w.b2.cols()),
        Matrix::Zero(w.c2.rows(), w.c2.cols()),
        Matrix::Zero(w.d3.rows(), w.d3.cols())};
  Weights m2 = m1;
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step_count = 0;

  SysidResult res;
  double lr = opts.learning_rate;
  for (int epoch = 0; epoch < opts.epochs; ++epoch, lr *= opts.lr_decay) {
    if (batch < total) std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index first = 0; first < total; first += batch) {
      const Eigen::Index count = std::min(batch, total - first);
      std::vector<Eigen::Index> idx(order.begin() + first,
                                    order.begin() + first + count);
      Weights g;
      const double l =
          loss_and_grad(w, init.delta, xw, uw, tw, idx, &g);
      require(std::isfinite(l), ErrorKind::kNumeric,
              "sysid: non-finite loss (learning rate too large?)");
      if (opts.freeze_d3) g.d3.setZero();
      ++step_count;
      auto params = w.all();
      auto grads = g.all();
      auto mom1 = m1.all();
      auto mom2 = m2.all();
      for (std::size_t k = 0; k < params.size(); ++k) {
        if (opts.optimizer == SysidOptimizer::kGradientDescent) {
          *params[k] -= lr * *grads[k];
        } else {
          *mom1[k] = beta1 * *mom1[k] + (1.0 - beta1) * *grads[k];
          *mom2[k] = beta2 * *mom2[k] +
                     (1.0 - beta2) * grads[k]->cwiseAbs2();
          const double c1 = 1.0 - std::pow(beta1, step_count);
          const double c2 = 1.0 - std::pow(beta2, step_count);
          params[k]->array() -=
              lr * (mom1[k]->array() / c1) /
              ((mom2[k]->array() / c2).sqrt() + adam_eps);
        }
      }
      rescale_d3(w.d3, opts.alpha);
    }
    std::vector<Eigen::Index> all_idx(static_cast<std::size_t>(total));
    std::iota(all_idx.begin(), all_idx.end(), 0);
    const ImplicitNnPlant current = to_plant(w);
    const double mse = loss_and_grad({current.a, current.b1, current.b2,
                                      current.c2, current.d3},
                                     init.delta, data.x, data.u, data.x_next,
                                     all_idx, nullptr);
    require(std::isfinite(mse), ErrorKind::kNumeric,
            "sysid: non-finite loss (learning rate too large?)");
    res.loss.push_back(mse);
    res.d3_norm.push_back(current.d3.size() ? well_posedness_norm(current.d3)
                                            : 0.0);
    if (on_epoch) on_epoch(epoch, mse);
  }
  res.nn = to_plant(w);
  res.nn.validate();
  return res;
}

SysidResult sysid_train_restarts(
    const SysidDataset& train, const SysidDataset& validation,
    const std::function<ImplicitNnPlant(std::uint64_t)>& make_init,
    const SysidOptions& opts, int restarts, double target,
    std::uint64_t seed, const SysidCallback& on_epoch) {
  require(restarts >= 1, ErrorKind::kInvalidArgument,
          "sysid: at least one restart");
  SysidResult best;
  best.validation_mse = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    SysidOptions o = opts;
    o.seed = opts.seed + static_cast<std::uint64_t>(r);
    SysidResult cur = sysid_train(
        train, make_init(seed + static_cast<std::uint64_t>(r)), o, on_epoch);
    cur.validation_mse = sysid_mse(cur.nn, validation);
    cur.restart = r;
    if (cur.validation_mse < best.validation_mse) best = std::move(cur);
    if (best.validation_mse <= target) break;
  }
  return best;
}

ImplicitNnPlant random_nn_plant(Eigen::Index n_state, Eigen::Index n_input,
                                Eigen::Index n_hidden, const Matrix& c1,
                                const Activation& act, double scale,
                                std::uint64_t seed) {
  require(c1.cols() == n_state, ErrorKind::kDimensionMismatch,
          "random_nn_plant: c1 columns");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Matrix out(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) out(i, j) = normal(rng);
    return out;
  };
  ImplicitNnPlant nn;
  nn.a = draw(n_state, n_state);
  nn.b1 = draw(n_state, n_hidden);
  nn.b2 = draw(n_state, n_input);
  nn.c1 = c1;
  nn.c2 = draw(n_hidden, n_state);
  nn.d3 = draw(n_hidden, n_hidden);
  if (n_hidden > 0) {
    const double s = well_posedness_norm(nn.d3);
    if (s > 0.0) nn.d3 *= 0.5 / s;
  }
  nn.delta = Nonlinearity::uniform(act, n_hidden);
  return nn;
}

}  // namespace stabren
