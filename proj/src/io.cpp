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

#include "stabren/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace stabren::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo,
          "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo,
          "cannot open '" + path.string() + "' for writing");
  out << text;
  require(static_cast<bool>(out), ErrorKind::kIo,
          "write to '" + path.string() + "' failed");
}

Json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

// Wraps nlohmann lookups so that type errors surface as kParse.
template <typename T>
T get(const Json& j, const char* key) {
  require(j.is_object() && j.contains(key), ErrorKind::kParse,
          std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kParse,
                std::string("key '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key);
}

Matrix matrix_from_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        r.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParse,
                    path.string() + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(r));
  }
  require(!rows.empty(), ErrorKind::kParse, path.string() + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == rows.front().size(), ErrorKind::kParse,
            path.string() + ": ragged rows");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k];
  }
  return m;
}

Matrix mat(const Json& j, const char* key, const fs::path& base) {
  require(j.contains(key), ErrorKind::kParse,
          std::string("missing matrix '") + key + "'");
  try {
    return matrix_from_json(j.at(key), base);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("matrix '") + key + "': " + e.what());
  }
}

Vector vec(const Json& j, const char* key) {
  require(j.contains(key), ErrorKind::kParse,
          std::string("missing vector '") + key + "'");
  return vector_from_json(j.at(key));
}

const char* kRenKeys[] = {"A_K",  "B_K1", "B_K2", "C_K1", "D_K1",
                          "D_K2", "C_K2", "D_K3", "D_K4"};

std::vector<const Matrix*> ren_blocks(const RenMatrices& m) {
  return {&m.a_k, &m.b_k1, &m.b_k2, &m.c_k1, &m.d_k1,
          &m.d_k2, &m.c_k2, &m.d_k3, &m.d_k4};
}

std::vector<Matrix*> ren_blocks(RenMatrices& m) {
  return {&m.a_k, &m.b_k1, &m.b_k2, &m.c_k1, &m.d_k1,
          &m.d_k2, &m.c_k2, &m.d_k3, &m.d_k4};
}

Json resolve_file(const Json& j, const fs::path& base, fs::path* new_base) {
  if (j.is_object() && j.size() == 1 && j.contains("file")) {
    const fs::path p = base / get<std::string>(j, "file");
    if (new_base) *new_base = p.parent_path();
    return read_json(p);
  }
  if (new_base) *new_base = base;
  return j;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j, const fs::path& base) {
  if (j.is_object() && j.contains("file")) {
    return matrix_from_csv(base / get<std::string>(j, "file"));
  }
  if (j.is_object()) {
    const auto r = get<Eigen::Index>(j, "rows");
    const auto c = get<Eigen::Index>(j, "cols");
    const auto data = get<std::vector<double>>(j, "data");
    require(r >= 0 && c >= 0 &&
                static_cast<Eigen::Index>(data.size()) == r * c,
            ErrorKind::kParse, "matrix: data length does not match rows*cols");
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k)
        m(i, k) = data[static_cast<std::size_t>(i * c + k)];
    return m;
  }
  if (j.is_array()) {
    if (j.empty()) return Matrix(0, 0);
    if (j.front().is_number()) {  // a bare list is a column
      Matrix m(static_cast<Eigen::Index>(j.size()), 1);
      for (std::size_t i = 0; i < j.size(); ++i) {
        require(j[i].is_number(), ErrorKind::kParse, "matrix: non-number");
        m(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
      }
      return m;
    }
    const std::size_t cols = j.front().size();
    Matrix m(static_cast<Eigen::Index>(j.size()),
             static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
      require(j[i].is_array() && j[i].size() == cols, ErrorKind::kParse,
              "matrix: ragged rows");
      for (std::size_t k = 0; k < cols; ++k) {
        require(j[i][k].is_number(), ErrorKind::kParse, "matrix: non-number");
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            j[i][k].get<double>();
      }
    }
    return m;
  }
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  throw Error(ErrorKind::kParse, "matrix: unsupported JSON value");
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  require(j.is_array(), ErrorKind::kParse, "vector: expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), ErrorKind::kParse, "vector: non-number entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json nonlinearity_to_json(const Nonlinearity& n) {
  Json out;
  if (n.homogeneous() && !n.channels.empty()) {
    out["activation"] = n.channels.front().act.name();
  } else {
    Json names = Json::array();
    for (const auto& c : n.channels) names.push_back(c.act.name());
    out["activations"] = names;
  }
  out["alpha"] = vector_to_json(n.sector.alpha);
  out["beta"] = vector_to_json(n.sector.beta);
  bool raw = true;
  for (const auto& c : n.channels) raw = raw && c.shift == 0.0 && c.scale == 1.0;
  if (!raw) {
    Json shift = Json::array(), scale = Json::array();
    for (const auto& c : n.channels) {
      shift.push_back(c.shift);
      scale.push_back(c.scale);
    }
    out["shift"] = shift;
    out["scale"] = scale;
  }
  return out;
}

Nonlinearity nonlinearity_from_json(const Json& j, Eigen::Index expected) {
  Nonlinearity n;
  if (j.is_string()) {
    return Nonlinearity::uniform(Activation::from_name(j.get<std::string>()),
                                 expected);
  }
  require(j.is_object(), ErrorKind::kParse,
          "nonlinearity: expected an object or a name");
  std::vector<Activation> acts;
  if (j.contains("activations")) {
    for (const auto& s : get<std::vector<std::string>>(j, "activations"))
      acts.push_back(Activation::from_name(s));
  } else {
    const Activation a = Activation::from_name(get<std::string>(j, "activation"));
    acts.assign(static_cast<std::size_t>(expected), a);
  }
  require(static_cast<Eigen::Index>(acts.size()) == expected,
          ErrorKind::kDimensionMismatch,
          "nonlinearity: expected " + std::to_string(expected) + " channels");
  for (const auto& a : acts) n.channels.push_back({a, 0.0, 1.0});
  n.sector.alpha = Vector(expected);
  n.sector.beta = Vector(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    n.sector.alpha(i) = acts[static_cast<std::size_t>(i)].sector_alpha();
    n.sector.beta(i) = acts[static_cast<std::size_t>(i)].sector_beta();
  }
  if (j.contains("alpha")) n.sector.alpha = vec(j, "alpha");
  if (j.contains("beta")) n.sector.beta = vec(j, "beta");
  require(n.sector.alpha.size() == expected && n.sector.beta.size() == expected,
          ErrorKind::kDimensionMismatch, "nonlinearity: sector size");
  if (j.contains("shift") || j.contains("scale")) {
    const Vector shift = vec(j, "shift"), scale = vec(j, "scale");
    require(shift.size() == expected && scale.size() == expected,
            ErrorKind::kDimensionMismatch, "nonlinearity: shift/scale size");
    for (Eigen::Index i = 0; i < expected; ++i) {
      n.channels[static_cast<std::size_t>(i)].shift = shift(i);
      n.channels[static_cast<std::size_t>(i)].scale = scale(i);
    }
  }
  n.sector.validate();
  return n;
}

Json plant_to_json(const PlantSector& p) {
  return {{"type", "sector"},
          {"A_G", matrix_to_json(p.a_g)},
          {"B_G1", matrix_to_json(p.b_g1)},
          {"B_G2", matrix_to_json(p.b_g2)},
          {"C_G1", matrix_to_json(p.c_g1)},
          {"C_G2", matrix_to_json(p.c_g2)},
          {"D_G3", matrix_to_json(p.d_g3)},
          {"delta", nonlinearity_to_json(p.delta)}};
}

Json lti_plant_to_json(const PlantLti& p) {
  return {{"type", "lti"},
          {"A_G", matrix_to_json(p.a_g)},
          {"B_G", matrix_to_json(p.b_g)},
          {"C_G", matrix_to_json(p.c_g)}};
}

Json nn_plant_to_json(const ImplicitNnPlant& p) {
  return {{"type", "implicit_nn"},
          {"A", matrix_to_json(p.a)},
          {"B1", matrix_to_json(p.b1)},
          {"B2", matrix_to_json(p.b2)},
          {"C1", matrix_to_json(p.c1)},
          {"C2", matrix_to_json(p.c2)},
          {"D3", matrix_to_json(p.d3)},
          {"delta", nonlinearity_to_json(p.delta)}};
}

ImplicitNnPlant nn_plant_from_json(const Json& j0, const fs::path& base0) {
  fs::path base;
  const Json j = resolve_file(j0, base0, &base);
  require(get_or<std::string>(j, "type", "implicit_nn") == "implicit_nn",
          ErrorKind::kParse, "expected an implicit_nn plant");
  ImplicitNnPlant p;
  p.a = mat(j, "A", base);
  p.b1 = mat(j, "B1", base);
  p.b2 = mat(j, "B2", base);
  p.c1 = mat(j, "C1", base);
  p.c2 = mat(j, "C2", base);
  p.d3 = mat(j, "D3", base);
  p.delta = nonlinearity_from_json(
      j.contains("delta") ? j.at("delta") : Json("tanh"), p.d3.rows());
  p.validate();
  return p;
}

PlantSector plant_from_json(const Json& j0, const fs::path& base0) {
  fs::path base;
  const Json j = resolve_file(j0, base0, &base);
  const std::string type = get<std::string>(j, "type");
  if (type == "lti") {
    PlantLti p{mat(j, "A_G", base), mat(j, "B_G", base), mat(j, "C_G", base)};
    p.validate();
    return to_sector_plant(p);
  }
  if (type == "implicit_nn") return to_sector_plant(nn_plant_from_json(j, base));
  if (type == "pendulum") {
    PendulumParams pp;
    pp.dt = get_or<double>(j, "dt", pp.dt);
    pp.mass = get_or<double>(j, "mass", pp.mass);
    pp.length = get_or<double>(j, "length", pp.length);
    pp.friction = get_or<double>(j, "friction", pp.friction);
    pp.gravity = get_or<double>(j, "gravity", pp.gravity);
    PlantSector p = pendulum_plant(pp);
    p.validate();
    return p;
  }
  require(type == "sector", ErrorKind::kParse,
          "unknown plant type '" + type + "'");
  PlantSector p;
  p.a_g = mat(j, "A_G", base);
  p.b_g1 = mat(j, "B_G1", base);
  p.b_g2 = mat(j, "B_G2", base);
  p.c_g1 = mat(j, "C_G1", base);
  p.c_g2 = mat(j, "C_G2", base);
  p.d_g3 = mat(j, "D_G3", base);
  require(j.contains("delta"), ErrorKind::kParse, "missing 'delta'");
  p.delta = nonlinearity_from_json(j.at("delta"), p.d_g3.rows());
  p.validate();
  return p;
}

Json controller_to_json(const TransformedRenParams& c) {
  Json out{{"form", "transformed"},
           {"phi", nonlinearity_to_json(c.phi)}};
  const auto blocks = ren_blocks(static_cast<const RenMatrices&>(c));
  for (std::size_t i = 0; i < blocks.size(); ++i)
    out[kRenKeys[i]] = matrix_to_json(*blocks[i]);
  return out;
}

TransformedRenParams controller_from_json(const Json& j0,
                                          const fs::path& base0) {
  fs::path base;
  const Json j = resolve_file(j0, base0, &base);
  const std::string form = get_or<std::string>(j, "form", "transformed");
  RenMatrices m;
  auto blocks = ren_blocks(m);
  for (std::size_t i = 0; i < blocks.size(); ++i)
    *blocks[i] = mat(j, kRenKeys[i], base);
  m.validate_shapes();
  require(j.contains("phi"), ErrorKind::kParse, "missing 'phi'");
  const Nonlinearity phi = nonlinearity_from_json(j.at("phi"), m.n_phi());
  if (form == "original") {
    RenParams p;
    static_cast<RenMatrices&>(p) = m;
    p.phi = phi;
    return loop_transform_controller(p);
  }
  require(form == "transformed", ErrorKind::kParse,
          "unknown controller form '" + form + "'");
  return TransformedRenParams::from_matrices(std::move(m), phi);
}

Json theta_hat_to_json(const ConvexParams& th, const Vector& lambda_delta,
                       double rho) {
  return {{"X", matrix_to_json(th.x_mat)},
          {"Y", matrix_to_json(th.y_mat)},
          {"N", matrix_to_json(th.n_mat)},
          {"lambda_phi", vector_to_json(th.lambda_phi)},
          {"D_K1_tilde", matrix_to_json(th.d_k1_tilde)},
          {"N_hat_12", matrix_to_json(th.n_hat_12)},
          {"N_hat_21", matrix_to_json(th.n_hat_21)},
          {"D_hat_K3", matrix_to_json(th.d_hat_k3)},
          {"D_hat_K4", matrix_to_json(th.d_hat_k4)},
          {"lambda_delta", vector_to_json(lambda_delta)},
          {"rho", rho}};
}

ConvexParams theta_hat_from_json(const Json& j0, Vector* lambda_delta,
                                 const fs::path& base0) {
  fs::path base;
  const Json j = resolve_file(j0, base0, &base);
  ConvexParams th;
  th.x_mat = mat(j, "X", base);
  th.y_mat = mat(j, "Y", base);
  th.n_mat = mat(j, "N", base);
  th.lambda_phi = vec(j, "lambda_phi");
  th.d_k1_tilde = mat(j, "D_K1_tilde", base);
  th.n_hat_12 = mat(j, "N_hat_12", base);
  th.n_hat_21 = mat(j, "N_hat_21", base);
  th.d_hat_k3 = mat(j, "D_hat_K3", base);
  th.d_hat_k4 = mat(j, "D_hat_K4", base);
  if (lambda_delta) {
    *lambda_delta = j.contains("lambda_delta") ? vec(j, "lambda_delta")
                                               : Vector();
  }
  return th;
}

Json certificate_to_json(const StabilityCertificate& c, const Json& plant_doc,
                         const Json& controller_doc) {
  Json out{{"rho", c.rho},
           {"margin", c.margin},
           {"P", matrix_to_json(c.p_mat)},
           {"lambda_delta", vector_to_json(c.lambda_delta)},
           {"lambda_phi", vector_to_json(c.lambda_phi)},
           {"condition_number", c.condition_number()},
           {"plant_hash", hex64(fnv1a(plant_doc.dump()))},
           {"controller_hash", hex64(fnv1a(controller_doc.dump()))}};
  return out;
}

StabilityCertificate certificate_from_json(const Json& j) {
  StabilityCertificate c;
  c.rho = get<double>(j, "rho");
  c.margin = get<double>(j, "margin");
  c.p_mat = mat(j, "P", {});
  c.lambda_delta = vec(j, "lambda_delta");
  c.lambda_phi = vec(j, "lambda_phi");
  require(c.p_mat.rows() == c.p_mat.cols(), ErrorKind::kParse,
          "certificate: P must be square");
  return c;
}

bool certificate_matches(const Json& cert, const Json& plant_doc,
                         const Json& controller_doc) {
  return get_or<std::string>(cert, "plant_hash", "") ==
             hex64(fnv1a(plant_doc.dump())) &&
         get_or<std::string>(cert, "controller_hash", "") ==
             hex64(fnv1a(controller_doc.dump()));
}

RewardOracle reward_from_json(const Json& j, int horizon) {
  const std::string name = get_or<std::string>(j, "name", "bias_minus_effort");
  const double limit =
      get_or<double>(j, "angle_limit", 3.14159265358979323846);
  if (name == "bias_minus_effort") {
    return RewardOracle::bias_minus_effort(horizon, get_or<double>(j, "bias", 4.0),
                                           limit);
  }
  if (name == "bias_minus_quadratic") {
    return RewardOracle::bias_minus_quadratic(
        mat(j, "Q", {}), mat(j, "R", {}), horizon,
        get_or<double>(j, "bias", 5.0), limit);
  }
  throw Error(ErrorKind::kParse, "unknown reward '" + name + "'");
}

TrainConfig train_config_from_json(const Json& j, const fs::path& base) {
  (void)base;
  TrainConfig c;
  c.rho = get_or<double>(j, "rho", c.rho);
  c.n_phi = get_or<Eigen::Index>(j, "n_phi", c.n_phi);
  c.activation =
      Activation::from_name(get_or<std::string>(j, "activation", "tanh"));
  if (j.contains("x0_low")) c.x0_low = vec(j, "x0_low");
  if (j.contains("x0_high")) c.x0_high = vec(j, "x0_high");
  c.horizon = get_or<int>(j, "horizon", c.horizon);
  c.learning_rate = get_or<double>(j, "learning_rate", c.learning_rate);
  c.halve_on_decrease = get_or<bool>(j, "halve_on_decrease", false);
  c.grad_clip = get_or<double>(j, "grad_clip", c.grad_clip);
  const std::string mode = get_or<std::string>(j, "grad_mode", "analytic");
  if (mode == "analytic") {
    c.grad_mode = GradMode::kAnalytic;
  } else if (mode == "finite_difference" || mode == "fd") {
    c.grad_mode = GradMode::kFiniteDifference;
  } else {
    throw Error(ErrorKind::kParse, "unknown grad_mode '" + mode + "'");
  }
  c.batch_size = get_or<int>(j, "batch_size", c.batch_size);
  c.eval_batch_size = get_or<int>(j, "eval_batch_size", c.eval_batch_size);
  c.iterations = get_or<int>(j, "iterations", c.iterations);
  c.validation_steps = get_or<int>(j, "validation_steps", c.validation_steps);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.eps = get_or<double>(j, "eps", c.eps);
  return c;
}

SysidSettings sysid_settings_from_json(const Json& j, const fs::path& base) {
  SysidSettings s;
  s.samples = get_or<Eigen::Index>(j, "samples", s.samples);
  s.test_samples = get_or<Eigen::Index>(j, "test_samples", s.test_samples);
  s.hidden = get_or<Eigen::Index>(j, "hidden", s.hidden);
  s.x_low = vec(j, "x_low");
  s.x_high = vec(j, "x_high");
  s.u_low = vec(j, "u_low");
  s.u_high = vec(j, "u_high");
  s.c1 = mat(j, "C1", base);
  s.init_scale = get_or<double>(j, "init_scale", s.init_scale);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  s.restarts = get_or<int>(j, "restarts", s.restarts);
  s.target_mse = get_or<double>(j, "target_mse", s.target_mse);
  auto& o = s.options;
  o.learning_rate = get_or<double>(j, "learning_rate", o.learning_rate);
  o.lr_decay = get_or<double>(j, "lr_decay", o.lr_decay);
  o.alpha = get_or<double>(j, "alpha", o.alpha);
  o.epochs = get_or<int>(j, "epochs", o.epochs);
  o.batch_size = get_or<Eigen::Index>(j, "batch_size", o.batch_size);
  const std::string opt = get_or<std::string>(j, "optimizer", "gd");
  if (opt == "gd") {
    o.optimizer = SysidOptimizer::kGradientDescent;
  } else if (opt == "adam") {
    o.optimizer = SysidOptimizer::kAdam;
  } else {
    throw Error(ErrorKind::kParse, "unknown optimizer '" + opt + "'");
  }
  o.freeze_d3 = get_or<bool>(j, "freeze_d3", o.freeze_d3);
  o.whiten = get_or<bool>(j, "whiten", o.whiten);
  o.linear_warm_start =
      get_or<bool>(j, "linear_warm_start", o.linear_warm_start);
  o.seed = s.seed;
  return s;
}

void write_history_csv(std::ostream& os,
                       const std::vector<IterationRecord>& history) {
  os << "iteration,mean_reward,lmi_margin,grad_norm,projection_distance,"
        "wall_time,eval_reward,certificate_margin,learning_rate\n";
  const auto old = os.precision(17);
  for (const auto& r : history) {
    os << r.iteration << "," << r.mean_reward << "," << r.lmi_margin << ","
       << r.grad_norm << "," << r.projection_distance << "," << r.wall_time
       << "," << r.eval_reward << "," << r.certificate_margin << ","
       << r.learning_rate << "\n";
  }
  os.precision(old);
}

}  // namespace stabren::io
