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
#include "stabren/pipeline.hpp"

#include "test_util.hpp"

#include <fstream>
#include <sstream>

namespace stabren {
namespace {

namespace fs = std::filesystem;
using io::Json;

fs::path scratch(const std::string& name) {
  const fs::path d = fs::path(::testing::TempDir()) / "stabren_io";
  fs::create_directories(d);
  return d / name;
}

// Through text, as a file on disk would be.
Json reparse(const Json& j) { return Json::parse(j.dump()); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kNumeric;
}

TEST(Json, MatrixFormats) {
  const Matrix want = from_rows({{1.0, -2.5}, {0.1, 3e-17}});
  EXPECT_EQ(io::matrix_from_json(reparse(io::matrix_to_json(want))), want);
  EXPECT_EQ(io::matrix_from_json(Json::parse("[[1, -2.5], [0.1, 3e-17]]")),
            want);
  EXPECT_EQ(io::matrix_from_json(Json(2.0)), Matrix::Constant(1, 1, 2.0));
  const fs::path csv = scratch("m.csv");
  std::ofstream(csv) << "1,-2.5\n0.1,3e-17\n";
  EXPECT_EQ(io::matrix_from_json(Json{{"file", "m.csv"}}, csv.parent_path()),
            want);
  EXPECT_EQ(kind_of([] { io::matrix_from_json(Json::parse("[[1, 2], [3]]")); }),
            ErrorKind::kParse);
  EXPECT_EQ(kind_of([] {
              io::matrix_from_json(
                  Json::parse(R"({"rows": 2, "cols": 2, "data": [1, 2, 3]})"));
            }),
            ErrorKind::kParse);
}

TEST(Json, PlantRoundTripIsExact) {
  const PlantSector g = pendulum_plant();
  const PlantSector h = io::plant_from_json(reparse(io::plant_to_json(g)));
  EXPECT_EQ(h.a_g, g.a_g);
  EXPECT_EQ(h.b_g1, g.b_g1);
  EXPECT_EQ(h.b_g2, g.b_g2);
  EXPECT_EQ(h.c_g1, g.c_g1);
  EXPECT_EQ(h.c_g2, g.c_g2);
  EXPECT_EQ(h.d_g3, g.d_g3);
  EXPECT_EQ(h.delta.sector.alpha, g.delta.sector.alpha);
  EXPECT_EQ(h.delta.sector.beta, g.delta.sector.beta);
  EXPECT_EQ(io::plant_to_json(h).dump(), io::plant_to_json(g).dump());
}

TEST(Json, PendulumDocumentMatchesBuiltin) {
  const PlantSector h = io::plant_from_json(Json{{"type", "pendulum"}});
  EXPECT_EQ(io::plant_to_json(h), io::plant_to_json(pendulum_plant()));
}

TEST(Json, ControllerRoundTripIsExact) {
  std::mt19937_64 rng(1);
  const auto c = testing::random_controller(rng, 3, 4, 2, 1);
  const auto d = io::controller_from_json(reparse(io::controller_to_json(c)));
  EXPECT_EQ(d.max_abs_diff(c), 0.0);
  EXPECT_EQ(io::controller_to_json(d).dump(), io::controller_to_json(c).dump());
}

TEST(Json, OriginalFormIsTransformedOnLoad) {
  std::mt19937_64 rng(2);
  const auto c = testing::random_controller(rng, 2, 2, 1, 1);
  const RenParams orig = inverse_loop_transform(c);
  Json j = io::controller_to_json(c);
  j["form"] = "original";
  const auto blocks = {std::pair{"A_K", &orig.a_k}, {"B_K1", &orig.b_k1},
                       {"B_K2", &orig.b_k2},        {"C_K1", &orig.c_k1},
                       {"D_K1", &orig.d_k1},        {"D_K2", &orig.d_k2},
                       {"C_K2", &orig.c_k2},        {"D_K3", &orig.d_k3},
                       {"D_K4", &orig.d_k4}};
  for (const auto& [k, m] : blocks) {
    ASSERT_TRUE(j.contains(k)) << k;
    j[k] = io::matrix_to_json(*m);
  }
  EXPECT_LE(io::controller_from_json(reparse(j)).max_abs_diff(c), 1e-12);
}

TEST(Json, ThetaHatAndCertificateRoundTrip) {
  const PlantSector g = pendulum_plant();
  const ConvexParams th = sample_feasible(g, 0.99, 3, 2);
  const Vector lam = Vector::Constant(1, 1.25);
  Vector lam_back;
  const ConvexParams back = io::theta_hat_from_json(
      reparse(io::theta_hat_to_json(th, lam, 0.99)), &lam_back);
  EXPECT_EQ(convex_distance(back, th), 0.0);
  EXPECT_EQ(lam_back, lam);

  const Recovery r = recover_parameters(th, g, 0.99, Vector::Ones(1),
      Nonlinearity::uniform(Activation{ActivationKind::kTanh, 0.0}, 2));
  const Json pd = io::plant_to_json(g);
  const Json cd = io::controller_to_json(r.theta_tilde);
  const Json cert = reparse(io::certificate_to_json(r.certificate, pd, cd));
  const StabilityCertificate c = io::certificate_from_json(cert);
  EXPECT_EQ(c.p_mat, r.certificate.p_mat);
  EXPECT_EQ(c.lambda(), r.certificate.lambda());
  EXPECT_EQ(c.rho, r.certificate.rho);
  EXPECT_EQ(c.margin, r.certificate.margin);
  EXPECT_TRUE(io::certificate_matches(cert, pd, cd));

  Json other = cd;
  other["A_K"]["data"][0] = other["A_K"]["data"][0].get<double>() + 1e-12;
  EXPECT_FALSE(io::certificate_matches(cert, pd, other));
  EXPECT_FALSE(io::certificate_matches(
      cert, io::plant_to_json(to_sector_plant(PlantLti{
                Matrix::Ones(2, 2), Matrix::Ones(2, 1), Matrix::Ones(1, 2)})),
      cd));
}

TEST(Json, FilesOnDisk) {
  const fs::path p = scratch("plant.json");
  io::write_json(p, io::plant_to_json(pendulum_plant()));
  const PlantSector g =
      io::plant_from_json(Json{{"file", "plant.json"}}, p.parent_path());
  EXPECT_EQ(g.a_g, pendulum_plant().a_g);
  EXPECT_EQ(kind_of([] { io::read_json(scratch("missing.json")); }),
            ErrorKind::kIo);
  io::write_text(scratch("bad.json"), "{\"type\": ");
  EXPECT_EQ(kind_of([] { io::read_json(scratch("bad.json")); }),
            ErrorKind::kParse);
  EXPECT_EQ(kind_of([] { io::plant_from_json(Json{{"type", "quadrotor"}}); }),
            ErrorKind::kParse);
}

TEST(Json, Fnv1aKnownValues) {
  EXPECT_EQ(io::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::hex64(0xabcULL), "0000000000000abc");
}

TEST(Csv, HistoryColumns) {
  IterationRecord r;
  r.iteration = 3;
  r.mean_reward = 1.5;
  r.lmi_margin = 1e-6;
  std::ostringstream os;
  io::write_history_csv(os, {r});
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header.rfind("iteration,mean_reward,lmi_margin,grad_norm,"
                         "projection_distance,wall_time", 0),
            0u);
  EXPECT_EQ(row.rfind("3,1.5,9.9999999999999995e-07,", 0), 0u);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','),
            std::count(row.begin(), row.end(), ','));
}

fs::path config(const std::string& name) {
  return fs::path(STABREN_SOURCE_DIR) / "configs" / name;
}

TEST(Experiment, ShippedConfigsLoad) {
  for (const char* name : {"pendulum.cfg", "nn_plant.cfg", "smoke.cfg"}) {
    const Experiment e = load_experiment(config(name));
    EXPECT_EQ(e.train.x0_low.size(), 2 - (std::string(name) == "smoke.cfg"))
        << name;
    EXPECT_GT(e.train.iterations, 0) << name;
  }
  const Experiment nn = load_experiment(config("nn_plant.cfg"));
  ASSERT_TRUE(nn.sysid.has_value());
  ASSERT_TRUE(nn.true_plant.has_value());
  EXPECT_EQ(nn.sysid->hidden, 2);
  EXPECT_EQ(nn.sysid->c1, from_rows({{1.0, 0.0}}));
  for (const char* name : {"pendulum_plant.json", "stable_lti.json",
                           "unstable_lti.json"}) {
    EXPECT_NO_THROW(io::plant_from_json(io::read_json(config(name)),
                                        config(name).parent_path()))
        << name;
  }
}

TEST(Experiment, RejectsBadSections) {
  const fs::path p = scratch("bad.cfg");
  io::write_text(p, R"({"train": {"rho": 0.9}, "reward": {"name": "x"}})");
  EXPECT_EQ(kind_of([&] { load_experiment(p); }), ErrorKind::kParse);
  io::write_text(p, R"({"plant": {"type": "pendulum"},
                        "train": {"rho": 1.5, "x0_low": [-1, -1],
                                  "x0_high": [1, 1]},
                        "reward": {"name": "bias_minus_effort"}})");
  EXPECT_EQ(kind_of([&] {
              Experiment e = load_experiment(p);
              prepare_experiment(e);
              e.train.validate();
            }),
            ErrorKind::kInvalidArgument);
}

}  // namespace
}  // namespace stabren
