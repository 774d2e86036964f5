#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <json.hpp>

#include "localstar/artifacts.hpp"
#include "localstar/commands.hpp"
#include "localstar/config.hpp"
#include "localstar/expression.hpp"
#include "localstar/suites.hpp"

using namespace localstar::cli;
using localstar::kPi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("localstar_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Expression, Arithmetic) {
  const Expression e("2*x1 + x2^2 - 3/4", {"x1", "x2"});
  const double v[2] = {1.5, -2.0};
  EXPECT_DOUBLE_EQ(e(v).real(), 3.0 + 4.0 - 0.75);
  EXPECT_EQ(Expression("-2^2", {})(nullptr).real(), -4.0);
}

TEST(Expression, ComplexAndFunctions) {
  const double v[1] = {0.3};
  const auto z = Expression("exp(i*pi*x)", {"x"})(v);
  EXPECT_NEAR(z.real(), std::cos(kPi * 0.3), 1e-15);
  EXPECT_NEAR(z.imag(), std::sin(kPi * 0.3), 1e-15);
  EXPECT_DOUBLE_EQ(Expression("abs(3 + 4*i)", {})(nullptr).real(), 5.0);
  EXPECT_DOUBLE_EQ(Expression("im(conj(2 + i))", {})(nullptr).real(), -1.0);
}

TEST(Expression, BumpAndPlateau) {
  const double at[2] = {0.1, -0.2};
  EXPECT_DOUBLE_EQ(Expression("bump(0.1, -0.2, 0.05)", {"x1", "x2"})(at).real(), 1.0);
  const double off[2] = {0.15, -0.2};
  EXPECT_NEAR(Expression("bump(0.1, -0.2, 0.05)", {"x1", "x2"})(off).real(), std::exp(-0.5), 1e-15);
  EXPECT_DOUBLE_EQ(Expression("plateau(0, 0, 0.3, 0.1)", {"x1", "x2"})(at).real(), 1.0);
  const double far[2] = {0.5, 0.0};
  EXPECT_DOUBLE_EQ(Expression("plateau(0, 0, 0.3, 0.1)", {"x1", "x2"})(far).real(), 0.0);
}

TEST(Expression, Errors) {
  EXPECT_THROW(Expression("2 + ", {}), std::invalid_argument);
  EXPECT_THROW(Expression("foo(1)", {}), std::invalid_argument);
  EXPECT_THROW(Expression("y", {"x"}), std::invalid_argument);
  EXPECT_THROW(Expression("(1 + 2", {}), std::invalid_argument);
}

TEST(Expression, Matrix) {
  const auto m = parse_matrix("cos(p1), 0; 0, bump(0, 0.1)", {"p1"});
  ASSERT_EQ(m.size(), 2u);
  ASSERT_EQ(m[1].size(), 2u);
  const double p[1] = {0.0};
  EXPECT_DOUBLE_EQ(m[0][0](p).real(), 1.0);
  EXPECT_DOUBLE_EQ(m[1][1](p).real(), 1.0);
}

TEST(Config, LoadAndOverride) {
  const fs::path dir = scratch("config");
  const fs::path file = dir / "run.cfg";
  std::ofstream(file) << "# comment\ntheta.scale = 0.25  # trailing\ngrid.fiber = 64\n";
  const RunConfig cfg = RunConfig::load(file.string());
  EXPECT_DOUBLE_EQ(cfg.number("theta.scale"), 0.25);
  EXPECT_EQ(cfg.count("grid.fiber"), 64u);
  EXPECT_EQ(cfg.str("geometry.kind"), "flat");
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Rejections) {
  RunConfig cfg;
  EXPECT_THROW(cfg.set("no.such.key", "1"), ConfigError);
  RunConfig skew;
  skew.set("theta.matrix", "0, 1; 1, 0");
  EXPECT_THROW(skew.validate(), ConfigError);
  RunConfig pow2;
  pow2.set("engine.torus_points", "96");
  EXPECT_THROW(pow2.validate(), ConfigError);
  RunConfig tol;
  tol.set("tolerance.oracle", "0");
  EXPECT_THROW(tol.validate(), ConfigError);
  const fs::path dir = scratch("config_bad");
  std::ofstream(dir / "bad.cfg") << "theta.scale 0.1\n";
  EXPECT_THROW(RunConfig::load((dir / "bad.cfg").string()), ConfigError);
  EXPECT_THROW(RunConfig::load((dir / "missing.cfg").string()), ConfigError);
}

TEST(Config, Numbered) {
  EXPECT_EQ(numbered("p", 3), (std::vector<std::string>{"p1", "p2", "p3"}));
}

TEST(Artifacts, CsvAndSidecar) {
  const fs::path dir = scratch("artifact");
  GridArtifact a;
  a.axes = {uniform_axis("x", 0.0, 1.0, 3), uniform_axis("y", -1.0, 1.0, 2)};
  a.columns = {"v"};
  a.values = {{0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0}};
  a.metadata["note"] = "t";
  const std::string csv = a.write(dir.string(), "grid");
  std::ifstream in(csv);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "x,y,v");
  EXPECT_EQ(first, "0,-1,0.10000000000000001");
  std::size_t rows = 1;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 6u);
  std::ifstream side(dir / "grid.json");
  const auto j = nlohmann::json::parse(side);
  EXPECT_EQ(j["note"], "t");
  GridArtifact bad = a;
  bad.values[0].pop_back();
  EXPECT_THROW(bad.check(), std::logic_error);
}

TEST(Commands, Compactum) {
  const auto cube = parse_compactum("1.5", 2);
  EXPECT_EQ(cube[1].first, -1.5);
  const auto box = parse_compactum("-1:2,0:0.5", 2);
  EXPECT_EQ(box[0].second, 2.0);
  EXPECT_THROW(parse_compactum("1:0,0:1", 2), ConfigError);
  EXPECT_THROW(parse_compactum("0:1", 2), ConfigError);
  EXPECT_THROW(parse_compactum("x", 2), ConfigError);
}

TEST(Commands, UsageErrors) {
  RunConfig cfg;
  cfg.set("output.dir", scratch("usage").string());
  EXPECT_THROW(cmd_product(cfg, "nowhere"), ConfigError);
  EXPECT_THROW(cmd_sweep(cfg, "hbar", {}), ConfigError);
  EXPECT_THROW(cmd_sweep(cfg, "seed", {0.1}), ConfigError);
  EXPECT_THROW(run_suites(cfg, {"prop-3.2"}), ConfigError);
}

TEST(Commands, ClassicalFiberProductIsPointwise) {
  RunConfig cfg;
  const fs::path dir = scratch("fiber");
  cfg.set("output.dir", dir.string());
  cfg.set("theta.scale", "0");
  EXPECT_EQ(cmd_product(cfg, "fiber"), kPass);
  std::ifstream side(dir / "product_fiber.json");
  const auto j = nlohmann::json::parse(side);
  EXPECT_EQ(j["deviation_from_pointwise"].get<double>(), 0.0);
  EXPECT_TRUE(j.contains("tolerances"));
}

TEST(Suites, FilterRunsOnlyTheNamedSuite) {
  RunConfig cfg;
  const VerifyReport r = run_suites(cfg, {"support-inclusion"});
  ASSERT_FALSE(r.checks.empty());
  for (const auto& c : r.checks) EXPECT_EQ(c.suite, "support-inclusion");
  EXPECT_TRUE(r.passed());
}

TEST(Suites, TinyToleranceFails) {
  RunConfig cfg;
  cfg.set("tolerance.equivariance", "1e-30");
  const VerifyReport r = run_suites(cfg, {"geometry"});
  EXPECT_FALSE(r.passed());
}
