#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <localstar/types.hpp>

#include "localstar/commands.hpp"
#include "localstar/config.hpp"

using namespace localstar::cli;

int main(int argc, char** argv) {
  CLI::App app{"localstar: deformed products on vector bundles and tangent towers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--out", out, "output directory (overrides output.dir)");
  app.add_option("--seed", seed, "random seed (overrides seed)");
  app.add_option("--set", overrides, "key=value override, repeatable");

  auto* build = app.add_subcommand("build-theta", "construct the structure and write field grids");

  std::string level;
  auto* product = app.add_subcommand("product", "deformed product at one tower level");
  product->add_option("--level", level, "fiber, tm, mxm or m")->required();

  std::vector<std::string> suites;
  auto* verify = app.add_subcommand("verify", "run the verification suites");
  verify->add_option("--suite", suites, "comma-separated suite names")->delimiter(',');

  std::string param = "hbar";
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "residual and seminorm curves against a parameter");
  sweep->add_option("--param", param, "parameter to sweep (hbar)");
  sweep->add_option("--values", values, "comma-separated values")->delimiter(',')->required();

  std::string compactum;
  std::size_t basis = 32;
  auto* seminorm = app.add_subcommand("seminorm", "deformed seminorm estimate on a compactum");
  seminorm->add_option("--compactum", compactum, "half-width h or ranges lo:hi,lo:hi")->required();
  seminorm->add_option("--basis", basis, "basis functions per axis (power of two)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = RunConfig::load(config_path);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out.empty()) cfg.set("output.dir", out);
    if (seed) cfg.set("seed", std::to_string(*seed));
    cfg.validate();
  } catch (const std::exception& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kUsage;
  }

  try {
    if (*build) return cmd_build_theta(cfg);
    if (*product) return cmd_product(cfg, level);
    if (*verify) return cmd_verify(cfg, suites);
    if (*sweep) return cmd_sweep(cfg, param, values);
    if (*seminorm) return cmd_seminorm(cfg, compactum, basis);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kUsage;
  } catch (const localstar::MarginOverflow& e) {
    fmt::print(stderr, "engine error: {}\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kUsage;
}
