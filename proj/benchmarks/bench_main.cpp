#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include <localstar/action.hpp>
#include <localstar/geometry.hpp>
#include <localstar/starproduct.hpp>
#include <localstar/twisted.hpp>

using namespace localstar;

namespace {

Mat symplectic() {
  Mat j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

AdmissibleAction standard_action() {
  return AdmissibleAction(FiberGeometry(Mat::Identity(2, 2), RadialDiffeo(2)), Mat::Identity(2, 2),
                          symplectic(), 0.1);
}

GriddedFunction gaussian(const Grid& grid, double cx, double cy, double k) {
  return GriddedFunction::from_closed_form(grid, [=](const double* x) {
    const double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
    return std::exp(-r2 / (2 * 0.06 * 0.06)) * std::polar(1.0, k * x[0]);
  });
}

void BM_TwistedConvolution(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const TwistedConvolution tc(2, n, 1.6, 0.1 * symplectic());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<Complex> a(tc.size()), b(tc.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = {g(rng), g(rng)};
    b[i] = {g(rng), g(rng)};
  }
  for (auto _ : state) benchmark::DoNotOptimize(tc.convolve(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TwistedConvolution)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond)->Complexity();

void BM_DeformedProduct(benchmark::State& state) {
  const AdmissibleAction action = standard_action();
  const ProductEngine engine(action);
  const Grid grid = Grid::cube(2, 1.2, 128);
  const GriddedFunction f = gaussian(grid, 0.05, 0.0, 3.0), g = gaussian(grid, -0.05, 0.08, -2.0);
  for (auto _ : state) benchmark::DoNotOptimize(engine.deformed_product(f, g));
}
BENCHMARK(BM_DeformedProduct)->Unit(benchmark::kMillisecond);

void BM_PsiRoundTrip(benchmark::State& state) {
  const RadialDiffeo psi(2);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  Vec x(2);
  x << u(rng), u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(psi.apply_inverse(psi.apply(x)));
}
BENCHMARK(BM_PsiRoundTrip);

}  // namespace

BENCHMARK_MAIN();
