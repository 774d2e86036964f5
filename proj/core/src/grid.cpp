#include "localstar/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace localstar {

Grid::Grid(std::vector<double> lo_, std::vector<double> hi_, std::vector<std::size_t> count_)
    : lo(std::move(lo_)), hi(std::move(hi_)), count(std::move(count_)) {
  if (lo.size() != hi.size() || lo.size() != count.size() || lo.empty()) {
    throw DomainError("grid axes are inconsistent");
  }
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (!(hi[a] > lo[a]) || count[a] < 2) {
      throw DomainError(fmt::format("grid axis {} is degenerate", a));
    }
  }
}

Grid Grid::cube(std::size_t n, double half_width, std::size_t points) {
  return Grid(std::vector<double>(n, -half_width), std::vector<double>(n, half_width),
              std::vector<std::size_t>(n, points));
}

std::size_t Grid::size() const {
  return std::accumulate(count.begin(), count.end(), std::size_t{1}, std::multiplies<>());
}

double Grid::spacing(std::size_t axis) const {
  return (hi[axis] - lo[axis]) / static_cast<double>(count[axis] - 1);
}

double Grid::coord(std::size_t axis, std::size_t j) const {
  if (j + 1 == count[axis]) return hi[axis];
  return lo[axis] + static_cast<double>(j) * spacing(axis);
}

void Grid::point(std::size_t flat, double* out) const {
  for (std::size_t a = dim(); a-- > 0;) {
    out[a] = coord(a, flat % count[a]);
    flat /= count[a];
  }
}

Vec Grid::point(std::size_t flat) const {
  Vec x(static_cast<Eigen::Index>(dim()));
  point(flat, x.data());
  return x;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::ClosedForm:
      return "closed-form";
    case Provenance::Resampled:
      return "resampled";
    case Provenance::Product:
      return "product";
  }
  return "unknown";
}

namespace {

constexpr double kSplinePole = -0.26794919243112270;  // sqrt(3) - 2

// In-place cubic B-spline prefilter of one line with mirror boundary.
void prefilter_line(Complex* c, std::size_t n, std::size_t stride) {
  if (n < 2) return;
  const double z = kSplinePole;
  const double gain = (1.0 - z) * (1.0 - 1.0 / z);
  for (std::size_t k = 0; k < n; ++k) c[k * stride] *= gain;

  // causal init: sum over the mirrored sequence until z^k is negligible
  const std::size_t horizon = std::min<std::size_t>(n, 40);
  Complex sum = c[0];
  double zk = z;
  for (std::size_t k = 1; k < horizon; ++k) {
    sum += zk * c[k * stride];
    zk *= z;
  }
  c[0] = sum;
  for (std::size_t k = 1; k < n; ++k) c[k * stride] += z * c[(k - 1) * stride];
  c[(n - 1) * stride] =
      (z / (z * z - 1.0)) * (c[(n - 1) * stride] + z * c[(n - 2) * stride]);
  for (std::size_t k = n - 1; k-- > 0;) {
    c[k * stride] = z * (c[(k + 1) * stride] - c[k * stride]);
  }
}

inline double bspline3(double t) {
  t = std::abs(t);
  if (t < 1.0) return 2.0 / 3.0 - t * t + 0.5 * t * t * t;
  if (t < 2.0) {
    const double u = 2.0 - t;
    return u * u * u / 6.0;
  }
  return 0.0;
}

inline long mirror_index(long j, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  j %= period;
  if (j < 0) j += period;
  return j < n ? j : period - j;
}

}  // namespace

SplineSampler::SplineSampler(const Grid& grid, const std::vector<Complex>& values)
    : grid_(grid), coeffs_(values) {
  if (values.size() != grid.size()) throw DomainError("spline: sample count mismatch");
  const std::size_t n = grid.dim();
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t stride = 1;
    for (std::size_t b = a + 1; b < n; ++b) stride *= grid.count[b];
    const std::size_t len = grid.count[a];
    const std::size_t outer = grid.size() / (len * stride);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t s = 0; s < stride; ++s) {
        prefilter_line(coeffs_.data() + o * len * stride + s, len, stride);
      }
    }
  }
}

Complex SplineSampler::operator()(const double* x) const {
  const std::size_t n = grid_.dim();
  constexpr std::size_t kMaxDim = 4;
  if (n > kMaxDim) throw DomainError("spline sampler supports at most 4 axes");
  long base[kMaxDim];
  double w[kMaxDim][4];
  for (std::size_t a = 0; a < n; ++a) {
    const double h = grid_.spacing(a);
    const double u = (x[a] - grid_.lo[a]) / h;
    const double last = static_cast<double>(grid_.count[a] - 1);
    if (!(u >= -1e-9 && u <= last + 1e-9)) return Complex{};
    const double fl = std::floor(u);
    base[a] = static_cast<long>(fl) - 1;
    for (int k = 0; k < 4; ++k) w[a][k] = bspline3(u - (fl - 1.0 + k));
  }
  Complex acc{};
  std::size_t total = 1;
  for (std::size_t a = 0; a < n; ++a) total *= 4;
  for (std::size_t m = 0; m < total; ++m) {
    std::size_t rem = m;
    double weight = 1.0;
    std::size_t flat = 0;
    for (std::size_t a = 0; a < n; ++a) {
      const int k = static_cast<int>(rem % 4);
      rem /= 4;
      weight *= w[a][k];
      const long j = mirror_index(base[a] + k, static_cast<long>(grid_.count[a]));
      flat = flat * grid_.count[a] + static_cast<std::size_t>(j);
    }
    if (weight != 0.0) acc += weight * coeffs_[flat];
  }
  return acc;
}

void GriddedFunction::finish(std::optional<Box> declared_support) {
  if (values_.size() != grid_.size()) throw DomainError("sample count does not match grid");
  for (const auto& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw InvariantError("finite values", "gridded function has non-finite samples");
    }
  }
  const std::size_t n = grid_.dim();
  if (declared_support) {
    declared_ = true;
    support_ = *declared_support;
    if (support_.dim() != n) throw DomainError("declared support has wrong dimension");
    if (!support_.empty()) {
      for (std::size_t a = 0; a < n; ++a) {
        support_.lo[a] = std::max(support_.lo[a], grid_.lo[a]);
        support_.hi[a] = std::min(support_.hi[a], grid_.hi[a]);
      }
    }
    return;
  }
  declared_ = false;
  support_ = Box::empty_box(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (std::abs(values_[i]) <= kSupportThreshold) continue;
    grid_.point(i, x.data());
    for (std::size_t a = 0; a < n; ++a) {
      support_.lo[a] = std::min(support_.lo[a], x[a]);
      support_.hi[a] = std::max(support_.hi[a], x[a]);
    }
  }
}

GriddedFunction GriddedFunction::from_closed_form(const Grid& grid, Evaluator f,
                                                  std::optional<Box> declared_support) {
  std::vector<Complex> values(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < values.size(); ++i) {
    grid.point(i, x.data());
    values[i] = f(x.data());
  }
  return assemble(grid, std::move(values), std::move(f), Provenance::ClosedForm,
                  std::move(declared_support));
}

GriddedFunction GriddedFunction::constant(const Grid& grid, Complex value) {
  GriddedFunction g = assemble(
      grid, std::vector<Complex>(grid.size(), value), [value](const double*) { return value; },
      Provenance::ClosedForm, value == Complex{} ? std::optional<Box>(Box::empty_box(grid.dim()))
                                                 : std::optional<Box>(grid.box()));
  g.constant_ = value;
  return g;
}

GriddedFunction GriddedFunction::from_samples(const Grid& grid, std::vector<Complex> values) {
  return assemble(grid, std::move(values), nullptr, Provenance::Resampled, std::nullopt);
}

GriddedFunction GriddedFunction::assemble(const Grid& grid, std::vector<Complex> values,
                                          Evaluator f, Provenance provenance,
                                          std::optional<Box> declared_support,
                                          std::optional<SpectralTag> tag) {
  GriddedFunction g;
  g.grid_ = grid;
  g.values_ = std::move(values);
  g.eval_ = std::move(f);
  g.provenance_ = provenance;
  g.tag_ = std::move(tag);
  g.finish(std::move(declared_support));
  if (!g.eval_) g.spline_ = std::make_shared<SplineSampler>(g.grid_, g.values_);
  return g;
}

Complex GriddedFunction::operator()(const double* x) const {
  if (eval_) return eval_(x);
  if (spline_) return (*spline_)(x);
  throw DomainError("evaluating an empty gridded function");
}

GriddedFunction GriddedFunction::conj() const {
  std::vector<Complex> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(),
                 [](Complex z) { return std::conj(z); });
  Evaluator e;
  if (eval_) {
    e = [inner = eval_](const double* x) { return std::conj(inner(x)); };
  }
  GriddedFunction g = assemble(grid_, std::move(v), std::move(e), provenance_,
                               declared_ ? std::optional<Box>(support_) : std::nullopt);
  if (constant_) g.constant_ = std::conj(*constant_);
  return g;
}

GriddedFunction GriddedFunction::resampled() const {
  GriddedFunction g = assemble(grid_, values_, nullptr, Provenance::Resampled,
                               declared_ ? std::optional<Box>(support_) : std::nullopt);
  g.constant_ = constant_;
  return g;
}

double GriddedFunction::sup_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

GriddedFunction pointwise_product(const GriddedFunction& a, const GriddedFunction& b) {
  if (a.grid() != b.grid()) throw DomainError("pointwise product needs a common grid");
  std::vector<Complex> v(a.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  Evaluator e = [a, b](const double* x) { return a(x) * b(x); };
  std::optional<Box> declared;
  if (a.has_declared_support() && b.has_declared_support()) {
    Box s = a.support();
    for (std::size_t k = 0; k < s.dim() && !s.empty(); ++k) {
      s.lo[k] = std::max(s.lo[k], b.support().lo[k]);
      s.hi[k] = std::min(s.hi[k], b.support().hi[k]);
    }
    declared = s;
  }
  const bool both_closed =
      a.provenance() == Provenance::ClosedForm && b.provenance() == Provenance::ClosedForm;
  GriddedFunction g = GriddedFunction::assemble(
      a.grid(), std::move(v), std::move(e),
      both_closed ? Provenance::ClosedForm : Provenance::Product, declared);
  return g;
}

GriddedFunction regrid(const GriddedFunction& f, const Grid& grid) {
  std::vector<Complex> v(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    grid.point(i, x.data());
    v[i] = f(x.data());
  }
  if (f.is_constant()) return GriddedFunction::constant(grid, f.constant_value());
  Evaluator e = [f](const double* p) { return f(p); };
  return GriddedFunction::assemble(grid, std::move(v), std::move(e), f.provenance(),
                                   f.has_declared_support() ? std::optional<Box>(f.support())
                                                            : std::nullopt);
}

double max_abs_difference(const GriddedFunction& a, const GriddedFunction& b) {
  if (a.grid() != b.grid()) throw DomainError("comparison needs a common grid");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

double sup_norm(const GriddedFunction& f, const Box& region, bool refine) {
  const Grid& g = f.grid();
  const std::size_t n = g.dim();
  std::vector<double> x(n);
  std::vector<std::pair<double, std::size_t>> best;
  for (std::size_t i = 0; i < f.values().size(); ++i) {
    g.point(i, x.data());
    if (!region.contains(x.data())) continue;
    best.emplace_back(std::abs(f.values()[i]), i);
  }
  if (best.empty()) return 0.0;
  const std::size_t keep = std::min<std::size_t>(best.size(), 4);
  std::partial_sort(best.begin(), best.begin() + static_cast<long>(keep), best.end(),
                    [](const auto& l, const auto& r) { return l.first > r.first; });
  double sup = best.front().first;
  if (!refine) return sup;

  for (std::size_t s = 0; s < keep; ++s) {
    g.point(best[s].second, x.data());
    double value = best[s].first;
    std::vector<double> step(n);
    for (std::size_t a = 0; a < n; ++a) step[a] = 0.5 * g.spacing(a);
    std::vector<double> trial(n);
    for (int it = 0; it < 400; ++it) {
      bool improved = false;
      for (std::size_t a = 0; a < n && !improved; ++a) {
        for (double dir : {1.0, -1.0}) {
          trial = x;
          trial[a] += dir * step[a];
          if (!region.contains(trial.data())) continue;
          const double v = std::abs(f(trial.data()));
          if (v > value) {
            value = v;
            x = trial;
            improved = true;
            break;
          }
        }
      }
      if (!improved) {
        bool done = true;
        for (std::size_t a = 0; a < n; ++a) {
          step[a] *= 0.5;
          if (step[a] > 1e-12 * g.spacing(a)) done = false;
        }
        if (done) break;
      }
    }
    sup = std::max(sup, value);
  }
  return sup;
}

}  // namespace localstar
