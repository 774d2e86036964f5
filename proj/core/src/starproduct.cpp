#include "localstar/starproduct.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "localstar/parallel.hpp"

namespace localstar {

struct ProductEngine::State {
  AdmissibleAction action;
  EngineSettings settings;
  std::unique_ptr<TwistedConvolution> core;
  bool pointwise = false;
  std::vector<Vec> torus_x;  // unwarped torus grid points
  std::vector<char> band;    // edge-band mask on the torus grid

  State(AdmissibleAction a, EngineSettings s) : action(std::move(a)), settings(s) {}
};

namespace {

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(1.0 / s - 1.0 / (1.0 - s)));
}

// Flat torus index -> warped point.
Vec torus_point(const TwistedConvolution& tc, std::size_t flat) {
  const std::size_t n = tc.dim();
  Vec w(static_cast<Eigen::Index>(n));
  for (std::size_t a = n; a-- > 0;) {
    w[static_cast<Eigen::Index>(a)] = tc.coord(flat % tc.points());
    flat /= tc.points();
  }
  return w;
}

}  // namespace

ProductEngine::ProductEngine(AdmissibleAction action, EngineSettings settings) {
  if (settings.torus_points < 8 || settings.torus_points % 2 != 0) {
    throw DomainError("engine torus points must be even and >= 8");
  }
  if (!(settings.torus_half_width > 0.5)) {
    throw DomainError("engine torus half-width must exceed the identity radius 1/2");
  }
  if (!(settings.edge_band > 0.0 && settings.edge_band < 0.5)) {
    throw DomainError("engine edge band must lie in (0, 1/2)");
  }
  auto st = std::make_shared<State>(std::move(action), settings);
  const Mat& tw = st->action.warped_theta();
  st->pointwise = st->action.trivial() || tw.isZero(0.0);
  if (!st->pointwise) {
    const std::size_t n = st->action.fiber_dim();
    st->core = std::make_unique<TwistedConvolution>(n, settings.torus_points,
                                                    settings.torus_half_width, tw);
    const std::size_t total = st->core->size();
    st->torus_x.resize(total);
    st->band.resize(total);
    const double inner = settings.torus_half_width * (1.0 - settings.edge_band);
    for (std::size_t j = 0; j < total; ++j) {
      const Vec w = torus_point(*st->core, j);
      st->torus_x[j] = st->action.fiber().unwarp(w);
      st->band[j] = w.cwiseAbs().maxCoeff() >= inner;
    }
  }
  state_ = std::move(st);
}

const AdmissibleAction& ProductEngine::action() const { return state_->action; }
const EngineSettings& ProductEngine::settings() const { return state_->settings; }
const TwistedConvolution* ProductEngine::core() const { return state_->core.get(); }

double ProductEngine::invariant_cutoff(const double* x) const {
  if (state_->action.trivial()) return 0.0;
  const double r = std::sqrt(state_->action.fiber().h_norm_squared(x));
  return 1.0 - smooth_step((r - 1.0) / 0.25);
}

GriddedFunction ProductEngine::invariant_cutoff(const Grid& grid) const {
  auto st = state_;
  const ProductEngine self = *this;
  Evaluator e = [self](const double* x) { return Complex(self.invariant_cutoff(x), 0.0); };
  return GriddedFunction::from_closed_form(grid, e);
}

double ProductEngine::edge_ratio(const std::vector<Complex>& s) const {
  double all = 0.0, edge = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double m = std::abs(s[j]);
    all = std::max(all, m);
    if (state_->band[j]) edge = std::max(edge, m);
  }
  return all > 0.0 ? edge / all : 0.0;
}

namespace {

// Smallest half-width (growing by 25%) whose edge band carries relative
// mass below tol, probed on the boundary of the cube.
double required_half_width(const AdmissibleAction& action, const GriddedFunction& f, double H,
                           double band, double tol, double global_max) {
  const std::size_t n = action.fiber_dim();
  const int probes = 256;
  double h = H;
  for (int k = 0; k < 80; ++k) {
    h *= 1.25;
    const double r = h * (1.0 - band);
    double edge = 0.0;
    if (n == 1) {
      for (double s : {-r, r}) {
        Vec w(1);
        w[0] = s;
        const Vec x = action.fiber().unwarp(w);
        edge = std::max(edge, std::abs(f(x.data())));
      }
    } else {
      for (int side = 0; side < 2 * static_cast<int>(n); ++side) {
        for (int j = 0; j <= probes; ++j) {
          Vec w = Vec::Zero(static_cast<Eigen::Index>(n));
          const std::size_t axis = static_cast<std::size_t>(side / 2);
          w[static_cast<Eigen::Index>(axis)] = (side % 2 == 0) ? -r : r;
          const std::size_t other = (axis + 1) % n;
          w[static_cast<Eigen::Index>(other)] = -r + 2.0 * r * j / probes;
          const Vec x = action.fiber().unwarp(w);
          edge = std::max(edge, std::abs(f(x.data())));
        }
      }
    }
    if (edge <= tol * global_max) return h;
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<Complex> ProductEngine::warp(const GriddedFunction& f) const {
  const State& st = *state_;
  if (!st.core) throw DomainError("warp: the engine has no spectral core (pointwise products)");
  if (f.spectral_tag() && f.spectral_tag()->owner == &st) return *f.spectral_tag()->coefficients;
  std::vector<Complex> samples(st.torus_x.size());
  parallel_for(samples.size(), [&](std::size_t j) { samples[j] = f(st.torus_x[j].data()); });
  const double ratio = edge_ratio(samples);
  if (ratio > st.settings.edge_tolerance) {
    double all = 0.0;
    for (const auto& s : samples) all = std::max(all, std::abs(s));
    const double need = required_half_width(st.action, f, st.settings.torus_half_width,
                                            st.settings.edge_band, st.settings.edge_tolerance, all);
    const std::string hint =
        std::isfinite(need)
            ? fmt::format("half-width {} needed, {} configured", need, st.settings.torus_half_width)
            : std::string("the input does not decay inside the unit h-ball; no half-width suffices");
    throw MarginOverflow(fmt::format("warped input reaches the torus edge band (ratio {:.3e} > "
                                     "{:.1e}); {}",
                                     ratio, st.settings.edge_tolerance, hint),
                         ratio, need);
  }
  return st.core->analyze(samples);
}

bool is_fixed_for(const ProductEngine& engine, const GriddedFunction& f) {
  return engine.action().is_fixed_function(f);
}

GriddedFunction ProductEngine::deformed_product(const GriddedFunction& f,
                                                const GriddedFunction& g) const {
  const State& st = *state_;
  const std::size_t n = st.action.fiber_dim();
  if (f.dim() != n || g.dim() != n) throw DomainError("product inputs live on the wrong fibre");
  if (f.grid() != g.grid()) throw DomainError("product inputs must share a grid");
  if (!f.grid().box().contains(st.action.support_box())) {
    throw DomainError("product inputs must be defined on a domain covering K");
  }
  if (st.pointwise || st.action.is_fixed_function(f) || st.action.is_fixed_function(g)) {
    return pointwise_product(f, g);
  }

  const std::vector<Complex> A = warp(f);
  const std::vector<Complex> B = warp(g);
  auto C = std::make_shared<const std::vector<Complex>>(st.core->convolve(A, B));
  const std::vector<Complex> out_samples = st.core->synthesize(*C);
  const double ratio = edge_ratio(out_samples);
  if (ratio > st.settings.edge_tolerance) {
    throw MarginOverflow(
        fmt::format("product spreads into the torus edge band (ratio {:.3e} > {:.1e}); "
                    "increase the half-width beyond {}",
                    ratio, st.settings.edge_tolerance, st.settings.torus_half_width),
        ratio, 1.5 * st.settings.torus_half_width);
  }

  std::shared_ptr<const State> keep = state_;
  const double H = st.settings.torus_half_width;
  Evaluator e = [keep, C, f, g, H](const double* x) -> Complex {
    if (!keep->action.moves(x)) return f(x) * g(x);
    const Vec xv = Eigen::Map<const Vec>(x, static_cast<Eigen::Index>(keep->action.fiber_dim()));
    const Vec w = keep->action.fiber().warp(xv);
    for (Eigen::Index a = 0; a < w.size(); ++a) {
      if (!(std::abs(w[a]) < H)) return Complex{};
    }
    return keep->core->evaluate(*C, w.data());
  };

  const Grid& grid = f.grid();
  std::vector<Complex> values(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    std::vector<double> x(n);
    grid.point(i, x.data());
    values[i] = st.action.moves(x.data()) ? e(x.data()) : f.values()[i] * g.values()[i];
  });
  return GriddedFunction::assemble(grid, std::move(values), std::move(e), Provenance::Product,
                                   std::nullopt, SpectralTag{&st, C});
}

// ---------------------------------------------------------------------------
// Oscillatory-integral oracle

namespace {

struct Window {
  std::vector<double> lo, hi;
  bool empty = false;
};

// Regulated integrals at eps_j for one point; returns the Richardson
// diagonal T_{j,j}.
std::vector<Complex> regulated_levels(std::size_t d,
                                      const std::function<Complex(const double*)>& A,
                                      const std::function<Complex(const double*)>& B,
                                      const Window& uw, const Window& vw,
                                      const std::vector<double>& band_a,
                                      const std::vector<double>& band_b,
                                      const std::vector<double>& eps, double decay,
                                      const OracleSettings& s) {
  const double eps_max = eps.front();
  const double b_reg = std::sqrt(eps_max * std::log(1.0 / decay) / kPi);
  std::vector<std::vector<double>> ug(d), vg(d);
  auto axis_grid = [&](double lo, double hi, double step) {
    std::size_t count = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
    count = std::max<std::size_t>(count, 2);
    if (count > s.max_points_per_axis) {
      throw Error(fmt::format("oracle grid needs {} points per axis (limit {})", count,
                              s.max_points_per_axis));
    }
    std::vector<double> g(count);
    for (std::size_t j = 0; j < count; ++j) {
      g[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
    }
    return g;
  };
  for (std::size_t a = 0; a < d; ++a) {
    const double vmax = std::max(std::abs(vw.lo[a]), std::abs(vw.hi[a]));
    const double umax = std::max(std::abs(uw.lo[a]), std::abs(uw.hi[a]));
    ug[a] = axis_grid(uw.lo[a], uw.hi[a], s.spacing_factor / (band_a[a] + vmax + b_reg));
    vg[a] = axis_grid(vw.lo[a], vw.hi[a], s.spacing_factor / (band_b[a] + umax + b_reg));
  }
  double du = 1.0, dv = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    du *= ug[a][1] - ug[a][0];
    dv *= vg[a][1] - vg[a][0];
  }

  // raw samples
  const std::size_t nu0 = ug[0].size(), nv0 = vg[0].size();
  const std::size_t nu1 = d == 2 ? ug[1].size() : 1, nv1 = d == 2 ? vg[1].size() : 1;
  CMat a_raw(nu0, nu1), b_raw(nv0, nv1);
  Mat u_sq(nu0, nu1), v_sq(nv0, nv1);
  double pt[2];
  for (std::size_t i = 0; i < nu0; ++i) {
    for (std::size_t j = 0; j < nu1; ++j) {
      pt[0] = ug[0][i];
      if (d == 2) pt[1] = ug[1][j];
      a_raw(i, j) = A(pt);
      u_sq(i, j) = pt[0] * pt[0] + (d == 2 ? pt[1] * pt[1] : 0.0);
    }
  }
  for (std::size_t i = 0; i < nv0; ++i) {
    for (std::size_t j = 0; j < nv1; ++j) {
      pt[0] = vg[0][i];
      if (d == 2) pt[1] = vg[1][j];
      b_raw(i, j) = B(pt);
      v_sq(i, j) = pt[0] * pt[0] + (d == 2 ? pt[1] * pt[1] : 0.0);
    }
  }
  auto kernel = [](const std::vector<double>& u, const std::vector<double>& v) {
    CMat e(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        e(i, j) = std::polar(1.0, 2.0 * kPi * u[i] * v[j]);
      }
    }
    return e;
  };
  const CMat e0 = kernel(ug[0], vg[0]);
  const CMat e1 = d == 2 ? kernel(ug[1], vg[1]) : CMat::Ones(1, 1);

  std::vector<Complex> level(eps.size());
  for (std::size_t l = 0; l < eps.size(); ++l) {
    const double ep = eps[l];
    const CMat a = a_raw.array() * (-kPi * ep * u_sq.array()).exp().cast<Complex>();
    const CMat b = b_raw.array() * (-kPi * ep * v_sq.array()).exp().cast<Complex>();
    // bhat(u) = sum_v b(v) e^{2 pi i u.v}
    const CMat t1 = b * e1.transpose();  // nv0 x nu1
    const CMat bhat = e0 * t1;           // nu0 x nu1
    level[l] = (a.array() * bhat.array()).sum() * du * dv;
  }
  // Richardson in eps with ratio 2
  std::vector<std::vector<Complex>> T(eps.size());
  std::vector<Complex> diag(eps.size());
  for (std::size_t j = 0; j < eps.size(); ++j) {
    T[j].resize(j + 1);
    T[j][0] = level[j];
    for (std::size_t k = 1; k <= j; ++k) {
      const double f = std::ldexp(1.0, static_cast<int>(k)) - 1.0;
      T[j][k] = T[j][k - 1] + (T[j][k - 1] - T[j - 1][k - 1]) / f;
    }
    diag[j] = T[j][j];
  }
  return diag;
}

// Bounding box of the warped points where |f| exceeds the threshold.
Window warped_support(const AdmissibleAction& action, const GriddedFunction& f, double rel) {
  const std::size_t n = action.fiber_dim();
  Window w;
  w.lo.assign(n, std::numeric_limits<double>::infinity());
  w.hi.assign(n, -std::numeric_limits<double>::infinity());
  const double thr = rel * f.sup_abs();
  const Grid& g = f.grid();
  double h = 0.0;
  for (std::size_t a = 0; a < n; ++a) h = std::max(h, g.spacing(a));
  const double lnorm = action.fiber().cholesky().norm();
  const auto& profile = action.fiber().psi().profile();
  bool any = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(std::abs(f.values()[i]) > thr)) continue;
    const Vec x = g.point(i);
    const double r2 = action.fiber().h_norm_squared(x);
    if (!(r2 < 1.0)) continue;
    const Vec wx = action.fiber().warp(x);
    const double stretch = profile.derivative(std::sqrt(r2));
    const double pad = 2.0 * h * lnorm * std::max(1.0, stretch);
    if (!std::isfinite(pad) || !wx.allFinite()) continue;
    any = true;
    for (std::size_t a = 0; a < n; ++a) {
      w.lo[a] = std::min(w.lo[a], wx[static_cast<Eigen::Index>(a)] - pad);
      w.hi[a] = std::max(w.hi[a], wx[static_cast<Eigen::Index>(a)] + pad);
    }
  }
  w.empty = !any;
  return w;
}

// Bounding box of {u : M u + shift in box} through the pseudo-inverse of M.
Window preimage_window(const Mat& M, const Window& box, const Vec& shift) {
  const std::size_t n = static_cast<std::size_t>(M.rows());
  const std::size_t d = static_cast<std::size_t>(M.cols());
  const Mat pinv = M.completeOrthogonalDecomposition().pseudoInverse();
  Window w;
  w.lo.assign(d, std::numeric_limits<double>::infinity());
  w.hi.assign(d, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < (std::size_t{1} << n); ++c) {
    Vec y(static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
      y[static_cast<Eigen::Index>(a)] = ((c >> a) & 1U) ? box.hi[a] : box.lo[a];
    }
    const Vec u = pinv * (y - shift);
    for (std::size_t a = 0; a < d; ++a) {
      w.lo[a] = std::min(w.lo[a], u[static_cast<Eigen::Index>(a)]);
      w.hi[a] = std::max(w.hi[a], u[static_cast<Eigen::Index>(a)]);
    }
  }
  return w;
}

bool full_column_rank(const Mat& M) {
  if (M.cols() > M.rows()) return false;
  Eigen::JacobiSVD<Mat> svd(M);
  const auto& s = svd.singularValues();
  return s.size() > 0 && s.minCoeff() > 1e-12 * std::max(1.0, s.maxCoeff());
}

Window cube_window(std::size_t d, double r) {
  Window w;
  w.lo.assign(d, -r);
  w.hi.assign(d, r);
  return w;
}

double window_radius(const Window& w) {
  double r2 = 0.0;
  for (std::size_t a = 0; a < w.lo.size(); ++a) {
    const double m = std::max(std::abs(w.lo[a]), std::abs(w.hi[a]));
    r2 += m * m;
  }
  return std::sqrt(r2);
}

std::vector<double> eps_levels(double eps0, int steps) {
  std::vector<double> e(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) e[static_cast<std::size_t>(j)] = std::ldexp(eps0, -j);
  return e;
}

void record_trend(std::vector<double>& trend, const std::vector<Complex>& diag) {
  if (trend.size() < diag.size()) trend.resize(diag.size(), 0.0);
  for (std::size_t j = 1; j < diag.size(); ++j) {
    trend[j] = std::max(trend[j], std::abs(diag[j] - diag[j - 1]));
  }
}

}  // namespace

OracleResult oscillatory_quadrature(const AdmissibleAction& action, const GriddedFunction& f,
                                    const GriddedFunction& g, const std::vector<Vec>& points,
                                    const OracleSettings& settings) {
  const std::size_t d = action.rank();
  if (d == 0 || d > 2) throw DomainError("oracle supports 1 or 2 generating fields");
  if (settings.extrapolation_steps < 0) throw DomainError("negative extrapolation steps");
  OracleResult out;
  out.values.resize(points.size());
  out.residual_trend.assign(static_cast<std::size_t>(settings.extrapolation_steps) + 1, 0.0);
  if (action.trivial()) {
    for (std::size_t k = 0; k < points.size(); ++k) out.values[k] = f(points[k]) * g(points[k]);
    return out;
  }
  const Mat ma = action.warped_directions() * action.scaled_theta();
  const Mat mb = action.warped_directions();
  const bool inj_a = full_column_rank(ma);
  const bool inj_b = full_column_rank(mb);
  const Window sf = warped_support(action, f, settings.support_threshold);
  const Window sg = warped_support(action, g, settings.support_threshold);

  // bandwidth of the samples' grid, carried to warped coordinates
  double hx = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < f.dim(); ++a) hx = std::min(hx, f.grid().spacing(a));
  const double bw = 0.5 / hx * action.fiber().cholesky().inverse().norm();
  std::vector<double> band_a(d), band_b(d);
  for (std::size_t a = 0; a < d; ++a) {
    band_a[a] = bw * ma.col(static_cast<Eigen::Index>(a)).norm();
    band_b[a] = bw * mb.col(static_cast<Eigen::Index>(a)).norm();
  }
  const double decay = 1e-14;
  const Mat scaled = action.scaled_theta();

  std::vector<std::vector<Complex>> diags(points.size());
  parallel_for(points.size(), [&](std::size_t k) {
    const Vec& x = points[k];
    if (!action.moves(x.data())) {
      out.values[k] = f(x) * g(x);
      return;
    }
    if (sf.empty || sg.empty) {
      out.values[k] = Complex{};
      return;
    }
    const Vec wx = action.fiber().warp(x);
    double eps0 = settings.epsilon0;
    Window uw, vw;
    if (inj_a && inj_b) {
      uw = preimage_window(ma, sf, wx);
      vw = preimage_window(mb, sg, wx);
      if (eps0 <= 0.0) {
        const double U = window_radius(uw), V = window_radius(vw);
        eps0 = 0.05 / (kPi * (U * U + V * V));
      }
    } else {
      if (eps0 <= 0.0) eps0 = 0.05;
      const double eps_min = std::ldexp(eps0, -settings.extrapolation_steps);
      const double r = std::sqrt(std::log(1.0 / decay) / (kPi * eps_min));
      uw = inj_a ? preimage_window(ma, sf, wx) : cube_window(d, r);
      vw = inj_b ? preimage_window(mb, sg, wx) : cube_window(d, r);
    }
    const std::vector<double> eps = eps_levels(eps0, settings.extrapolation_steps);
    auto A = [&](const double* u) {
      const Vec uv = Eigen::Map<const Vec>(u, static_cast<Eigen::Index>(d));
      const Vec y = action.orbit(scaled * uv, x);
      return f(y);
    };
    auto B = [&](const double* v) {
      const Vec vv = Eigen::Map<const Vec>(v, static_cast<Eigen::Index>(d));
      const Vec y = action.orbit(vv, x);
      return g(y);
    };
    diags[k] = regulated_levels(d, A, B, uw, vw, band_a, band_b, eps, decay, settings);
    out.values[k] = diags[k].back();
  });
  for (const auto& dg : diags) {
    if (!dg.empty()) record_trend(out.residual_trend, dg);
  }
  return out;
}

OracleResult oscillatory_quadrature_translation(const std::function<Complex(const double*)>& F,
                                                const std::function<Complex(const double*)>& G,
                                                double bandwidth, const Mat& theta,
                                                const std::vector<Vec>& points,
                                                const OracleSettings& settings) {
  const std::size_t d = static_cast<std::size_t>(theta.rows());
  if (d == 0 || d > 2) throw DomainError("translation oracle supports 1 or 2 axes");
  require_skew(theta, "Theta");
  const double eps0 = settings.epsilon0 > 0.0 ? settings.epsilon0 : 0.4;
  const double decay = 1e-10;
  const double eps_min = std::ldexp(eps0, -settings.extrapolation_steps);
  const double r = std::sqrt(std::log(1.0 / decay) / (kPi * eps_min));
  const std::vector<double> eps = eps_levels(eps0, settings.extrapolation_steps);
  std::vector<double> band_a(d), band_b(d, bandwidth);
  for (std::size_t a = 0; a < d; ++a) {
    band_a[a] = bandwidth * theta.col(static_cast<Eigen::Index>(a)).norm();
  }
  const Window w = cube_window(d, r);
  OracleResult out;
  out.values.resize(points.size());
  out.residual_trend.assign(eps.size(), 0.0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vec& x = points[k];
    auto A = [&](const double* u) {
      const Vec y = x + theta * Eigen::Map<const Vec>(u, static_cast<Eigen::Index>(d));
      return F(y.data());
    };
    auto B = [&](const double* v) {
      const Vec y = x + Eigen::Map<const Vec>(v, static_cast<Eigen::Index>(d));
      return G(y.data());
    };
    const auto diag = regulated_levels(d, A, B, w, w, band_a, band_b, eps, decay, settings);
    record_trend(out.residual_trend, diag);
    out.values[k] = diag.back();
  }
  return out;
}

Box warped_support_box(const AdmissibleAction& action, const GriddedFunction& f,
                       double rel_threshold) {
  const Window w = warped_support(action, f, rel_threshold);
  if (w.empty) return Box::empty_box(action.fiber_dim());
  return Box{w.lo, w.hi};
}

// ---------------------------------------------------------------------------
// Checks

InclusionReport support_inclusion_check(const ProductEngine& engine, const GriddedFunction& f,
                                        const GriddedFunction& g, double threshold) {
  const GriddedFunction fg = engine.deformed_product(f, g);
  InclusionReport rep;
  const Grid& grid = fg.grid();
  const AdmissibleAction& act = engine.action();
  std::vector<double> x(grid.dim());
  // one grid step of slack for sample-based support boxes
  double step = 0.0;
  for (std::size_t a = 0; a < grid.dim(); ++a) step = std::max(step, grid.spacing(a));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double m = std::abs(fg.values()[i]);
    if (!(m > threshold)) continue;
    grid.point(i, x.data());
    const bool in_both = f.support().contains(x.data(), step) && g.support().contains(x.data(), step);
    if (in_both || act.in_support(x.data())) continue;
    rep.holds = false;
    rep.largest_offending = std::max(rep.largest_offending, m);
    if (rep.offending.size() < 16) rep.offending.push_back(grid.point(i));
  }
  return rep;
}

double delta_state_residual(const ProductEngine& engine, const Vec& q, const GriddedFunction& f,
                            const GriddedFunction& g) {
  const AdmissibleAction& act = engine.action();
  if (act.moves(q.data())) {
    for (std::size_t i = 0; i < act.rank(); ++i) {
      if (!act.field(i, q).isZero(0.0)) {
        throw DomainError(fmt::format("delta state needs a point where every field vanishes; "
                                      "field {} is non-zero there",
                                      i + 1));
      }
    }
  }
  const GriddedFunction fg = engine.deformed_product(f, g);
  return std::abs(fg(q) - f(q) * g(q));
}

Complex field_derivative(const AdmissibleAction& action, std::size_t j, const GriddedFunction& f,
                         const Vec& x, double step) {
  if (!action.moves(x.data())) return Complex{};
  auto at = [&](double t) { return f(action.flow(j, t, x)); };
  return (-at(2 * step) + 8.0 * at(step) - 8.0 * at(-step) + at(-2 * step)) / (12.0 * step);
}

Complex derive_semiclassical_constant() {
  // plane waves e_p, e_q on a 16-point torus of period 1 with Theta = hbar J;
  // the ratio carries an hbar^2 error, removed by one Richardson step
  Mat J(2, 2);
  J << 0.0, 1.0, -1.0, 0.0;
  const int p[2] = {2, -1};
  const int q[2] = {1, 3};
  const int k[2] = {p[0] + q[0], p[1] + q[1]};
  // X_j e_p = 2 pi i p_j e_p on a unit-period torus; sum Theta^{jk} p_j q_k
  const double bracket = p[0] * q[1] - p[1] * q[0];
  const Complex poisson = std::pow(2.0 * kPi * Complex(0, 1), 2) * bracket;
  auto ratio = [&](double hbar) {
    const TwistedConvolution tc(2, 16, 0.5, hbar * J);
    std::vector<Complex> ep(tc.size()), eq(tc.size());
    ep[tc.index(p)] = 1.0;
    eq[tc.index(q)] = 1.0;
    const Complex pq = tc.convolve(ep, eq)[tc.index(k)];
    const Complex qp = tc.convolve(eq, ep)[tc.index(k)];
    return (pq - qp) / hbar / poisson;
  };
  const double hbar = 1e-4;
  return (4.0 * ratio(0.5 * hbar) - ratio(hbar)) / 3.0;
}

double semiclassical_residual(const ProductEngine& engine, const GriddedFunction& f,
                              const GriddedFunction& g, Complex c) {
  const AdmissibleAction& act = engine.action();
  const double hbar = act.hbar();
  if (!(hbar > 0.0)) return 0.0;
  const GriddedFunction fg = engine.deformed_product(f, g);
  const GriddedFunction gf = engine.deformed_product(g, f);
  const Grid& grid = f.grid();
  const Mat& theta = act.theta();
  const std::size_t d = act.rank();
  std::vector<double> worst(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    const Vec x = grid.point(i);
    const Complex comm = (fg.values()[i] - gf.values()[i]) / hbar;
    Complex bracket{};
    if (act.moves(x.data())) {
      std::vector<Complex> xf(d), xg(d);
      for (std::size_t j = 0; j < d; ++j) {
        xf[j] = field_derivative(act, j, f, x);
        xg[j] = field_derivative(act, j, g, x);
      }
      for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 0; k < d; ++k) {
          bracket += theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * xf[j] * xg[k];
        }
      }
    }
    worst[i] = std::abs(comm - c * bracket);
  });
  return *std::max_element(worst.begin(), worst.end());
}

double associativity_residual(const ProductEngine& engine, const GriddedFunction& f,
                              const GriddedFunction& g, const GriddedFunction& h) {
  const GriddedFunction left = engine.deformed_product(engine.deformed_product(f, g), h);
  const GriddedFunction right = engine.deformed_product(f, engine.deformed_product(g, h));
  const double scale = right.sup_abs();
  return scale > 0.0 ? max_abs_difference(left, right) / scale : max_abs_difference(left, right);
}

double involution_residual(const ProductEngine& engine, const GriddedFunction& f,
                           const GriddedFunction& g) {
  const GriddedFunction fg = engine.deformed_product(f, g);
  const GriddedFunction rhs = engine.deformed_product(g.conj(), f.conj());
  const GriddedFunction lhs = fg.conj();
  const double scale = fg.sup_abs();
  const double diff = max_abs_difference(lhs, rhs);
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace localstar
