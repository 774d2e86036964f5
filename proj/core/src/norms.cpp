#include "localstar/norms.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "localstar/twisted.hpp"

namespace localstar {

Evaluator orbit_symbol(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q) {
  const std::size_t d = action.rank();
  return [action, a, q, d](const double* v) {
    const Vec vv = Eigen::Map<const Vec>(v, static_cast<Eigen::Index>(d));
    return a(action.orbit_direct(vv, q));
  };
}

namespace {

// The symbol at q sampled on a V-torus that holds its support plus the
// largest twisted shift hbar |Theta| k / T of the basis.
struct SymbolTorus {
  std::size_t d = 0;
  double period = 0.0;
  Vec center;
  Mat theta;
  std::unique_ptr<TwistedConvolution> tc;
  std::vector<Complex> coeffs;
  bool zero = false;
};

Box symbol_window(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q,
                  double threshold) {
  const std::size_t d = action.rank();
  const Mat& e = action.warped_directions();
  if (static_cast<std::size_t>(e.rows()) != d) {
    throw DomainError("norm estimation needs as many generating fields as fibre dimensions");
  }
  Eigen::FullPivLU<Mat> lu(e);
  if (!lu.isInvertible()) throw DomainError("norm estimation needs independent generating fields");
  const Box s = warped_support_box(action, a, threshold);
  if (s.empty()) return Box::empty_box(d);
  const Vec wq = action.fiber().warp(q);
  const Mat inv = lu.inverse();
  Box out{std::vector<double>(d, std::numeric_limits<double>::infinity()),
          std::vector<double>(d, -std::numeric_limits<double>::infinity())};
  for (std::size_t c = 0; c < (std::size_t{1} << d); ++c) {
    Vec y(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      y[static_cast<Eigen::Index>(k)] = ((c >> k) & 1U) ? s.hi[k] : s.lo[k];
    }
    const Vec v = inv * (y - wq);
    for (std::size_t k = 0; k < d; ++k) {
      out.lo[k] = std::min(out.lo[k], v[static_cast<Eigen::Index>(k)]);
      out.hi[k] = std::max(out.hi[k], v[static_cast<Eigen::Index>(k)]);
    }
  }
  return out;
}

SymbolTorus make_symbol_torus(const AdmissibleAction& action, const GriddedFunction& a,
                              const Vec& q, std::size_t points, double max_mode,
                              const NormSettings& settings) {
  SymbolTorus st;
  st.d = action.rank();
  st.theta = action.scaled_theta();
  const Box win = symbol_window(action, a, q, settings.support_threshold);
  if (win.empty()) {
    st.zero = true;
    return st;
  }
  st.center = Vec(static_cast<Eigen::Index>(st.d));
  double extent = 0.0;
  for (std::size_t k = 0; k < st.d; ++k) {
    st.center[static_cast<Eigen::Index>(k)] = 0.5 * (win.lo[k] + win.hi[k]);
    extent = std::max(extent, win.hi[k] - win.lo[k]);
  }
  if (st.d == 2 && extent > 0.0) {
    const double shift = st.theta.norm() * max_mode;
    st.period = 0.5 * (extent + std::sqrt(extent * extent + 4.0 * shift));
  } else {
    st.period = extent;
  }
  st.period = std::max(st.period * 1.05, 1e-6);
  const Mat tw = st.d == 2 ? st.theta : Mat::Zero(1, 1);
  st.tc = std::make_unique<TwistedConvolution>(st.d, points, 0.5 * st.period, tw);
  const Evaluator sym = orbit_symbol(action, a, q);
  std::vector<Complex> samples(st.tc->size());
  for (std::size_t j = 0; j < samples.size(); ++j) {
    double v[2];
    std::size_t flat = j;
    for (std::size_t k = st.d; k-- > 0;) {
      v[k] = st.center[static_cast<Eigen::Index>(k)] + st.tc->coord(flat % points);
      flat /= points;
    }
    samples[j] = sym(v);
  }
  st.coeffs = st.tc->analyze(samples);
  return st;
}

// Modes |k_a| <= half of the basis, as signed multi-indices.
std::vector<std::array<int, 2>> basis_modes(std::size_t d, int half) {
  std::vector<std::array<int, 2>> modes;
  for (int a = -half; a <= half; ++a) {
    if (d == 1) {
      modes.push_back({a, 0});
      continue;
    }
    for (int b = -half; b <= half; ++b) modes.push_back({a, b});
  }
  return modes;
}

std::size_t lattice_index(const TwistedConvolution& tc, const std::array<int, 2>& k) {
  return tc.index(k.data());
}

CMat fourier_matrix(const SymbolTorus& st, const std::vector<std::array<int, 2>>& modes) {
  const std::size_t b = modes.size();
  CMat m(b, b);
  const double t2 = st.period * st.period;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      std::array<int, 2> diff{modes[i][0] - modes[j][0], modes[i][1] - modes[j][1]};
      Complex c = st.coeffs[lattice_index(*st.tc, diff)];
      if (st.d == 2) {
        const double p0 = diff[0], p1 = diff[1], q0 = modes[j][0], q1 = modes[j][1];
        const double form = p0 * (st.theta(0, 0) * q0 + st.theta(0, 1) * q1) +
                            p1 * (st.theta(1, 0) * q0 + st.theta(1, 1) * q1);
        c *= std::polar(1.0, -2.0 * kPi * form / t2);
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
    }
  }
  return m;
}

// Largest eigenvalue of a Hermitian positive operator by Lanczos with full
// reorthogonalisation; the start vector is fixed for reproducibility.
double lanczos_max(const std::function<CVec(const CVec&)>& apply, std::size_t dim, double tol,
                   std::size_t max_steps, bool* converged) {
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  CVec v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(normal(rng), normal(rng));
  v.normalize();
  std::vector<CVec> basis{v};
  std::vector<double> alpha, beta;
  double theta = 0.0;
  const std::size_t steps = std::min(max_steps, dim);
  for (std::size_t j = 0; j < steps; ++j) {
    CVec w = apply(basis[j]);
    alpha.push_back(basis[j].dot(w).real());
    for (int pass = 0; pass < 2; ++pass) {
      for (const CVec& u : basis) w -= u.dot(w) * u;
    }
    const double b = w.norm();
    const Eigen::Index m = static_cast<Eigen::Index>(alpha.size());
    Mat tri = Mat::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      tri(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(tri);
    theta = es.eigenvalues()[m - 1];
    const double resid = b * std::abs(es.eigenvectors()(m - 1, m - 1));
    if (resid <= tol * std::abs(theta) || b <= 1e-14 * std::max(1.0, std::abs(theta))) {
      if (converged) *converged = true;
      return theta;
    }
    beta.push_back(b);
    basis.push_back(w / b);
  }
  if (converged) *converged = steps == dim;
  return theta;
}

double largest_singular_value(const CMat& m) {
  const CMat g = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double fourier_norm(const SymbolTorus& st, std::size_t truncation, const NormSettings& settings,
                    bool* converged) {
  const int half = static_cast<int>(truncation / 2) - 1;
  const auto modes = basis_modes(st.d, half);
  const std::size_t b = modes.size();
  if (b <= 1024) {
    const CMat m = fourier_matrix(st, modes);
    if (b <= settings.dense_limit) {
      if (converged) *converged = true;
      return largest_singular_value(m);
    }
    auto apply = [&](const CVec& x) -> CVec { return m.adjoint() * (m * x); };
    return std::sqrt(std::max(0.0, lanczos_max(apply, b, settings.lanczos_tol,
                                               settings.lanczos_max_steps, converged)));
  }
  // matrix-free: P L_s P and its adjoint P L_{conj s} P through the torus
  std::vector<Complex> conj_coeffs(st.coeffs.size());
  const int mm = st.tc->max_mode();
  for (int k0 = -mm; k0 <= mm; ++k0) {
    for (int k1 = (st.d == 2 ? -mm : 0); k1 <= (st.d == 2 ? mm : 0); ++k1) {
      std::array<int, 2> k{k0, k1}, nk{-k0, -k1};
      conj_coeffs[lattice_index(*st.tc, k)] = std::conj(st.coeffs[lattice_index(*st.tc, nk)]);
    }
  }
  std::vector<std::size_t> slots(b);
  for (std::size_t i = 0; i < b; ++i) slots[i] = lattice_index(*st.tc, modes[i]);
  auto project = [&](const std::vector<Complex>& sym, const CVec& x) {
    std::vector<Complex> full(st.tc->size());
    for (std::size_t i = 0; i < b; ++i) full[slots[i]] = x[static_cast<Eigen::Index>(i)];
    const std::vector<Complex> out = st.tc->convolve(sym, full);
    CVec y(static_cast<Eigen::Index>(b));
    for (std::size_t i = 0; i < b; ++i) y[static_cast<Eigen::Index>(i)] = out[slots[i]];
    return y;
  };
  auto apply = [&](const CVec& x) -> CVec { return project(conj_coeffs, project(st.coeffs, x)); };
  return std::sqrt(std::max(0.0, lanczos_max(apply, b, settings.lanczos_tol,
                                             settings.lanczos_max_steps, converged)));
}

std::vector<double> hermite_functions(int count, double x) {
  std::vector<double> h(static_cast<std::size_t>(count));
  h[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
  if (count > 1) h[1] = std::sqrt(2.0) * x * h[0];
  for (int n = 1; n + 1 < count; ++n) {
    h[static_cast<std::size_t>(n + 1)] =
        std::sqrt(2.0 / (n + 1)) * x * h[static_cast<std::size_t>(n)] -
        std::sqrt(static_cast<double>(n) / (n + 1)) * h[static_cast<std::size_t>(n - 1)];
  }
  return h;
}

double hermite_norm(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q,
                    const NormSettings& settings, double* condition) {
  const std::size_t d = action.rank();
  const int per_axis = static_cast<int>(settings.truncation);
  std::size_t b = 1;
  for (std::size_t k = 0; k < d; ++k) b *= settings.truncation;
  if (b > 1024) throw DomainError("Hermite basis limited to 1024 functions");
  std::size_t points = 32;
  while (points < 4 * settings.truncation) points *= 2;
  const double shift_mode = std::sqrt(2.0 * per_axis + 1.0);
  SymbolTorus st = make_symbol_torus(action, a, q, points, 0.5 * static_cast<double>(points),
                                     settings);
  if (st.zero) return 0.0;
  const double scale = 0.45 * st.period / shift_mode;
  // basis samples and coefficients
  std::vector<std::vector<Complex>> coeffs(b);
  std::vector<std::vector<double>> axis(points);
  for (std::size_t j = 0; j < points; ++j) {
    axis[j] = hermite_functions(per_axis, st.tc->coord(j) / scale);
    for (double& h : axis[j]) h /= std::sqrt(scale);
  }
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t n0 = d == 2 ? i / settings.truncation : i;
    const std::size_t n1 = d == 2 ? i % settings.truncation : 0;
    std::vector<Complex> samples(st.tc->size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const std::size_t j0 = d == 2 ? j / points : j;
      const std::size_t j1 = d == 2 ? j % points : 0;
      samples[j] = axis[j0][n0] * (d == 2 ? axis[j1][n1] : 1.0);
    }
    coeffs[i] = st.tc->analyze(samples);
  }
  const double vol = std::pow(st.period, static_cast<double>(d));
  CMat gram(b, b), m(b, b);
  for (std::size_t j = 0; j < b; ++j) {
    const std::vector<Complex> sj = st.tc->convolve(st.coeffs, coeffs[j]);
    for (std::size_t i = 0; i < b; ++i) {
      Complex g{}, v{};
      for (std::size_t k = 0; k < sj.size(); ++k) {
        g += std::conj(coeffs[i][k]) * coeffs[j][k];
        v += std::conj(coeffs[i][k]) * sj[k];
      }
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vol * g;
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vol * v;
    }
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(gram);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (condition) *condition = cond;
  if (!(cond <= settings.max_condition)) {
    throw InvariantError("Gram matrix positive definite within the conditioning bound",
                         fmt::format("basis Gram condition number {:.3e} exceeds {:.1e}", cond,
                                     settings.max_condition));
  }
  Eigen::LLT<CMat> llt(gram);
  const CMat li = llt.matrixL().solve(CMat::Identity(b, b));
  const CMat whitened = li * m * li.adjoint();
  return largest_singular_value(whitened);
}

}  // namespace

CMat left_operator_matrix(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q,
                          const NormSettings& settings) {
  if (settings.basis != BasisKind::Fourier) {
    throw DomainError("left_operator_matrix is built for the Fourier basis");
  }
  if (settings.truncation < 4 || settings.truncation % 2 != 0) {
    throw DomainError("Fourier truncation must be even and >= 4");
  }
  const std::size_t d = action.rank();
  const int half = static_cast<int>(settings.truncation / 2) - 1;
  const auto modes = basis_modes(d, half);
  if (modes.size() > 4096) throw DomainError("left operator matrix limited to 4096 basis functions");
  if (action.is_fixed_function(a) || !action.moves(q.data())) {
    return a(q) * CMat::Identity(static_cast<Eigen::Index>(modes.size()),
                                 static_cast<Eigen::Index>(modes.size()));
  }
  const SymbolTorus st =
      make_symbol_torus(action, a, q, 2 * settings.truncation,
                        static_cast<double>(settings.truncation / 2), settings);
  if (st.zero) {
    return CMat::Zero(static_cast<Eigen::Index>(modes.size()),
                      static_cast<Eigen::Index>(modes.size()));
  }
  return fourier_matrix(st, modes);
}

double operator_norm_at(const AdmissibleAction& action, const GriddedFunction& a, const Vec& q,
                        const NormSettings& settings, double* gram_condition, bool* converged) {
  if (gram_condition) *gram_condition = 1.0;
  if (converged) *converged = true;
  if (action.is_fixed_function(a) || !action.moves(q.data())) return std::abs(a(q));
  if (settings.basis == BasisKind::Hermite) {
    return hermite_norm(action, a, q, settings, gram_condition);
  }
  if (settings.truncation < 4 || settings.truncation % 2 != 0) {
    throw DomainError("Fourier truncation must be even and >= 4");
  }
  const SymbolTorus st =
      make_symbol_torus(action, a, q, 2 * settings.truncation,
                        static_cast<double>(settings.truncation / 2), settings);
  if (st.zero) return 0.0;
  return fourier_norm(st, settings.truncation, settings, converged);
}

SeminormEstimate deformed_seminorm(const AdmissibleAction& action, const GriddedFunction& a,
                                   const Box& L, const NormSettings& settings) {
  if (L.dim() != a.dim()) throw DomainError("compactum has the wrong dimension");
  SeminormEstimate est;
  const Grid& grid = a.grid();
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x.data());
    if (!L.contains(x.data()) || action.moves(x.data())) continue;
    est.fixed_part = std::max(est.fixed_part, std::abs(a.values()[i]));
  }
  est.basis_size = 1;
  const std::size_t per_axis =
      settings.basis == BasisKind::Fourier ? settings.truncation - 1 : settings.truncation;
  for (std::size_t k = 0; k < action.rank(); ++k) est.basis_size *= per_axis;

  // q samples on the lattice of L cap box(K)
  const Box k = action.support_box();
  if (!k.empty() && !L.empty()) {
    const std::size_t n = L.dim();
    Box meet{std::vector<double>(n), std::vector<double>(n)};
    bool ok = true;
    for (std::size_t a2 = 0; a2 < n; ++a2) {
      meet.lo[a2] = std::max(L.lo[a2], k.lo[a2]);
      meet.hi[a2] = std::min(L.hi[a2], k.hi[a2]);
      ok = ok && meet.lo[a2] <= meet.hi[a2];
    }
    if (ok) {
      const std::size_t m = std::max<std::size_t>(settings.q_samples, 1);
      std::vector<Vec> qs;
      std::size_t total = 1;
      for (std::size_t a2 = 0; a2 < n; ++a2) total *= m;
      for (std::size_t t = 0; t < total; ++t) {
        Vec q(static_cast<Eigen::Index>(n));
        std::size_t flat = t;
        for (std::size_t a2 = 0; a2 < n; ++a2) {
          const std::size_t j = flat % m;
          flat /= m;
          const double frac = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
          q[static_cast<Eigen::Index>(a2)] = meet.lo[a2] + frac * (meet.hi[a2] - meet.lo[a2]);
        }
        if (action.moves(q.data())) qs.push_back(q);
      }
      if (qs.empty()) {
        Vec c(static_cast<Eigen::Index>(n));
        for (std::size_t a2 = 0; a2 < n; ++a2) c[static_cast<Eigen::Index>(a2)] = 0.5 * (meet.lo[a2] + meet.hi[a2]);
        if (action.moves(c.data())) qs.push_back(c);
      }
      for (const Vec& q : qs) {
        double cond = 1.0;
        bool conv = true;
        const double v = operator_norm_at(action, a, q, settings, &cond, &conv);
        est.operator_part = std::max(est.operator_part, v);
        est.gram_condition = std::max(est.gram_condition, cond);
        est.converged = est.converged && conv;
      }
      est.sampled_points = qs.size();
    }
  }
  est.value = std::max(est.fixed_part, est.operator_part);
  return est;
}

std::vector<SeminormEstimate> truncation_curve(const AdmissibleAction& action,
                                               const GriddedFunction& a, const Box& L,
                                               const std::vector<std::size_t>& truncations,
                                               NormSettings settings) {
  std::vector<SeminormEstimate> out;
  for (std::size_t t : truncations) {
    settings.truncation = t;
    out.push_back(deformed_seminorm(action, a, L, settings));
  }
  return out;
}

double cstar_identity_residual(const ProductEngine& engine, const GriddedFunction& a,
                               const Box& L, const NormSettings& settings) {
  const AdmissibleAction& action = engine.action();
  const double n1 = deformed_seminorm(action, a, L, settings).value;
  if (!(n1 * n1 > 1e-12)) throw DomainError("C*-identity check needs a non-degenerate seminorm");
  const GriddedFunction aa = engine.deformed_product(a.conj(), a);
  const double n2 = deformed_seminorm(action, aa, L, settings).value;
  return std::abs(n2 - n1 * n1) / (n1 * n1);
}

double restriction_compatibility(const AdmissibleAction& action, const GriddedFunction& a,
                                 const Box& L, const Box& L_outer, const NormSettings& settings) {
  if (!L_outer.contains(L)) throw DomainError("restriction needs L inside L'");
  if (L.lo == L_outer.lo && L.hi == L_outer.hi) return 0.0;
  const Grid& grid = a.grid();
  std::vector<Complex> values(a.values());
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x.data());
    if (!L_outer.contains(x.data())) values[i] = Complex{};
  }
  const GriddedFunction base = a;
  const Box outer = L_outer;
  Evaluator e = [base, outer](const double* p) {
    return outer.contains(p) ? base(p) : Complex{};
  };
  const GriddedFunction cut = GriddedFunction::assemble(grid, std::move(values), std::move(e),
                                                        a.provenance(), std::nullopt, std::nullopt);
  const double inner = deformed_seminorm(action, cut, L, settings).value;
  const double full = deformed_seminorm(action, a, L, settings).value;
  return std::abs(inner - full);
}

double submultiplicativity_excess(const ProductEngine& engine, const GriddedFunction& a,
                                  const GriddedFunction& b, const Box& L,
                                  const NormSettings& settings) {
  const AdmissibleAction& action = engine.action();
  const double na = deformed_seminorm(action, a, L, settings).value;
  const double nb = deformed_seminorm(action, b, L, settings).value;
  const double nab = deformed_seminorm(action, engine.deformed_product(a, b), L, settings).value;
  return std::max(0.0, nab - na * nb);
}

}  // namespace localstar
