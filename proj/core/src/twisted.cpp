#include "localstar/twisted.hpp"

#include <cmath>
#include <mutex>

#include <fftw3.h>
#include <fmt/format.h>

#include "localstar/parallel.hpp"

namespace localstar {

namespace {

// FFTW's planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

fftw_plan make_plan(const std::vector<int>& dims, int sign) {
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<Complex> in(total), out(total);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), as_fftw(in.data()),
                              as_fftw(out.data()), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p == nullptr) throw Error("FFTW planning failed");
  return p;
}

inline long wrap(long k, long n) {
  k %= n;
  return k < 0 ? k + n : k;
}

}  // namespace

struct TwistedConvolution::Plans {
  fftw_plan full_fwd = nullptr;
  fftw_plan full_bwd = nullptr;
  fftw_plan pad_fwd = nullptr;
  fftw_plan pad_bwd = nullptr;
  fftw_plan line_fwd = nullptr;
  fftw_plan line_bwd = nullptr;

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (fftw_plan p : {full_fwd, full_bwd, pad_fwd, pad_bwd, line_fwd, line_bwd}) {
      if (p != nullptr) fftw_destroy_plan(p);
    }
  }
};

TwistedConvolution::TwistedConvolution(std::size_t dim, std::size_t points, double half_width,
                                       const Mat& theta)
    : dim_(dim), n_(points), half_width_(half_width), theta_(theta) {
  if (dim == 0 || dim > 3) throw DomainError("torus dimension must be 1, 2 or 3");
  if (points < 4 || points % 2 != 0) throw DomainError("torus points per axis must be even, >= 4");
  if (!(half_width > 0.0)) throw DomainError("torus half-width must be positive");
  if (theta.rows() != static_cast<Eigen::Index>(dim) || theta.cols() != theta.rows()) {
    throw DomainError("torus Theta has the wrong shape");
  }
  const bool twisted = !theta.isZero(0.0);
  if (twisted && dim != 2) {
    throw DomainError(fmt::format("twisted convolution is implemented for 2 torus axes, got {}", dim));
  }
  total_ = 1;
  for (std::size_t a = 0; a < dim; ++a) total_ *= n_;

  plans_ = std::make_unique<Plans>();
  const std::vector<int> full(dim, static_cast<int>(n_));
  plans_->full_fwd = make_plan(full, FFTW_FORWARD);
  plans_->full_bwd = make_plan(full, FFTW_BACKWARD);
  if (twisted) {
    plans_->line_fwd = make_plan({static_cast<int>(2 * n_)}, FFTW_FORWARD);
    plans_->line_bwd = make_plan({static_cast<int>(2 * n_)}, FFTW_BACKWARD);
    const int K = max_mode();
    const double tp = theta(0, 1) / (period() * period());
    const std::size_t side = static_cast<std::size_t>(2 * K + 1);
    phase_.resize(side * side);
    for (int m = -K; m <= K; ++m) {
      for (int p = -K; p <= K; ++p) {
        const double turns = std::fmod(tp * static_cast<double>(m) * static_cast<double>(p), 1.0);
        phase_[static_cast<std::size_t>(m + K) * side + static_cast<std::size_t>(p + K)] =
            std::polar(1.0, 2.0 * kPi * turns);
      }
    }
  } else {
    const std::vector<int> pad(dim, static_cast<int>(2 * n_));
    plans_->pad_fwd = make_plan(pad, FFTW_FORWARD);
    plans_->pad_bwd = make_plan(pad, FFTW_BACKWARD);
  }
}

TwistedConvolution::~TwistedConvolution() = default;

double TwistedConvolution::coord(std::size_t j) const {
  return -half_width_ + static_cast<double>(j) * period() / static_cast<double>(n_);
}

std::size_t TwistedConvolution::index(const int* k) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < dim_; ++a) {
    flat = flat * n_ + static_cast<std::size_t>(wrap(k[a], static_cast<long>(n_)));
  }
  return flat;
}

std::vector<Complex> TwistedConvolution::analyze(const std::vector<Complex>& samples) const {
  if (samples.size() != total_) throw DomainError("analyze: sample count mismatch");
  std::vector<Complex> in(samples), out(total_);
  fftw_execute_dft(plans_->full_fwd, as_fftw(in.data()), as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(total_);
  const std::size_t nyq = n_ / 2;
  for (std::size_t i = 0; i < total_; ++i) {
    std::size_t rem = i;
    bool nyquist = false;
    for (std::size_t a = 0; a < dim_; ++a) {
      if (rem % n_ == nyq) nyquist = true;
      rem /= n_;
    }
    out[i] = nyquist ? Complex{} : out[i] * scale;
  }
  return out;
}

std::vector<Complex> TwistedConvolution::synthesize(const std::vector<Complex>& coeffs) const {
  if (coeffs.size() != total_) throw DomainError("synthesize: coefficient count mismatch");
  std::vector<Complex> in(coeffs), out(total_);
  fftw_execute_dft(plans_->full_bwd, as_fftw(in.data()), as_fftw(out.data()));
  return out;
}

std::vector<Complex> TwistedConvolution::convolve(const std::vector<Complex>& a,
                                                  const std::vector<Complex>& b) const {
  if (a.size() != total_ || b.size() != total_) throw DomainError("lattice mismatch");
  if (phase_.empty()) return convolve_padded(a, b);
  return convolve_mixed(a, b);
}

std::vector<Complex> TwistedConvolution::convolve_padded(const std::vector<Complex>& a,
                                                         const std::vector<Complex>& b) const {
  const std::size_t m = 2 * n_;
  std::size_t padded = 1;
  for (std::size_t a_ = 0; a_ < dim_; ++a_) padded *= m;
  const int K = max_mode();
  std::size_t lattice = 1;
  for (std::size_t a_ = 0; a_ < dim_; ++a_) lattice *= static_cast<std::size_t>(2 * K + 1);

  auto embed = [&](const std::vector<Complex>& c) {
    std::vector<Complex> buf(padded), out(padded);
    std::vector<int> k(dim_);
    for (std::size_t l = 0; l < lattice; ++l) {
      std::size_t rem = l, src = 0, dst = 0;
      for (std::size_t a_ = dim_; a_-- > 0;) {
        k[a_] = static_cast<int>(rem % static_cast<std::size_t>(2 * K + 1)) - K;
        rem /= static_cast<std::size_t>(2 * K + 1);
      }
      for (std::size_t a_ = 0; a_ < dim_; ++a_) {
        src = src * n_ + static_cast<std::size_t>(wrap(k[a_], static_cast<long>(n_)));
        dst = dst * m + static_cast<std::size_t>(wrap(k[a_], static_cast<long>(m)));
      }
      buf[dst] = c[src];
    }
    fftw_execute_dft(plans_->pad_bwd, as_fftw(buf.data()), as_fftw(out.data()));
    return out;
  };
  std::vector<Complex> fa = embed(a);
  const std::vector<Complex> fb = embed(b);
  for (std::size_t i = 0; i < padded; ++i) fa[i] *= fb[i];
  std::vector<Complex> spec(padded);
  fftw_execute_dft(plans_->pad_fwd, as_fftw(fa.data()), as_fftw(spec.data()));
  const double scale = 1.0 / static_cast<double>(padded);

  std::vector<Complex> out(total_);
  std::vector<int> k(dim_);
  for (std::size_t l = 0; l < lattice; ++l) {
    std::size_t rem = l, src = 0, dst = 0;
    for (std::size_t a_ = dim_; a_-- > 0;) {
      k[a_] = static_cast<int>(rem % static_cast<std::size_t>(2 * K + 1)) - K;
      rem /= static_cast<std::size_t>(2 * K + 1);
    }
    for (std::size_t a_ = 0; a_ < dim_; ++a_) {
      src = src * m + static_cast<std::size_t>(wrap(k[a_], static_cast<long>(m)));
      dst = dst * n_ + static_cast<std::size_t>(wrap(k[a_], static_cast<long>(n_)));
    }
    out[dst] = spec[src] * scale;
  }
  return out;
}

std::vector<Complex> TwistedConvolution::convolve_mixed(const std::vector<Complex>& a,
                                                        const std::vector<Complex>& b) const {
  const int K = max_mode();
  const long N = static_cast<long>(n_);
  const long L = 2 * N;
  const std::size_t side = static_cast<std::size_t>(2 * K + 1);
  auto at = [&](const std::vector<Complex>& c, int k1, int k2) -> const Complex& {
    return c[static_cast<std::size_t>(wrap(k1, N) * N + wrap(k2, N))];
  };
  auto phase = [&](int m, int p) -> const Complex& {
    return phase_[static_cast<std::size_t>(m + K) * side + static_cast<std::size_t>(p + K)];
  };
  auto row_nonzero = [&](const std::vector<Complex>& c, int k1) {
    for (int k2 = -K; k2 <= K; ++k2) {
      if (at(c, k1, k2) != Complex{}) return true;
    }
    return false;
  };
  std::vector<char> a_rows(side), b_rows(side);
  for (int k = -K; k <= K; ++k) {
    a_rows[static_cast<std::size_t>(k + K)] = row_nonzero(a, k);
    b_rows[static_cast<std::size_t>(k + K)] = row_nonzero(b, k);
  }

  std::vector<Complex> out(total_);
  parallel_for(side, [&](std::size_t r) {
    const int k1 = static_cast<int>(r) - K;
    std::vector<Complex> acc(static_cast<std::size_t>(L));
    std::vector<Complex> buf(static_cast<std::size_t>(L)), ua(static_cast<std::size_t>(L)),
        ub(static_cast<std::size_t>(L));
    bool any = false;
    for (int p1 = std::max(-K, k1 - K); p1 <= std::min(K, k1 + K); ++p1) {
      const int q1 = k1 - p1;
      if (!a_rows[static_cast<std::size_t>(p1 + K)] || !b_rows[static_cast<std::size_t>(q1 + K)]) {
        continue;
      }
      any = true;
      std::fill(buf.begin(), buf.end(), Complex{});
      for (int p2 = -K; p2 <= K; ++p2) {
        buf[static_cast<std::size_t>(wrap(p2, L))] = at(a, p1, p2) * phase(q1, p2);
      }
      fftw_execute_dft(plans_->line_bwd, as_fftw(buf.data()), as_fftw(ua.data()));
      std::fill(buf.begin(), buf.end(), Complex{});
      for (int q2 = -K; q2 <= K; ++q2) {
        buf[static_cast<std::size_t>(wrap(q2, L))] = at(b, q1, q2) * phase(-p1, q2);
      }
      fftw_execute_dft(plans_->line_bwd, as_fftw(buf.data()), as_fftw(ub.data()));
      for (long j = 0; j < L; ++j) {
        acc[static_cast<std::size_t>(j)] += ua[static_cast<std::size_t>(j)] * ub[static_cast<std::size_t>(j)];
      }
    }
    if (!any) return;
    fftw_execute_dft(plans_->line_fwd, as_fftw(acc.data()), as_fftw(buf.data()));
    const double scale = 1.0 / static_cast<double>(L);
    for (int k2 = -K; k2 <= K; ++k2) {
      out[static_cast<std::size_t>(wrap(k1, N) * N + wrap(k2, N))] =
          buf[static_cast<std::size_t>(wrap(k2, L))] * scale;
    }
  });
  return out;
}

Complex TwistedConvolution::evaluate(const std::vector<Complex>& coeffs, const double* w) const {
  if (coeffs.size() != total_) throw DomainError("evaluate: coefficient count mismatch");
  const int K = max_mode();
  const std::size_t side = static_cast<std::size_t>(2 * K + 1);
  std::vector<Complex> e(dim_ * side);
  for (std::size_t a = 0; a < dim_; ++a) {
    const double turns = (w[a] + half_width_) / period();
    const Complex step = std::polar(1.0, 2.0 * kPi * turns);
    Complex* row = e.data() + a * side;
    row[K] = 1.0;
    Complex up = 1.0, down = 1.0;
    for (int k = 1; k <= K; ++k) {
      // refresh from polar every 16 steps to bound drift
      if (k % 16 == 0) {
        up = std::polar(1.0, 2.0 * kPi * std::fmod(turns * k, 1.0));
        down = std::conj(up);
      } else {
        up *= step;
        down *= std::conj(step);
      }
      row[K + k] = up;
      row[K - k] = down;
    }
  }
  const long N = static_cast<long>(n_);
  if (dim_ == 1) {
    Complex s{};
    for (int k = -K; k <= K; ++k) s += coeffs[static_cast<std::size_t>(wrap(k, N))] * e[static_cast<std::size_t>(k + K)];
    return s;
  }
  if (dim_ == 2) {
    Complex s{};
    const Complex* e2 = e.data() + side;
    for (int k1 = -K; k1 <= K; ++k1) {
      const Complex* row = coeffs.data() + wrap(k1, N) * N;
      Complex inner{};
      for (int k2 = -K; k2 <= K; ++k2) inner += row[wrap(k2, N)] * e2[k2 + K];
      s += inner * e[static_cast<std::size_t>(k1 + K)];
    }
    return s;
  }
  Complex s{};
  const Complex* e2 = e.data() + side;
  const Complex* e3 = e.data() + 2 * side;
  for (int k1 = -K; k1 <= K; ++k1) {
    Complex mid{};
    for (int k2 = -K; k2 <= K; ++k2) {
      const Complex* row = coeffs.data() + (wrap(k1, N) * N + wrap(k2, N)) * N;
      Complex inner{};
      for (int k3 = -K; k3 <= K; ++k3) inner += row[wrap(k3, N)] * e3[k3 + K];
      mid += inner * e2[k2 + K];
    }
    s += mid * e[static_cast<std::size_t>(k1 + K)];
  }
  return s;
}

std::vector<Complex> moyal_twisted_convolution(const std::vector<Complex>& a,
                                               const std::vector<Complex>& b, std::size_t dim,
                                               std::size_t points, double half_width,
                                               const Mat& theta) {
  const TwistedConvolution tc(dim, points, half_width, theta);
  return tc.convolve(a, b);
}

}  // namespace localstar
