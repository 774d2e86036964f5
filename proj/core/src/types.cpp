#include "localstar/types.hpp"

#include <algorithm>
#include <limits>

namespace localstar {

bool Box::empty() const {
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (!(lo[a] <= hi[a])) return true;
  }
  return false;
}

bool Box::contains(const double* x, double slack) const {
  if (empty()) return false;
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (x[a] < lo[a] - slack || x[a] > hi[a] + slack) return false;
  }
  return true;
}

bool Box::contains(const Box& other) const {
  if (other.empty()) return true;
  if (empty() || other.dim() != dim()) return false;
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (other.lo[a] < lo[a] || other.hi[a] > hi[a]) return false;
  }
  return true;
}

Box Box::inflated(double fraction) const {
  Box b = *this;
  if (empty()) return b;
  for (std::size_t a = 0; a < lo.size(); ++a) {
    const double mid = 0.5 * (lo[a] + hi[a]);
    const double half = 0.5 * (hi[a] - lo[a]) * (1.0 + fraction);
    b.lo[a] = mid - half;
    b.hi[a] = mid + half;
  }
  return b;
}

Box Box::padded(double amount) const {
  Box b = *this;
  if (empty()) return b;
  for (std::size_t a = 0; a < lo.size(); ++a) {
    b.lo[a] -= amount;
    b.hi[a] += amount;
  }
  return b;
}

Box Box::cube(std::size_t n, double half_width) {
  return Box{std::vector<double>(n, -half_width), std::vector<double>(n, half_width)};
}

Box Box::empty_box(std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  return Box{std::vector<double>(n, inf), std::vector<double>(n, -inf)};
}

}  // namespace localstar
