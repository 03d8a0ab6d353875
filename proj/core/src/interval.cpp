#include "minlp/interval.hpp"

#include <numbers>

namespace minlp {

namespace {

double mul0(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

double powv(double y, double p) {
  if (y == kInf) return p > 0 ? kInf : 0.0;
  if (y == -kInf) {
    // only integer p reach here
    long k = static_cast<long>(p);
    if (p > 0) return (k % 2 == 0) ? kInf : -kInf;
    return 0.0;
  }
  return std::pow(y, p);
}

double entropy_v(double y) {
  if (y == 0.0) return 0.0;
  if (y == kInf) return -kInf;
  return -y * std::log(y);
}

}  // namespace

double Interval::mid() const {
  if (is_empty()) return 0.0;
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
  if (std::isfinite(lo)) return lo;
  if (std::isfinite(hi)) return hi;
  return 0.0;
}

bool is_integer_value(double v) { return std::isfinite(v) && std::floor(v) == v; }

Interval outward(Interval a) {
  if (a.is_empty()) return a;
  auto down = [](double v) {
    if (!std::isfinite(v)) return v;
    return v - std::max(1e-12 * std::fabs(v), 1e-300);
  };
  auto up = [](double v) {
    if (!std::isfinite(v)) return v;
    return v + std::max(1e-12 * std::fabs(v), 1e-300);
  };
  return {down(a.lo), up(a.hi)};
}

Interval intersect(Interval a, Interval b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  if (r.is_empty()) return Interval::empty();
  return r;
}

Interval hull(Interval a, Interval b) {
  if (a.is_empty()) return b;
  if (b.is_empty()) return a;
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

Interval operator+(Interval a, Interval b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  return {a.lo + b.lo, a.hi + b.hi};
}

Interval operator-(Interval a) {
  if (a.is_empty()) return a;
  return {-a.hi, -a.lo};
}

Interval operator-(Interval a, Interval b) { return a + (-b); }

Interval operator*(Interval a, Interval b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  double p[4] = {mul0(a.lo, b.lo), mul0(a.lo, b.hi), mul0(a.hi, b.lo), mul0(a.hi, b.hi)};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

Interval operator*(double c, Interval a) {
  if (a.is_empty()) return a;
  if (c == 0.0) return Interval::point(0.0);
  if (c > 0) return {c * a.lo, c * a.hi};
  return {c * a.hi, c * a.lo};
}

Interval operator/(Interval a, Interval b) {
  if (a.is_empty() || b.is_empty()) return Interval::empty();
  if (b.lo == 0.0 && b.hi == 0.0) return a.contains(0.0) ? Interval::entire() : Interval::empty();
  if (b.lo > 0 || b.hi < 0) {
    return a * Interval{1.0 / b.hi, 1.0 / b.lo};
  }
  if (b.lo == 0.0) return a * Interval{1.0 / b.hi, kInf};
  if (b.hi == 0.0) return a * Interval{-kInf, 1.0 / b.lo};
  // 0 strictly inside b: a * ((-inf, 1/lo] u [1/hi, inf))
  Interval left = a * Interval{-kInf, 1.0 / b.lo};
  Interval right = a * Interval{1.0 / b.hi, kInf};
  return hull(left, right);
}

Interval sqr(Interval a) { return ipow(a, 2); }

Interval ipow(Interval a, int k) {
  if (a.is_empty()) return a;
  if (k == 0) return Interval::point(1.0);
  if (k < 0) {
    Interval d = ipow(a, -k);
    return Interval::point(1.0) / d;
  }
  double pl = powv(a.lo, k), ph = powv(a.hi, k);
  if (k % 2 == 1) return {pl, ph};
  if (a.lo >= 0) return {pl, ph};
  if (a.hi <= 0) return {ph, pl};
  return {0.0, std::max(pl, ph)};
}

Interval pow(Interval a, double p) {
  if (a.is_empty()) return a;
  if (is_integer_value(p) && std::fabs(p) < 1e9) return ipow(a, static_cast<int>(p));
  a = intersect(a, {0.0, kInf});
  if (a.is_empty()) return a;
  if (p > 0) return {powv(a.lo, p), powv(a.hi, p)};
  double h = a.lo == 0.0 ? kInf : std::pow(a.lo, p);
  return {powv(a.hi, p), h};
}

Interval signpower(Interval a, double p) {
  if (a.is_empty()) return a;
  auto s = [p](double y) {
    if (y == kInf) return kInf;
    if (y == -kInf) return -kInf;
    return y >= 0 ? std::pow(y, p) : -std::pow(-y, p);
  };
  return {s(a.lo), s(a.hi)};
}

Interval exp(Interval a) {
  if (a.is_empty()) return a;
  return {std::exp(a.lo), std::exp(a.hi)};
}

Interval log(Interval a) {
  a = intersect(a, {0.0, kInf});
  if (a.is_empty() || a.hi == 0.0) return Interval::empty();
  double l = a.lo == 0.0 ? -kInf : std::log(a.lo);
  return {l, std::log(a.hi)};
}

Interval entropy(Interval a) {
  a = intersect(a, {0.0, kInf});
  if (a.is_empty()) return a;
  const double peak = 1.0 / std::numbers::e;
  double fl = entropy_v(a.lo), fh = entropy_v(a.hi);
  if (a.hi <= peak) return {fl, fh};
  if (a.lo >= peak) return {fh, fl};
  return {std::min(fl, fh), std::exp(-1.0)};
}

Interval sin(Interval a) {
  if (a.is_empty()) return a;
  if (!a.bounded() || a.hi - a.lo >= 2 * std::numbers::pi) return {-1.0, 1.0};
  const double two_pi = 2 * std::numbers::pi, half_pi = 0.5 * std::numbers::pi;
  double lo = std::min(std::sin(a.lo), std::sin(a.hi));
  double hi = std::max(std::sin(a.lo), std::sin(a.hi));
  double kmax = std::ceil((a.lo - half_pi) / two_pi);
  if (half_pi + kmax * two_pi <= a.hi) hi = 1.0;
  double kmin = std::ceil((a.lo + half_pi) / two_pi);
  if (-half_pi + kmin * two_pi <= a.hi) lo = -1.0;
  return {lo, hi};
}

Interval cos(Interval a) {
  if (a.is_empty()) return a;
  if (!a.bounded() || a.hi - a.lo >= 2 * std::numbers::pi) return {-1.0, 1.0};
  const double two_pi = 2 * std::numbers::pi, pi = std::numbers::pi;
  double lo = std::min(std::cos(a.lo), std::cos(a.hi));
  double hi = std::max(std::cos(a.lo), std::cos(a.hi));
  double kmax = std::ceil(a.lo / two_pi);
  if (kmax * two_pi <= a.hi) hi = 1.0;
  double kmin = std::ceil((a.lo - pi) / two_pi);
  if (pi + kmin * two_pi <= a.hi) lo = -1.0;
  return {lo, hi};
}

Interval abs(Interval a) {
  if (a.is_empty()) return a;
  if (a.lo >= 0) return a;
  if (a.hi <= 0) return -a;
  return {0.0, std::max(-a.lo, a.hi)};
}

}  // namespace minlp
