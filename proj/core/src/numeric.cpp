#include "powerpost/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace powerpost {

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sequence");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool nonincreasing(const std::vector<double>& seq, int allowed_increases) {
  int increases = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    if (seq[i] > seq[i - 1]) ++increases;
  }
  return increases <= allowed_increases;
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw std::invalid_argument("bad linspace range");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
  out.back() = hi;
  return out;
}

double golden_section_max(const std::function<double(double)>& f, double lo,
                          double hi, double tol, int max_iter) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& at,
                double step_scale) {
  Vec g(at.size());
  Vec probe = at;
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    const double h = step_scale * std::max(1.0, std::abs(at[j]));
    probe[j] = at[j] + h;
    const double fp = f(probe);
    probe[j] = at[j] - h;
    const double fm = f(probe);
    probe[j] = at[j];
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& at,
               double step_scale) {
  const Eigen::Index p = at.size();
  Mat hess(p, p);
  Vec step(p);
  for (Eigen::Index j = 0; j < p; ++j)
    step[j] = step_scale * std::max(1.0, std::abs(at[j]));

  const double f0 = f(at);
  Vec probe = at;
  for (Eigen::Index j = 0; j < p; ++j) {
    probe[j] = at[j] + step[j];
    const double fp = f(probe);
    probe[j] = at[j] - step[j];
    const double fm = f(probe);
    probe[j] = at[j];
    hess(j, j) = (fp - 2.0 * f0 + fm) / (step[j] * step[j]);
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j + 1; k < p; ++k) {
      probe[j] = at[j] + step[j];
      probe[k] = at[k] + step[k];
      const double fpp = f(probe);
      probe[k] = at[k] - step[k];
      const double fpm = f(probe);
      probe[j] = at[j] - step[j];
      const double fmm = f(probe);
      probe[k] = at[k] + step[k];
      const double fmp = f(probe);
      probe[j] = at[j];
      probe[k] = at[k];
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * step[j] * step[k]);
      hess(j, k) = v;
      hess(k, j) = v;
    }
  }
  return hess;
}

}  // namespace powerpost
