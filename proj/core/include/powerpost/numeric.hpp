#pragma once

#include <functional>
#include <string>
#include <vector>

#include "powerpost/types.hpp"

namespace powerpost {

// Compensated (Kahan) accumulator. Long log-likelihood sums must stay accurate
// to near machine precision for the exact-LAN checks.
class KahanSum {
 public:
  void add(double v) {
    const double y = v - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double median(std::vector<double> values);

// Shortest-faithful decimal formatting ("%.17g"); keeps emitted files
// byte-identical across runs.
std::string fmt_g17(double v);

// Non-increasing check for summary sequences; `allowed_increases` upward moves
// are tolerated so Monte Carlo noise cannot fail a true asymptotic trend.
bool nonincreasing(const std::vector<double>& seq, int allowed_increases = 0);

std::vector<double> linspace(double lo, double hi, int count);

// Golden-section maximization of a unimodal function on [lo, hi]; returns the
// abscissa once the bracket shrinks below `tol`.
double golden_section_max(const std::function<double(double)>& f, double lo,
                          double hi, double tol, int max_iter = 200);

// Central finite differences with per-coordinate step
// step_scale * max(1, |x_j|).
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& at,
                double step_scale);
Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& at,
               double step_scale);

}  // namespace powerpost
