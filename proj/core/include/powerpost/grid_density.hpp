#pragma once

// Normalized densities tabulated on rectangular grids. The grid (trapezoid
// quadrature, log-space values) is the ground-truth representation of every
// density in this project; samplers only cross-check it.

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "powerpost/types.hpp"

namespace powerpost {

enum class Frame { theta, h };

// Attached to h-frame grids: h = sqrt(n) * (theta - theta_star).
struct LanMeta {
  Vec theta_star;
  double n = 0.0;
};

class GridDensity {
 public:
  enum class Normalize {
    renormalize,  // subtract the log of the quadrature sum
    check,        // require the tabulated mass to be 1 within 1e-8
  };

  // `log_values` are laid out with the last axis fastest (row-major).
  static GridDensity from_log_values(std::vector<std::vector<double>> axes,
                                     std::vector<double> log_values,
                                     Frame frame, Normalize mode,
                                     LanMeta meta = {});

  template <class F>
  static GridDensity tabulate(const std::vector<std::vector<double>>& axes,
                              F&& log_pdf, Frame frame, Normalize mode,
                              LanMeta meta = {}) {
    std::vector<double> values;
    values.reserve(node_count(axes));
    visit_axes(axes, [&](const Vec& coords) {
      values.push_back(log_pdf(coords));
    });
    return from_log_values(axes, std::move(values), frame, mode,
                           std::move(meta));
  }

  int dim() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return log_values_.size(); }
  const std::vector<std::vector<double>>& axes() const { return axes_; }
  const std::vector<double>& log_values() const { return log_values_; }
  Frame frame() const { return frame_; }
  const LanMeta& lan_meta() const { return meta_; }
  double density(std::size_t flat) const;

  // Calls f(flat_index, coords, quadrature_weight) for every node; `coords`
  // is reused storage, valid only during the call.
  template <class F>
  void for_each_node(F&& f) const {
    const int p = dim();
    std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
    Vec coords(p);
    for (int d = 0; d < p; ++d) coords[d] = axes_[static_cast<std::size_t>(d)][0];
    const std::size_t total = size();
    for (std::size_t flat = 0; flat < total; ++flat) {
      double w = 1.0;
      for (int d = 0; d < p; ++d)
        w *= dim_weights_[static_cast<std::size_t>(d)]
                         [idx[static_cast<std::size_t>(d)]];
      f(flat, coords, w);
      int d = p - 1;
      while (d >= 0) {
        auto& i = idx[static_cast<std::size_t>(d)];
        if (++i < axes_[static_cast<std::size_t>(d)].size()) {
          coords[d] = axes_[static_cast<std::size_t>(d)][i];
          break;
        }
        i = 0;
        coords[d] = axes_[static_cast<std::size_t>(d)][0];
        --d;
      }
    }
  }

 private:
  GridDensity() = default;

  template <class F>
  static void visit_axes(const std::vector<std::vector<double>>& axes, F&& f) {
    const int p = static_cast<int>(axes.size());
    std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
    Vec coords(p);
    for (int d = 0; d < p; ++d) coords[d] = axes[static_cast<std::size_t>(d)][0];
    const std::size_t total = node_count(axes);
    for (std::size_t flat = 0; flat < total; ++flat) {
      f(coords);
      int d = p - 1;
      while (d >= 0) {
        auto& i = idx[static_cast<std::size_t>(d)];
        if (++i < axes[static_cast<std::size_t>(d)].size()) {
          coords[d] = axes[static_cast<std::size_t>(d)][i];
          break;
        }
        i = 0;
        coords[d] = axes[static_cast<std::size_t>(d)][0];
        --d;
      }
    }
  }

  static std::size_t node_count(const std::vector<std::vector<double>>& axes);
  void finalize(Normalize mode);

  std::vector<std::vector<double>> axes_;
  std::vector<std::vector<double>> dim_weights_;
  std::vector<double> log_values_;
  Frame frame_ = Frame::theta;
  LanMeta meta_;
};

bool same_axes(const GridDensity& a, const GridDensity& b);
void require_same_axes(const GridDensity& a, const GridDensity& b);

// Quadrature of ||u||_2^power against the density; power must be >= 0.
double grid_abs_moment(const GridDensity& g, double power);
Vec grid_mean(const GridDensity& g);
Mat grid_second_moment(const GridDensity& g);
Mat grid_covariance(const GridDensity& g);

// Change of variables h = sqrt(n) (theta - theta_star) and its inverse; both
// preserve normalization exactly.
GridDensity to_lan_frame(const GridDensity& theta_density, const Vec& theta_star,
                         double n);
GridDensity to_theta_frame(const GridDensity& h_density);

// Multivariate normal tabulated on the given axes.
GridDensity tabulate_gaussian(const std::vector<std::vector<double>>& axes,
                              const Vec& mean, const Mat& covariance,
                              Frame frame,
                              GridDensity::Normalize mode =
                                  GridDensity::Normalize::check,
                              LanMeta meta = {});

// Axes spanning center +- halfwidth with `nodes_per_dim` nodes per coordinate.
std::vector<std::vector<double>> centered_axes(const Vec& center,
                                               const Vec& halfwidth,
                                               int nodes_per_dim);

// CSV serialization: a metadata comment line, a header row naming the frame,
// then one (node coordinates..., log_value) row per node.
void write_grid_csv(std::ostream& out, const GridDensity& g);
GridDensity read_grid_csv(std::istream& in);

}  // namespace powerpost
