#include "powerpost/grid_density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "powerpost/errors.hpp"
#include "powerpost/numeric.hpp"

namespace powerpost {

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& axis) {
  const std::size_t m = axis.size();
  std::vector<double> w(m, 0.0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double half = 0.5 * (axis[i + 1] - axis[i]);
    w[i] += half;
    w[i + 1] += half;
  }
  return w;
}

void format_double(std::ostream& out, double v) { out << fmt_g17(v); }

}  // namespace

std::size_t GridDensity::node_count(
    const std::vector<std::vector<double>>& axes) {
  std::size_t total = 1;
  for (const auto& axis : axes) total *= axis.size();
  return total;
}

GridDensity GridDensity::from_log_values(std::vector<std::vector<double>> axes,
                                         std::vector<double> log_values,
                                         Frame frame, Normalize mode,
                                         LanMeta meta) {
  if (axes.empty()) throw std::invalid_argument("GridDensity: no axes");
  for (const auto& axis : axes) {
    if (axis.size() < 2)
      throw std::invalid_argument("GridDensity: axis needs at least 2 nodes");
    for (std::size_t i = 1; i < axis.size(); ++i)
      if (!(axis[i] > axis[i - 1]))
        throw std::invalid_argument("GridDensity: axis not strictly increasing");
  }
  if (log_values.size() != node_count(axes))
    throw std::invalid_argument("GridDensity: value count does not match grid");
  for (double v : log_values)
    if (!std::isfinite(v))
      throw grid_error("GridDensity: non-finite log value on the grid");
  if (frame == Frame::h) {
    if (meta.theta_star.size() != static_cast<Eigen::Index>(axes.size()) ||
        !(meta.n >= 1.0))
      throw std::invalid_argument(
          "GridDensity: h frame requires theta_star and n metadata");
  }

  GridDensity g;
  g.axes_ = std::move(axes);
  g.log_values_ = std::move(log_values);
  g.frame_ = frame;
  g.meta_ = std::move(meta);
  g.dim_weights_.reserve(g.axes_.size());
  for (const auto& axis : g.axes_) g.dim_weights_.push_back(trapezoid_weights(axis));
  g.finalize(mode);
  return g;
}

void GridDensity::finalize(Normalize mode) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : log_values_) peak = std::max(peak, v);
  KahanSum sum;
  for_each_node([&](std::size_t flat, const Vec&, double w) {
    sum.add(w * std::exp(log_values_[flat] - peak));
  });
  const double log_total = peak + std::log(sum.value());
  if (mode == Normalize::renormalize) {
    for (double& v : log_values_) v -= log_total;
  } else {
    const double total = std::exp(log_total);
    if (!(std::abs(total - 1.0) <= 1e-8)) {
      std::ostringstream msg;
      msg << "GridDensity: tabulated mass " << total
          << " deviates from 1 by more than 1e-8";
      throw grid_error(msg.str());
    }
  }
}

double GridDensity::density(std::size_t flat) const {
  return std::exp(log_values_[flat]);
}

bool same_axes(const GridDensity& a, const GridDensity& b) {
  return a.axes() == b.axes();
}

void require_same_axes(const GridDensity& a, const GridDensity& b) {
  if (!same_axes(a, b))
    throw grid_error("grid axis mismatch: densities must share nodes");
}

double grid_abs_moment(const GridDensity& g, double power) {
  if (power < 0.0)
    throw std::invalid_argument("grid_abs_moment: negative moment order");
  KahanSum sum;
  g.for_each_node([&](std::size_t flat, const Vec& u, double w) {
    const double norm = u.norm();
    const double weight = power == 0.0 ? 1.0 : std::pow(norm, power);
    sum.add(w * weight * g.density(flat));
  });
  return sum.value();
}

Vec grid_mean(const GridDensity& g) {
  Vec mean = Vec::Zero(g.dim());
  g.for_each_node([&](std::size_t flat, const Vec& u, double w) {
    mean += (w * g.density(flat)) * u;
  });
  return mean;
}

Mat grid_second_moment(const GridDensity& g) {
  Mat second = Mat::Zero(g.dim(), g.dim());
  g.for_each_node([&](std::size_t flat, const Vec& u, double w) {
    second += (w * g.density(flat)) * (u * u.transpose());
  });
  return second;
}

Mat grid_covariance(const GridDensity& g) {
  const Vec mean = grid_mean(g);
  return grid_second_moment(g) - mean * mean.transpose();
}

GridDensity to_lan_frame(const GridDensity& theta_density,
                         const Vec& theta_star, double n) {
  if (theta_density.frame() != Frame::theta)
    throw std::invalid_argument("to_lan_frame: input must be in the theta frame");
  if (theta_star.size() != theta_density.dim())
    throw std::invalid_argument("to_lan_frame: theta_star dimension mismatch");
  if (!(n >= 1.0)) throw std::invalid_argument("to_lan_frame: n must be >= 1");

  const double root_n = std::sqrt(n);
  const int p = theta_density.dim();
  std::vector<std::vector<double>> axes = theta_density.axes();
  for (int d = 0; d < p; ++d)
    for (double& node : axes[static_cast<std::size_t>(d)])
      node = root_n * (node - theta_star[d]);

  const double shift = 0.5 * p * std::log(n);
  std::vector<double> values = theta_density.log_values();
  for (double& v : values) v -= shift;

  return GridDensity::from_log_values(std::move(axes), std::move(values),
                                      Frame::h, GridDensity::Normalize::check,
                                      LanMeta{theta_star, n});
}

GridDensity to_theta_frame(const GridDensity& h_density) {
  if (h_density.frame() != Frame::h)
    throw std::invalid_argument("to_theta_frame: input must be in the h frame");
  const LanMeta& meta = h_density.lan_meta();
  const double root_n = std::sqrt(meta.n);
  const int p = h_density.dim();

  std::vector<std::vector<double>> axes = h_density.axes();
  for (int d = 0; d < p; ++d)
    for (double& node : axes[static_cast<std::size_t>(d)])
      node = meta.theta_star[d] + node / root_n;

  const double shift = 0.5 * p * std::log(meta.n);
  std::vector<double> values = h_density.log_values();
  for (double& v : values) v += shift;

  return GridDensity::from_log_values(std::move(axes), std::move(values),
                                      Frame::theta,
                                      GridDensity::Normalize::check);
}

GridDensity tabulate_gaussian(const std::vector<std::vector<double>>& axes,
                              const Vec& mean, const Mat& covariance,
                              Frame frame, GridDensity::Normalize mode,
                              LanMeta meta) {
  const Eigen::Index p = mean.size();
  Eigen::LLT<Mat> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw numerical_error("tabulate_gaussian: covariance not positive definite");
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    log_det += 2.0 * std::log(llt.matrixL()(j, j));
  const double log_norm =
      -0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) -
      0.5 * log_det;

  return GridDensity::tabulate(
      axes,
      [&](const Vec& u) {
        const Vec d = u - mean;
        const Vec half = llt.matrixL().solve(d);
        return log_norm - 0.5 * half.squaredNorm();
      },
      frame, mode, std::move(meta));
}

std::vector<std::vector<double>> centered_axes(const Vec& center,
                                               const Vec& halfwidth,
                                               int nodes_per_dim) {
  std::vector<std::vector<double>> axes;
  axes.reserve(static_cast<std::size_t>(center.size()));
  for (Eigen::Index d = 0; d < center.size(); ++d)
    axes.push_back(linspace(center[d] - halfwidth[d], center[d] + halfwidth[d],
                            nodes_per_dim));
  return axes;
}

void write_grid_csv(std::ostream& out, const GridDensity& g) {
  const int p = g.dim();
  out << "# frame=" << (g.frame() == Frame::theta ? "theta" : "h");
  if (g.frame() == Frame::h) {
    out << " n=";
    format_double(out, g.lan_meta().n);
    out << " theta_star=";
    for (int d = 0; d < p; ++d) {
      if (d) out << ',';
      format_double(out, g.lan_meta().theta_star[d]);
    }
  }
  out << '\n';
  const char* coord = g.frame() == Frame::theta ? "theta_" : "h_";
  for (int d = 0; d < p; ++d) out << coord << (d + 1) << ',';
  out << "log_value\n";
  g.for_each_node([&](std::size_t flat, const Vec& u, double) {
    for (int d = 0; d < p; ++d) {
      format_double(out, u[d]);
      out << ',';
    }
    format_double(out, g.log_values()[flat]);
    out << '\n';
  });
}

GridDensity read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# frame=", 0) != 0)
    throw config_error("read_grid_csv: missing frame metadata line");
  std::istringstream meta_line(line.substr(2));
  std::string token;
  Frame frame = Frame::theta;
  LanMeta meta;
  while (meta_line >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "frame") {
      frame = value == "h" ? Frame::h : Frame::theta;
    } else if (key == "n") {
      meta.n = std::stod(value);
    } else if (key == "theta_star") {
      std::vector<double> coords;
      std::istringstream cs(value);
      std::string c;
      while (std::getline(cs, c, ',')) coords.push_back(std::stod(c));
      meta.theta_star = Vec(static_cast<Eigen::Index>(coords.size()));
      for (std::size_t j = 0; j < coords.size(); ++j)
        meta.theta_star[static_cast<Eigen::Index>(j)] = coords[j];
    }
  }
  if (!std::getline(in, line))
    throw config_error("read_grid_csv: missing header row");
  const int p = static_cast<int>(std::count(line.begin(), line.end(), ','));

  std::vector<std::map<double, std::size_t>> seen(static_cast<std::size_t>(p));
  std::vector<std::vector<double>> coords_rows;
  std::vector<double> value_rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<double> fields;
    std::string cell;
    while (std::getline(row, cell, ',')) fields.push_back(std::stod(cell));
    if (fields.size() != static_cast<std::size_t>(p) + 1)
      throw config_error("read_grid_csv: malformed row '" + line + "'");
    for (int d = 0; d < p; ++d)
      seen[static_cast<std::size_t>(d)].emplace(fields[static_cast<std::size_t>(d)], 0);
    value_rows.push_back(fields.back());
    fields.pop_back();
    coords_rows.push_back(std::move(fields));
  }

  std::vector<std::vector<double>> axes(static_cast<std::size_t>(p));
  for (int d = 0; d < p; ++d) {
    std::size_t i = 0;
    for (auto& [node, index] : seen[static_cast<std::size_t>(d)]) {
      axes[static_cast<std::size_t>(d)].push_back(node);
      index = i++;
    }
  }
  std::size_t total = 1;
  for (const auto& axis : axes) total *= axis.size();
  if (total != value_rows.size())
    throw config_error("read_grid_csv: rows do not form a full tensor grid");

  std::vector<double> values(total);
  for (std::size_t r = 0; r < value_rows.size(); ++r) {
    std::size_t flat = 0;
    for (int d = 0; d < p; ++d) {
      flat = flat * axes[static_cast<std::size_t>(d)].size() +
             seen[static_cast<std::size_t>(d)].at(coords_rows[r][static_cast<std::size_t>(d)]);
    }
    values[flat] = value_rows[r];
  }
  return GridDensity::from_log_values(std::move(axes), std::move(values), frame,
                                      GridDensity::Normalize::check,
                                      std::move(meta));
}

}  // namespace powerpost
