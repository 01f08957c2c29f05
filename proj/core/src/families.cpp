#include "powerpost/families.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "powerpost/errors.hpp"
#include "powerpost/rng.hpp"

namespace powerpost {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;

std::vector<Interval> default_box(int p) {
  return std::vector<Interval>(static_cast<std::size_t>(p), Interval{});
}

// log(1 + exp(t)) without overflow.
double log1p_exp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sign_of(double v) {
  if (v > 0.0) return 1.0;
  if (v < 0.0) return -1.0;
  return 0.0;
}

template <class T>
const T& lookup(const std::vector<T>& items, std::string_view name,
                const char* kind) {
  for (const auto& item : items) {
    if (item.name == name) return item;
  }
  std::ostringstream msg;
  msg << "unknown " << kind << " '" << name << "'; available:";
  for (const auto& item : items) msg << ' ' << item.name;
  throw config_error(msg.str());
}

}  // namespace

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

ModelSpec make_gaussian_location_model(double sigma) {
  ModelSpec m;
  m.dim_p = 1;
  m.theta_box = default_box(1);
  m.name = "gaussian_location";
  const double inv_var = 1.0 / (sigma * sigma);
  const double log_norm = -0.5 * kLogTwoPi - std::log(sigma);
  m.log_density_one = [inv_var, log_norm](const Observation& obs, const Vec& theta) {
    const double d = obs.y - theta[0];
    return log_norm - 0.5 * inv_var * d * d;
  };
  m.score_one = [inv_var](const Observation& obs, const Vec& theta) {
    Vec g(1);
    g[0] = inv_var * (obs.y - theta[0]);
    return g;
  };
  return m;
}

namespace {

ModelSpec make_laplace_location_model() {
  ModelSpec m;
  m.dim_p = 1;
  m.theta_box = default_box(1);
  m.name = "laplace_location";
  m.log_density_one = [](const Observation& obs, const Vec& theta) {
    return -std::numbers::ln2 - std::abs(obs.y - theta[0]);
  };
  m.score_one = [](const Observation& obs, const Vec& theta) {
    Vec g(1);
    g[0] = sign_of(obs.y - theta[0]);
    return g;
  };
  return m;
}

ModelSpec make_logistic_model() {
  ModelSpec m;
  m.dim_p = 1;
  m.theta_box = default_box(1);
  m.name = "logistic";
  m.log_density_one = [](const Observation& obs, const Vec& theta) {
    const double t = theta[0] * obs.x;
    return obs.y * t - log1p_exp(t);
  };
  m.score_one = [](const Observation& obs, const Vec& theta) {
    Vec g(1);
    g[0] = (obs.y - sigmoid(theta[0] * obs.x)) * obs.x;
    return g;
  };
  return m;
}

ModelSpec make_gaussian_location_2d_model() {
  ModelSpec m;
  m.dim_p = 2;
  m.theta_box = default_box(2);
  m.name = "gaussian_location_2d";
  m.log_density_one = [](const Observation& obs, const Vec& theta) {
    const double d0 = obs.y - theta[0];
    const double d1 = obs.x - theta[1];
    return -kLogTwoPi - 0.5 * (d0 * d0 + d1 * d1);
  };
  m.score_one = [](const Observation& obs, const Vec& theta) {
    Vec g(2);
    g[0] = obs.y - theta[0];
    g[1] = obs.x - theta[1];
    return g;
  };
  return m;
}

Vec vec1(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

}  // namespace

TrueProcess make_gaussian_process(double mean, double sd) {
  TrueProcess p;
  p.name = "gaussian";
  p.pseudo_true = vec1(mean);
  p.obs_fields = 1;
  p.sampler = [mean, sd](int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data(static_cast<std::size_t>(n));
    for (auto& obs : data) obs.y = rng.normal(mean, sd);
    return data;
  };
  return p;
}

TrueProcess make_laplace_process(double loc, double scale) {
  TrueProcess p;
  p.name = "laplace";
  p.pseudo_true = vec1(loc);
  p.obs_fields = 1;
  p.sampler = [loc, scale](int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data(static_cast<std::size_t>(n));
    for (auto& obs : data) obs.y = rng.laplace(loc, scale);
    return data;
  };
  return p;
}

TrueProcess make_student_t5_process(double loc) {
  TrueProcess p;
  p.name = "student_t5";
  p.pseudo_true = vec1(loc);
  p.obs_fields = 1;
  p.sampler = [loc](int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data(static_cast<std::size_t>(n));
    for (auto& obs : data) obs.y = loc + rng.student_t(5);
    return data;
  };
  return p;
}

TrueProcess make_logistic_process(double coefficient) {
  TrueProcess p;
  p.name = "logistic";
  p.pseudo_true = vec1(coefficient);
  p.obs_fields = 2;
  p.sampler = [coefficient](int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data(static_cast<std::size_t>(n));
    for (auto& obs : data) {
      obs.x = rng.normal();
      obs.y = rng.bernoulli(sigmoid(coefficient * obs.x)) ? 1.0 : 0.0;
    }
    return data;
  };
  return p;
}

namespace {

TrueProcess make_gaussian_2d_process(double m0, double m1) {
  TrueProcess p;
  p.name = "gaussian_2d";
  Vec pt(2);
  pt << m0, m1;
  p.pseudo_true = pt;
  p.obs_fields = 2;
  p.sampler = [m0, m1](int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data(static_cast<std::size_t>(n));
    for (auto& obs : data) {
      obs.y = rng.normal(m0, 1.0);
      obs.x = rng.normal(m1, 1.0);
    }
    return data;
  };
  return p;
}

}  // namespace

Prior make_gaussian_prior(double mean, double sd, std::string name) {
  Prior prior;
  prior.name = std::move(name);
  const double inv_var = 1.0 / (sd * sd);
  const double log_norm = -0.5 * kLogTwoPi - std::log(sd);
  prior.log_density = [mean, inv_var, log_norm](const Vec& theta) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      const double d = theta[j] - mean;
      total += log_norm - 0.5 * inv_var * d * d;
    }
    return total;
  };
  return prior;
}

namespace {

const std::vector<ModelSpec>& builtin_models() {
  static const std::vector<ModelSpec> models = {
      make_gaussian_location_model(1.0),
      make_laplace_location_model(),
      make_logistic_model(),
      make_gaussian_location_2d_model(),
  };
  return models;
}

const std::vector<TrueProcess>& builtin_processes() {
  static const std::vector<TrueProcess> processes = {
      make_gaussian_process(0.0, 1.0),
      make_laplace_process(0.0, 1.0),
      make_student_t5_process(0.5),
      make_logistic_process(0.75),
      make_gaussian_2d_process(0.3, -0.2),
  };
  return processes;
}

const std::vector<Prior>& builtin_priors() {
  static const std::vector<Prior> priors = {
      make_gaussian_prior(0.0, 1.0, "std_normal"),
      make_gaussian_prior(0.0, 10.0, "gaussian_wide"),
      make_gaussian_prior(0.0, 1e3, "flat_wide"),
      make_gaussian_prior(100.0, 0.1, "narrow_far"),
  };
  return priors;
}

template <class T>
std::vector<std::string> names_of(const std::vector<T>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.name);
  return out;
}

}  // namespace

const ModelSpec& find_model(std::string_view name) {
  return lookup(builtin_models(), name, "model");
}

const TrueProcess& find_process(std::string_view name) {
  return lookup(builtin_processes(), name, "process");
}

const Prior& find_prior(std::string_view name) {
  return lookup(builtin_priors(), name, "prior");
}

std::vector<std::string> model_names() { return names_of(builtin_models()); }
std::vector<std::string> process_names() {
  return names_of(builtin_processes());
}
std::vector<std::string> prior_names() { return names_of(builtin_priors()); }

}  // namespace powerpost
