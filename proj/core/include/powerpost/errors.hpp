#pragma once

#include <stdexcept>
#include <string>

namespace powerpost {

// Bad experiment or CLI configuration: unknown component names, malformed
// config files, empty seed ranges. Maps to process exit code 1.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure during a computation. Maps to exit code 2.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimizer did not reach a stationary point (e.g. the MLE sits at infinity).
struct convergence_error : numerical_error {
  using numerical_error::numerical_error;
};

// Multi-start optimization found disagreeing optima.
struct nonuniqueness_error : numerical_error {
  using numerical_error::numerical_error;
};

// A grid cannot represent the requested density (mass escaping the edges,
// non-finite tabulated values, mismatched axes).
struct grid_error : numerical_error {
  using numerical_error::numerical_error;
};

// Markov chain acceptance rate left the usable window after adaptation.
struct mixing_error : numerical_error {
  using numerical_error::numerical_error;
};

// A mathematically guaranteed inequality failed numerically. Maps to exit
// code 3.
struct property_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace powerpost
