#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace eduopt {

using Objective = std::function<double(std::span<const double>)>;

struct MinimizeOptions {
  int budget = 2000;     // objective evaluations over all restarts
  int restarts = 5;      // local runs, the first from the given start
  std::uint64_t seed = 1;
  double rho_begin = 0.1;  // initial trust radius, as a fraction of each bound width
  double rho_end = 1e-4;
  double restart_spread = 0.25;  // restart points: best so far +- spread * width
};

struct TracePoint {
  int evaluation = 0;
  int restart = 0;
  double value = 0.0;
  double best = 0.0;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool budget_exhausted = false;
  std::vector<TracePoint> trace;
};

// Bound-constrained derivative-free minimization: trust-region steps on
// quadratic models interpolating 2n+1 points (least-Frobenius-norm Hessian
// updates). Restarts alternate between the incumbent with a fresh trust
// region and seeded random points near it.
MinimizeResult minimize(const Objective& f, std::span<const double> start, std::span<const double> lower,
                        std::span<const double> upper, const MinimizeOptions& opts = {});

}  // namespace eduopt
