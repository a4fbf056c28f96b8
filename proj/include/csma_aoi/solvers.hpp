#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "csma_aoi/analytic.hpp"
#include "csma_aoi/params.hpp"

namespace csma_aoi {

struct SolverConfig {
  double tolerance = 1e-12;
  int max_iterations = 200;
  // Optional search interval for the unknown; defaults are derived per
  // equation when unset.
  std::optional<std::pair<double, double>> bracket;
};

// Couples p_tx = p / (1 - p_cl) with p_cl = 1 - (1 - p_tx)^(N-1) and returns
// the light-traffic (smallest) root together with p_idle, mu, beta, AoI.
//
// Throws over_capacity when p exceeds max_x x(1-x)^(N-1), validity when the
// root gives p_cl >= 0.5 and infeasible_load when the idle probability is
// negative.
ProtocolSolution solve_fixed_point(const NetworkParams& params,
                                   const SolverConfig& cfg = {});

// Largest packet rate keeping the node unsaturated for a fixed N.
double max_packet_rate(int n_nodes, int w0, const SolverConfig& cfg = {});

// Largest node count keeping the node unsaturated for a fixed p.
long max_node_count(double p, int w0, const SolverConfig& cfg = {});

namespace solver_detail {

// Bracketed Newton on [lo, hi] with f(lo) and f(hi) of opposite sign; falls
// back to bisection whenever the Newton step leaves the bracket or stalls.
// Converged when |f| < tolerance.
double bracketed_newton(const std::function<double(double)>& f,
                        const std::function<double(double)>& df, double lo,
                        double hi, const SolverConfig& cfg);

// First sign change of f on a uniform scan of (lo, hi); returns the
// subinterval containing it.
std::optional<std::pair<double, double>> first_sign_change(
    const std::function<double(double)>& f, double lo, double hi, int steps);

// 1 - (1 - x)^m computed without cancellation.
double complement_power(double x, double m);

}  // namespace solver_detail

}  // namespace csma_aoi
