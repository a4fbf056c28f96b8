#include "csma_aoi/solvers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "csma_aoi/errors.hpp"

namespace csma_aoi {

namespace solver_detail {

double complement_power(double x, double m) {
  return -std::expm1(m * std::log1p(-x));
}

double bracketed_newton(const std::function<double(double)>& f,
                        const std::function<double(double)>& df, double lo,
                        double hi, const SolverConfig& cfg) {
  if (!(cfg.tolerance > 0.0) || cfg.max_iterations < 1) {
    fail(ErrorKind::domain, "solver tolerance must be > 0, iterations >= 1");
  }
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    fail(ErrorKind::domain, "root is not bracketed");
  }
  // Orient so that f(neg) < 0 < f(pos).
  double neg = f_lo < 0.0 ? lo : hi;
  double pos = f_lo < 0.0 ? hi : lo;

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) {
      neg = x;
    } else {
      pos = x;
    }
    const double d = df(x);
    double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d
                                                 : std::numeric_limits<double>::quiet_NaN();
    const double a = std::min(neg, pos);
    const double b = std::max(neg, pos);
    const bool newton_ok = std::isfinite(next) && next > a && next < b;
    if (!newton_ok) {
      next = 0.5 * (a + b);
    }
    const double step = std::abs(next - x);
    if (std::abs(fx) < cfg.tolerance &&
        (step <= 1e-14 * std::abs(x) || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x))) {
      return std::abs(f(next)) < std::abs(fx) ? next : x;
    }
    if (b - a <= std::numeric_limits<double>::min()) {
      break;
    }
    x = next;
  }
  const double fx = f(x);
  if (std::abs(fx) < cfg.tolerance) {
    return x;
  }
  fail(ErrorKind::no_convergence, "bracketed Newton did not converge");
}

std::optional<std::pair<double, double>> first_sign_change(
    const std::function<double(double)>& f, double lo, double hi, int steps) {
  double prev_x = lo;
  double prev_f = f(lo);
  for (int k = 1; k <= steps; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / steps;
    const double fx = f(x);
    if (prev_f == 0.0) {
      return std::pair{prev_x, prev_x};
    }
    if ((prev_f < 0.0) != (fx < 0.0) || fx == 0.0) {
      return std::pair{prev_x, x};
    }
    prev_x = x;
    prev_f = fx;
  }
  return std::nullopt;
}

}  // namespace solver_detail

namespace {

using solver_detail::bracketed_newton;
using solver_detail::complement_power;
using solver_detail::first_sign_change;

double unsaturated_numerator(double p_cl, int w0) {
  return 4.0 * p_cl * p_cl - (w0 + 4.0) * p_cl + w0 + 1.0;
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

ProtocolSolution solve_fixed_point(const NetworkParams& params,
                                   const SolverConfig& cfg) {
  params.validate();
  const int n = params.n_nodes;
  const double p = params.packet_rate;
  const double others = static_cast<double>(n - 1);

  double p_tx = p;
  if (n > 1) {
    auto f = [&](double x) { return x * std::exp(others * std::log1p(-x)) - p; };
    auto df = [&](double x) {
      return std::exp((others - 1.0) * std::log1p(-x)) * (1.0 - n * x);
    };
    double lo = 0.0;
    double hi = 1.0 / n;
    if (cfg.bracket) {
      lo = cfg.bracket->first;
      hi = cfg.bracket->second;
    }
    if (f(hi) < 0.0) {
      fail(ErrorKind::over_capacity,
           "p = " + fmt_double(p) + " exceeds max x(1-x)^(N-1) = " +
               fmt_double(f(hi) + p) + " for N = " + std::to_string(n));
    }
    p_tx = bracketed_newton(f, df, lo, hi, cfg);
  }

  ProtocolSolution s;
  s.p_tx = p_tx;
  s.p_cl = n > 1 ? complement_power(p_tx, others) : 0.0;
  if (s.p_cl >= 0.5) {
    fail(ErrorKind::validity,
         "p_cl = " + fmt_double(s.p_cl) + " >= 0.5 at N = " +
             std::to_string(n) + ", p = " + fmt_double(p));
  }
  s.p_idle = analytic::idle_probability(p, s.p_cl, params.min_window);
  s.mu = analytic::service_rate(p, s.p_idle);
  s.stable = p < s.mu;
  if (s.stable) {
    s.beta = analytic::system_time_parameter(p, s.mu);
    s.avg_aoi = analytic::average_aoi(p, s.mu);
  } else {
    s.beta = 0.0;
    s.avg_aoi = std::numeric_limits<double>::infinity();
  }
  return s;
}

double max_packet_rate(int n_nodes, int w0, const SolverConfig& cfg) {
  if (n_nodes < 1 || w0 < 1) {
    fail(ErrorKind::domain, "max_packet_rate needs N >= 1 and w0 >= 1");
  }
  if (n_nodes == 1) {
    return 2.0 / (w0 + 1.0);
  }
  const double others = static_cast<double>(n_nodes - 1);
  // p_tx where p_cl reaches 0.5.
  const double x_half = -std::expm1(std::log(0.5) / others);

  auto h = [&](double x) {
    const double keep = std::exp(others * std::log1p(-x));
    const double c = -std::expm1(others * std::log1p(-x));
    return x * unsaturated_numerator(c, w0) - 2.0 * keep * (1.0 - 2.0 * c);
  };
  auto dh = [&](double x) {
    const double keep = std::exp(others * std::log1p(-x));
    const double keep_d = std::exp((others - 1.0) * std::log1p(-x));
    const double c = -std::expm1(others * std::log1p(-x));
    const double dc = others * keep_d;
    return unsaturated_numerator(c, w0) + x * (8.0 * c - (w0 + 4.0)) * dc +
           2.0 * others * keep_d * (1.0 - 2.0 * c) + 4.0 * keep * dc;
  };

  double lo = 0.0;
  double hi = x_half;
  if (cfg.bracket) {
    lo = cfg.bracket->first;
    hi = cfg.bracket->second;
  }
  const auto cell = first_sign_change(h, lo, hi, 4096);
  if (!cell) {
    fail(ErrorKind::infeasible_load,
         "no saturation root with p_cl < 0.5 for N = " + std::to_string(n_nodes));
  }
  const double x = cell->first == cell->second
                       ? cell->first
                       : bracketed_newton(h, dh, cell->first, cell->second, cfg);
  return x * std::exp(others * std::log1p(-x));
}

long max_node_count(double p, int w0, const SolverConfig& cfg) {
  if (w0 < 1) {
    fail(ErrorKind::domain, "w0 must be >= 1");
  }
  if (!(p > 0.0 && p < 2.0 / (w0 + 1.0))) {
    fail(ErrorKind::domain,
         "p = " + fmt_double(p) + " outside (0, 2/(w0+1)): a single node saturates");
  }
  auto q = [&](double c) {
    return 2.0 * (1.0 - c) * (1.0 - c) * (1.0 - 2.0 * c) -
           p * unsaturated_numerator(c, w0);
  };
  auto dq = [&](double c) {
    return -4.0 * (1.0 - c) * (1.0 - 2.0 * c) - 4.0 * (1.0 - c) * (1.0 - c) -
           p * (8.0 * c - (w0 + 4.0));
  };
  double lo = 0.0;
  double hi = 0.5;
  if (cfg.bracket) {
    lo = cfg.bracket->first;
    hi = cfg.bracket->second;
  }
  const auto cell = first_sign_change(q, lo, hi, 4096);
  if (!cell) {
    fail(ErrorKind::infeasible_load, "no saturation root p_cl in (0, 0.5)");
  }
  const double c = cell->first == cell->second
                       ? cell->first
                       : bracketed_newton(q, dq, cell->first, cell->second, cfg);
  const double p_tx = p / (1.0 - c);
  if (p_tx >= 1.0) {
    fail(ErrorKind::domain, "saturation p_tx >= 1");
  }
  double n_star = std::log1p(-c) / std::log1p(-p_tx) + 1.0;
  const double nearest = std::round(n_star);
  if (std::abs(n_star - nearest) < 1e-9) {
    n_star = nearest;
  }
  return static_cast<long>(std::floor(n_star));
}

}  // namespace csma_aoi
