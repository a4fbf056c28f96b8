#include "csma_aoi/analytic.hpp"

#include <cmath>
#include <sstream>

#include "csma_aoi/errors.hpp"

namespace csma_aoi {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::infeasible_load: return "infeasible_load";
    case ErrorKind::instability: return "instability";
    case ErrorKind::over_capacity: return "over_capacity";
    case ErrorKind::validity: return "validity";
    case ErrorKind::no_convergence: return "no_convergence";
    case ErrorKind::truncation_too_small: return "truncation_too_small";
    case ErrorKind::state_space_too_large: return "state_space_too_large";
    case ErrorKind::invalid_spec: return "invalid_spec";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

void NetworkParams::validate() const {
  if (n_nodes < 1) {
    fail(ErrorKind::domain, "n_nodes must be >= 1");
  }
  if (!(packet_rate > 0.0 && packet_rate < 1.0)) {
    fail(ErrorKind::domain, "packet_rate must lie in (0, 1)");
  }
  if (min_window < 1) {
    fail(ErrorKind::domain, "min_window must be >= 1");
  }
}

namespace {

std::string describe(const char* name, double value) {
  std::ostringstream os;
  os << name << " = " << value;
  return os.str();
}

void require_open_unit(const char* name, double x) {
  if (!(x > 0.0 && x < 1.0)) {
    fail(ErrorKind::domain, describe(name, x) + " outside (0, 1)");
  }
}

void require_collision(double p_cl) {
  if (!(p_cl >= 0.0 && p_cl < 1.0)) {
    fail(ErrorKind::domain, describe("p_cl", p_cl) + " outside [0, 1)");
  }
}

void require_window(int w0) {
  if (w0 < 1) {
    fail(ErrorKind::domain, "min_window must be >= 1");
  }
}

void require_stable(double p, double mu) {
  require_open_unit("p", p);
  if (!(mu > 0.0 && mu <= 1.0)) {
    fail(ErrorKind::domain, describe("mu", mu) + " outside (0, 1]");
  }
  if (p >= mu) {
    fail(ErrorKind::instability,
         describe("p", p) + " >= " + describe("mu", mu) + ", AoI unbounded");
  }
}

}  // namespace

namespace analytic {

double stationary_entry(double p, double p_cl, int w0, int stage,
                        std::int64_t counter) {
  require_open_unit("p", p);
  require_collision(p_cl);
  require_window(w0);
  if (stage < 0 || stage > 52) {
    fail(ErrorKind::domain, "stage out of range");
  }
  const double w = std::ldexp(static_cast<double>(w0), stage);
  if (counter < 0 || static_cast<double>(counter) > w - 1.0) {
    fail(ErrorKind::domain, "counter out of range for stage window");
  }
  // Built by repeated multiplication so b_{i+1,0} = p_cl * b_{i,0} holds
  // bit for bit.
  double head = p;
  for (int i = 0; i < stage; ++i) head *= p_cl;
  if (counter == 0) {
    return head;
  }
  return head * (w - static_cast<double>(counter)) / (w * (1.0 - p_cl));
}

double backlog_probability(double p, double p_cl, int w0) {
  require_open_unit("p", p);
  require_window(w0);
  if (p_cl < 0.0) {
    fail(ErrorKind::domain, describe("p_cl", p_cl) + " negative");
  }
  if (p_cl >= 0.5) {
    fail(ErrorKind::divergence,
         describe("p_cl", p_cl) + " >= 0.5, backoff stage sums diverge");
  }
  const double q = 1.0 - p_cl;
  const double num = 4.0 * p_cl * p_cl - (w0 + 4.0) * p_cl + w0 + 1.0;
  return p * num / (2.0 * q * q * (1.0 - 2.0 * p_cl));
}

double idle_probability(double p, double p_cl, int w0) {
  const double idle = 1.0 - backlog_probability(p, p_cl, w0);
  if (idle < 0.0) {
    fail(ErrorKind::infeasible_load,
         describe("p_idle", idle) + " < 0: node saturated at " +
             describe("p", p));
  }
  return idle;
}

double service_rate(double p, double p_idle) {
  require_open_unit("p", p);
  if (!(p_idle >= 0.0 && p_idle < 1.0)) {
    fail(ErrorKind::domain, describe("p_idle", p_idle) + " outside [0, 1)");
  }
  const double mu = p / (1.0 - p_idle);
  if (mu > 1.0) {
    fail(ErrorKind::infeasible_load, describe("mu", mu) + " exceeds 1");
  }
  return mu;
}

double system_time_parameter(double p, double mu) {
  require_stable(p, mu);
  return (mu - p) / (1.0 - p);
}

double system_time_pgf(double beta, double z) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    fail(ErrorKind::domain, describe("beta", beta) + " outside (0, 1]");
  }
  if (!(z >= 0.0 && z <= 1.0)) {
    fail(ErrorKind::domain, describe("z", z) + " outside [0, 1]");
  }
  return beta * z / (1.0 - (1.0 - beta) * z);
}

double average_aoi(double p, double mu) {
  require_stable(p, mu);
  return 1.0 / p + p / mu + (1.0 - p) / (mu - p) - p / (mu * mu);
}

QueueMoments queue_moments(double p, double mu) {
  const double beta = system_time_parameter(p, mu);
  const double busy = 1.0 - (1.0 - p) * (1.0 - beta);
  QueueMoments m;
  m.mean_interarrival = 1.0 / p;
  m.second_moment_interarrival = (2.0 - p) / (p * p);
  m.mean_service = 1.0 / mu;
  m.mean_xw = p * (1.0 - beta) / (beta * busy * busy);
  m.mean_area = 0.5 * m.second_moment_interarrival +
                0.5 * m.mean_interarrival + m.mean_xw +
                m.mean_interarrival * m.mean_service;
  return m;
}

double aoi_from_area_decomposition(double p, double mu) {
  return p * queue_moments(p, mu).mean_area;
}

}  // namespace analytic

StationaryDistribution::StationaryDistribution(double p, double p_cl, int w0,
                                               int stage_cap)
    : p_(p), p_cl_(p_cl), w0_(w0), stage_cap_(stage_cap) {
  if (stage_cap < 0 || stage_cap > 48) {
    fail(ErrorKind::domain, "stage_cap must lie in [0, 48]");
  }
  b_idle_ = analytic::idle_probability(p, p_cl, w0);
  // Remaining stages: p c^i (1-2c)/(2(1-c)) + p w0 (2c)^i / (2(1-c)).
  const double q = 1.0 - p_cl;
  const int next = stage_cap + 1;
  tail_ = p * (1.0 - 2.0 * p_cl) / (2.0 * q) * std::pow(p_cl, next) / q +
          p * w0 * std::pow(2.0 * p_cl, next) / (2.0 * q * (1.0 - 2.0 * p_cl));
}

double StationaryDistribution::at(int stage, std::int64_t counter) const {
  if (stage > stage_cap_) {
    fail(ErrorKind::domain, "stage beyond stage_cap");
  }
  return analytic::stationary_entry(p_, p_cl_, w0_, stage, counter);
}

double StationaryDistribution::stage_mass(int stage) const {
  if (stage < 0 || stage > stage_cap_) {
    fail(ErrorKind::domain, "stage outside [0, stage_cap]");
  }
  const double w = static_cast<double>(window(stage));
  const double head = p_ * std::pow(p_cl_, stage);
  return head * (1.0 + (w - 1.0) / (2.0 * (1.0 - p_cl_)));
}

double StationaryDistribution::truncated_mass() const {
  double sum = 0.0;
  for (int i = stage_cap_; i >= 0; --i) {
    sum += stage_mass(i);
  }
  return sum;
}

}  // namespace csma_aoi
