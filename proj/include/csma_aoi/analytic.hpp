#pragma once

// Closed-form performance of an unsaturated CSMA/CA node: stationary
// backoff occupancy, idle probability, service rate, Geom/Geom/1 system time
// and average age of information. Everything here is a pure function.

#include <cstdint>

#include "csma_aoi/params.hpp"

namespace csma_aoi {

struct ProtocolSolution {
  double p_tx = 0.0;    // attempt probability per slot
  double p_cl = 0.0;    // collision probability seen by an attempt
  double p_idle = 0.0;  // empty-buffer probability
  double mu = 0.0;      // service rate per slot
  double beta = 0.0;    // geometric system-time parameter, 0 when unstable
  double avg_aoi = 0.0; // slots, +inf when unstable
  bool stable = false;  // p < mu
};

struct QueueMoments {
  double mean_interarrival = 0.0;           // E[X]
  double second_moment_interarrival = 0.0;  // E[X^2]
  double mean_service = 0.0;                // E[S]
  double mean_xw = 0.0;                     // E[X_k W_k]
  double mean_area = 0.0;                   // E[A_k]
};

namespace analytic {

// b_{i,j,*}: stationary mass of backoff stage i, counter j, aggregated over
// buffer occupancy. Uses (w_i - j) in the numerator.
double stationary_entry(double p, double p_cl, int w0, int stage,
                        std::int64_t counter);

// Sum of all b_{i,j,*}, i.e. 1 - p_idle, without the feasibility check.
// Throws divergence for p_cl >= 0.5.
double backlog_probability(double p, double p_cl, int w0);

// Throws divergence for p_cl >= 0.5 and infeasible_load when the result is
// negative (the backoff process cannot keep up with p).
double idle_probability(double p, double p_cl, int w0);

// mu = p / (1 - p_idle).
double service_rate(double p, double p_idle);

// beta = (mu - p) / (1 - p); requires p < mu.
double system_time_parameter(double p, double mu);

// G_T(z) = beta z / (1 - (1 - beta) z).
double system_time_pgf(double beta, double z);

double average_aoi(double p, double mu);

QueueMoments queue_moments(double p, double mu);

// Average AoI assembled as p * E[A_k] from the interarrival/waiting moments.
// Algebraically identical to average_aoi().
double aoi_from_area_decomposition(double p, double mu);

}  // namespace analytic

// Truncated view of the stationary distribution. Entries are produced on
// demand because stage windows double; only stages <= stage_cap are exposed
// and the mass of the remaining stages is reported as tail_mass_bound.
class StationaryDistribution {
 public:
  StationaryDistribution(double p, double p_cl, int w0, int stage_cap);

  double at(int stage, std::int64_t counter) const;
  std::int64_t window(int stage) const { return window_at(w0_, stage); }
  double stage_mass(int stage) const;
  double truncated_mass() const;  // sum of entries with stage <= stage_cap
  double b_idle() const { return b_idle_; }
  double tail_mass_bound() const { return tail_; }
  int stage_cap() const { return stage_cap_; }

 private:
  double p_;
  double p_cl_;
  int w0_;
  int stage_cap_;
  double b_idle_;
  double tail_;
};

}  // namespace csma_aoi
