#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "csma_aoi/analytic.hpp"
#include "csma_aoi/errors.hpp"
#include "csma_aoi/oracles.hpp"
#include "support/reference.hpp"

using namespace csma_aoi;
using namespace csma_aoi::analytic;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const ModelError& e) {
    return e.kind();
  }
  FAIL("expected a ModelError");
  return ErrorKind::io;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Frozen from ref::idle_by_stages(0.01, 0.2167, 8).
constexpr double kIdle2167 = 0.905255597576377;
// Frozen from the closed form evaluated in long double, see the test below.
constexpr double kEntry2167_2_3 = 0.000543297511330269;

}  // namespace

TEST_CASE("stationary_entry examples") {
  CHECK(stationary_entry(0.1, 0.2, 8, 1, 0) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(stationary_entry(0.1, 0.0, 8, 0, 7) == doctest::Approx(0.0125).epsilon(1e-15));

  const long double c = 0.2167L;
  // w_2 = 32.
  const long double direct = 0.01L * c * c * (32.0L - 3.0L) / (32.0L * (1.0L - c));
  CHECK(std::abs(static_cast<double>(direct) - kEntry2167_2_3) < 1e-18);
  CHECK(stationary_entry(0.01, 0.2167, 8, 2, 3) == doctest::Approx(kEntry2167_2_3).epsilon(1e-13));

  // Chain oracle. Entries below the folded stage only feel the truncation
  // through arrivals lost at a full buffer, so a shallow, tall chain suffices.
  const oracles::TruncatedChain chain(0.01, 0.2167, 8, 6, 48);
  const auto sol = oracles::solve_truncated(chain, {});
  CHECK(std::abs(sol.b(2, 3) - kEntry2167_2_3) < 1e-9);
}

TEST_CASE("stationary_entry domain errors") {
  CHECK(kind_of([] { stationary_entry(0.1, 0.2, 8, 0, 8); }) == ErrorKind::domain);
  CHECK(kind_of([] { stationary_entry(0.1, 0.2, 8, 1, -1); }) == ErrorKind::domain);
  CHECK(kind_of([] { stationary_entry(0.0, 0.2, 8, 0, 0); }) == ErrorKind::domain);
  CHECK(kind_of([] { stationary_entry(0.1, 1.0, 8, 0, 0); }) == ErrorKind::domain);
  CHECK(kind_of([] { stationary_entry(0.1, 0.2, 8, -1, 0); }) == ErrorKind::domain);
  // Last counter of stage 1 is w_1 - 1 = 15.
  CHECK(stationary_entry(0.1, 0.2, 8, 1, 15) > 0.0);
}

TEST_CASE("idle_probability examples") {
  CHECK(idle_probability(0.1, 0.0, 8) == doctest::Approx(0.55).epsilon(1e-15));

  CHECK(std::abs(static_cast<double>(ref::idle_by_stages(0.01L, 0.2167L, 8)) - kIdle2167) < 1e-15);
  CHECK(std::abs(idle_probability(0.01, 0.2167, 8) - kIdle2167) < 1e-12);
  const auto series = oracles::series_idle_probability(0.01, 0.2167, 8, 60);
  CHECK(std::abs(series.value - kIdle2167) < 1e-10);

  CHECK(kind_of([] { idle_probability(0.2, 0.5, 8); }) == ErrorKind::divergence);
  CHECK(kind_of([] { idle_probability(0.2, 0.7, 8); }) == ErrorKind::divergence);
  // 1 - 0.3 * 9 / 2 < 0: the backoff process cannot keep up.
  CHECK(kind_of([] { idle_probability(0.3, 0.0, 8); }) == ErrorKind::infeasible_load);
  CHECK(backlog_probability(0.3, 0.0, 8) == doctest::Approx(1.35));
}

TEST_CASE("service_rate examples") {
  CHECK(service_rate(0.3, 0.0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(service_rate(0.1, 0.55) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(service_rate(0.01, kIdle2167) == doctest::Approx(0.105547132539692).epsilon(1e-12));
  CHECK(kind_of([] { service_rate(0.1, 1.0); }) == ErrorKind::domain);
  CHECK(kind_of([] { service_rate(0.1, -0.1); }) == ErrorKind::domain);
  CHECK(kind_of([] { service_rate(0.9, 0.5); }) == ErrorKind::infeasible_load);
}

TEST_CASE("system_time_parameter examples") {
  CHECK(system_time_parameter(0.1, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double mu = service_rate(0.01, kIdle2167);
  CHECK(system_time_parameter(0.01, mu) == doctest::Approx((mu - 0.01) / 0.99).epsilon(1e-14));
  CHECK(system_time_parameter(0.01, 0.1056) == doctest::Approx(0.0966).epsilon(1e-3));
  CHECK(kind_of([] { system_time_parameter(0.1, 0.1); }) == ErrorKind::instability);
  CHECK(kind_of([] { system_time_parameter(0.2, 0.1); }) == ErrorKind::instability);
}

TEST_CASE("system_time_pgf examples and moments") {
  CHECK(system_time_pgf(0.5, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(system_time_pgf(1.0, 0.7) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(system_time_pgf(0.25, 0.5) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(kind_of([] { system_time_pgf(0.0, 0.5); }) == ErrorKind::domain);
  CHECK(kind_of([] { system_time_pgf(0.5, 1.5); }) == ErrorKind::domain);

  // Second-order one-sided difference at z = 1.
  for (double beta : {0.05, 0.0966, 0.25, 0.5, 0.9, 1.0}) {
    const double h = 1e-5;
    const double d = (3.0 * system_time_pgf(beta, 1.0) - 4.0 * system_time_pgf(beta, 1.0 - h) +
                      system_time_pgf(beta, 1.0 - 2.0 * h)) / (2.0 * h);
    CHECK(std::abs(d - 1.0 / beta) < 1e-6 * std::max(1.0, 1.0 / beta));
  }
}

TEST_CASE("average_aoi examples") {
  CHECK(average_aoi(0.5, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
  // 20 + 0.225 + 0.95 / (31/180) - 0.05 * 81 / 4 = 3066 / 124 exactly.
  CHECK(average_aoi(0.05, 2.0 / 9.0) == doctest::Approx(24.7286290322581).epsilon(1e-13));
  const double mu = service_rate(0.01, kIdle2167);
  CHECK(average_aoi(0.01, mu) == doctest::Approx(109.6).epsilon(2e-3));
  CHECK(kind_of([] { average_aoi(0.1, 0.1); }) == ErrorKind::instability);
}

TEST_CASE("aoi_from_area_decomposition examples") {
  CHECK(aoi_from_area_decomposition(0.5, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(rel(aoi_from_area_decomposition(0.2, 0.4), average_aoi(0.2, 0.4)) < 1e-12);
  const double mu = service_rate(0.01, kIdle2167);
  CHECK(rel(aoi_from_area_decomposition(0.01, mu), average_aoi(0.01, mu)) < 1e-12);
  CHECK(kind_of([] { aoi_from_area_decomposition(0.3, 0.2); }) == ErrorKind::instability);
}

TEST_CASE("queue_moments") {
  const QueueMoments m = queue_moments(0.05, 0.2);
  CHECK(m.mean_interarrival == doctest::Approx(20.0));
  CHECK(m.second_moment_interarrival == doctest::Approx(1.95 / 0.0025));
  CHECK(m.mean_service == doctest::Approx(5.0));
  CHECK(m.mean_xw > 0.0);
  CHECK(m.mean_area > 0.0);
}

TEST_CASE("property: AoI identity on a 100-point stable grid") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  while (checked < 100) {
    const double mu = 0.01 + 0.99 * u(rng);
    const double p = mu * (0.001 + 0.998 * u(rng));
    CHECK(rel(aoi_from_area_decomposition(p, mu), average_aoi(p, mu)) < 1e-12);
    ++checked;
  }
}

TEST_CASE("property: balance b(i+1,0) = p_cl b(i,0) exactly") {
  for (double c : {0.0, 0.1, 0.2167, 0.3, 0.45, 0.49}) {
    for (int i = 0; i < 40; ++i) {
      CHECK(stationary_entry(0.013, c, 8, i + 1, 0) == c * stationary_entry(0.013, c, 8, i, 0));
    }
  }
}

TEST_CASE("property: entries decrease in the counter and stay in [0,1]") {
  for (double c : {0.0, 0.2, 0.4}) {
    for (int i = 0; i <= (c > 0.0 ? 3 : 0); ++i) {
      const std::int64_t w = window_at(8, i);
      double prev = 2.0;
      for (std::int64_t j = 1; j < w; ++j) {
        const double b = stationary_entry(0.05, c, 8, i, j);
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
        CHECK(b < prev);
        prev = b;
      }
    }
  }
}

TEST_CASE("property: closed form equals summed series within 1e-10") {
  for (double p : {0.001, 0.005, 0.01, 0.02}) {
    for (double c : {0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45}) {
      for (int w0 : {4, 8, 16, 32}) {
        const double closed = 1.0 - backlog_probability(p, c, w0);
        const double summed = static_cast<double>(ref::idle_by_stages(p, c, w0));
        CHECK(std::abs(closed - summed) < 1e-10);
      }
    }
  }
}

TEST_CASE("StationaryDistribution sandwich and direct enumeration") {
  for (double c : {0.0, 0.1, 0.2, 0.3, 0.45}) {
    for (int cap : {0, 3, 10, 40}) {
      const StationaryDistribution d(0.01, c, 8, cap);
      const double covered = d.b_idle() + d.truncated_mass();
      CHECK(covered <= 1.0 + 1e-12);
      CHECK(covered + d.tail_mass_bound() >= 1.0 - 1e-12);
      CHECK(d.at(cap, 0) == doctest::Approx(0.01 * std::pow(c, cap)).epsilon(1e-12));
    }
  }
  // Enumerated entries add up to the per-stage closed form.
  const StationaryDistribution d(0.02, 0.25, 8, 6);
  double total = 0.0;
  for (int i = 0; i <= 6; ++i) {
    double stage = 0.0;
    for (std::int64_t j = 0; j < d.window(i); ++j) stage += d.at(i, j);
    CHECK(stage == doctest::Approx(d.stage_mass(i)).epsilon(1e-13));
    total += stage;
  }
  CHECK(total == doctest::Approx(d.truncated_mass()).epsilon(1e-13));
  CHECK(kind_of([] { StationaryDistribution(0.01, 0.2, 8, 49); }) == ErrorKind::domain);
  CHECK(kind_of([&] { d.at(7, 0); }) == ErrorKind::domain);
}

TEST_CASE("normalization within 1e-8 at stage_cap 40 where the omitted stages allow it") {
  // The omitted mass after stage 40 is about p w0 (2 p_cl)^41 / (2(1-p_cl)(1-2p_cl)),
  // below 1e-8 for p_cl up to 0.3 but about 1e-2 at p_cl = 0.45.
  for (double p : {0.001, 0.01, 0.02}) {
    for (double c : {0.0, 0.1, 0.2, 0.3}) {
      const StationaryDistribution d(p, c, 8, 40);
      const double covered = d.b_idle() + d.truncated_mass();
      CHECK(covered >= 1.0 - 1e-8);
      CHECK(covered <= 1.0 + 1e-12);
    }
  }
  const StationaryDistribution heavy(0.01, 0.45, 8, 40);
  CHECK(1.0 - heavy.b_idle() - heavy.truncated_mass() > 1e-3);
  CHECK(heavy.tail_mass_bound() == doctest::Approx(1.0 - heavy.b_idle() - heavy.truncated_mass()).epsilon(1e-9));
}

TEST_CASE("property: AoI grows without bound as p approaches mu") {
  for (double mu : {0.05, 0.2, 0.6, 0.95}) {
    double prev = 0.0;
    for (int k = 1; k <= 9; ++k) {
      const double p = mu * (1.0 - std::pow(10.0, -k));
      const double a = average_aoi(p, mu);
      CHECK(a > prev);
      prev = a;
    }
    CHECK(prev > 1e7);
  }
}
