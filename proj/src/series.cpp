#include <cmath>

#include "csma_aoi/errors.hpp"
#include "csma_aoi/oracles.hpp"

namespace csma_aoi::oracles {

namespace {

// Neumaier compensated sum.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

constexpr int kMaxSeriesStage = 1000;
constexpr double kDirectWindow = 4096.0;

}  // namespace

SeriesIdleResult series_idle_probability(double p, double p_cl, int w0,
                                         int max_stage) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::domain, "p outside (0, 1)");
  if (p_cl < 0.0) fail(ErrorKind::domain, "p_cl negative");
  if (p_cl >= 0.5) fail(ErrorKind::divergence, "stage sums diverge for p_cl >= 0.5");
  if (w0 < 1) fail(ErrorKind::domain, "w0 must be >= 1");
  if (max_stage < 0 || max_stage > kMaxSeriesStage) {
    fail(ErrorKind::domain, "max_stage outside [0, 1000]");
  }
  const double q = 1.0 - p_cl;
  Accumulator busy;
  for (int i = 0; i <= max_stage; ++i) {
    const double w = std::ldexp(static_cast<double>(w0), i);
    const double head = p * std::pow(p_cl, i);
    busy.add(head);
    if (w <= kDirectWindow) {
      for (int j = static_cast<int>(w) - 1; j >= 1; --j) {
        busy.add(head * (w - j) / (w * q));
      }
    } else {
      // sum_{j=1}^{w-1} (w - j) = w (w - 1) / 2, with c^i w = w0 (2c)^i.
      const double scaled = p * w0 * std::pow(2.0 * p_cl, i);
      busy.add((scaled - head) / (2.0 * q));
    }
  }
  // Stages beyond max_stage, summed in closed form.
  const int next = max_stage + 1;
  const double tail = p * (1.0 - 2.0 * p_cl) * std::pow(p_cl, next) / (2.0 * q * q) +
                      p * w0 * std::pow(2.0 * p_cl, next) / (2.0 * q * (1.0 - 2.0 * p_cl));
  SeriesIdleResult r;
  r.tail_bound = tail;
  r.value = 1.0 - busy.value() - tail;
  return r;
}

}  // namespace csma_aoi::oracles
