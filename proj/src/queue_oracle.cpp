#include <deque>
#include <random>

#include "csma_aoi/errors.hpp"
#include "csma_aoi/oracles.hpp"

namespace csma_aoi::oracles {

QueueOracleResult queue_oracle(double p, double mu, std::int64_t horizon,
                               std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::domain, "p outside (0, 1)");
  if (!(mu > 0.0 && mu <= 1.0)) fail(ErrorKind::domain, "mu outside (0, 1]");
  if (p >= mu) fail(ErrorKind::instability, "queue oracle needs p < mu");
  if (horizon < 1) fail(ErrorKind::domain, "horizon must be >= 1");

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution arrive(p);
  std::bernoulli_distribution serve(mu);

  struct Packet {
    std::int64_t generated;
    std::int64_t interarrival;  // 0 for the first packet
  };
  std::deque<Packet> queue;
  std::int64_t last_generated = -1;
  std::int64_t hol_start = 0;  // first slot the head packet is served in

  double sum_t = 0.0, sum_w = 0.0, sum_s = 0.0, sum_xw = 0.0;
  std::int64_t n_xw = 0;
  std::int64_t delivered = 0;
  std::int64_t age = 0;
  bool seen = false;
  double age_sum = 0.0;
  std::int64_t age_slots = 0;

  for (std::int64_t m = 0; m < horizon; ++m) {
    // Service acts on packets generated before this slot.
    bool reset = false;
    if (!queue.empty() && serve(rng)) {
      const Packet k = queue.front();
      queue.pop_front();
      const std::int64_t t = m - k.generated;
      const std::int64_t s = m - hol_start + 1;
      const std::int64_t w = t - s;
      sum_t += static_cast<double>(t);
      sum_s += static_cast<double>(s);
      sum_w += static_cast<double>(w);
      if (k.interarrival > 0) {
        sum_xw += static_cast<double>(k.interarrival) * static_cast<double>(w);
        ++n_xw;
      }
      ++delivered;
      age = t + 1;
      seen = true;
      reset = true;
      if (!queue.empty()) hol_start = m + 1;
    }
    if (arrive(rng)) {
      const std::int64_t x = last_generated < 0 ? 0 : m - last_generated;
      last_generated = m;
      if (queue.empty()) hol_start = m + 1;
      queue.push_back({m, x});
    }
    if (!reset) ++age;
    if (seen) {
      age_sum += static_cast<double>(age);
      ++age_slots;
    }
  }

  QueueOracleResult r;
  r.deliveries = delivered;
  if (delivered > 0) {
    const double n = static_cast<double>(delivered);
    r.mean_system_time = sum_t / n;
    r.mean_waiting_time = sum_w / n;
    r.mean_service_time = sum_s / n;
  }
  if (n_xw > 0) r.mean_xw = sum_xw / static_cast<double>(n_xw);
  if (age_slots > 0) r.mean_aoi = age_sum / static_cast<double>(age_slots);
  return r;
}

}  // namespace csma_aoi::oracles
