#pragma once

// Slot-synchronous Monte Carlo model of N CSMA/CA nodes with Bernoulli
// arrivals, binary exponential backoff, busy-channel freezing and per-node
// age of information.
//
// Slot m, as seen from the state at the start of the slot:
//   1. every backlogged node whose counter is 0 transmits; one transmitter
//      succeeds, two or more collide;
//   2. backlogged non-transmitters decrement iff nobody transmitted;
//   3. the successful node pops its head-of-line packet (generated in slot u)
//      and the monitor's age for that node becomes m - u + 1;
//   4. colliders move to the next stage (capped) with a fresh counter;
//   5. Bernoulli(p) arrivals join the queues; an idle node that receives a
//      packet starts stage 0 with a counter uniform on [0, w0 - 1] and may
//      transmit from slot m + 1 on.
// A node counts as idle in slot m if its buffer was empty at slot start.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "csma_aoi/params.hpp"

namespace csma_aoi {

// When a backlogged node that is not transmitting holds its counter.
//   busy_channel: whenever any other node transmits (carrier sense);
//   collision:    only when two or more other nodes transmit.
enum class FreezeRule { busy_channel, collision };

struct NodeState {
  static constexpr int kIdle = -1;

  int stage = kIdle;
  std::int64_t counter = 0;
  std::deque<std::int64_t> queue;  // generation slots, head first
  std::int64_t age = 0;
  std::optional<std::int64_t> last_delivered_generation;
  std::int64_t service_start = 0;  // slot at whose end the HOL packet's first counter was drawn

  bool idle() const { return stage == kIdle; }
};

enum class SlotEvent { idle, success, collision };

struct SlotOutcome {
  SlotEvent event = SlotEvent::idle;
  int node = -1;               // successful node
  int colliders = 0;           // number of transmitters on collision
  std::int64_t generation = 0; // delivered packet's generation slot
  std::int64_t service_time = 0;
  std::int64_t system_time = 0;  // delivery slot - generation slot
  int attempts = 0;            // transmitters this slot
  int backlogged = 0;          // non-idle nodes at slot start
  int arrivals = 0;
};

class Network {
 public:
  Network(const NetworkParams& params, int stage_cap, std::uint64_t seed,
          FreezeRule freeze = FreezeRule::busy_channel);

  // Advances one slot with internally generated Bernoulli arrivals.
  SlotOutcome step();
  // Advances one slot with caller-supplied arrivals (one flag per node).
  SlotOutcome step(std::span<const bool> arrivals);

  std::int64_t slot() const { return slot_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const NodeState& node(int i) const { return nodes_.at(i); }
  // Test hook: overwrite a node's protocol state.
  void set_node(int i, NodeState state);

  std::int64_t window(int stage) const { return window_at(params_.min_window, stage); }
  int stage_cap() const { return stage_cap_; }
  std::int64_t total_queue() const { return total_queue_; }
  // Sum over nodes of the current age.
  std::int64_t total_age() const { return total_age_; }

 private:
  std::int64_t draw_counter(int stage);
  std::int64_t draw_gap();
  SlotOutcome advance(std::span<const char> arrivals);

  NetworkParams params_;
  int stage_cap_;
  FreezeRule freeze_;
  std::mt19937_64 rng_;
  std::geometric_distribution<std::int64_t> gap_;
  std::vector<NodeState> nodes_;
  std::vector<std::int64_t> next_arrival_;
  std::vector<int> transmitters_;
  std::vector<char> arrival_flags_;
  std::int64_t slot_ = 0;
  std::int64_t total_queue_ = 0;
  std::int64_t total_age_ = 0;
  int backlogged_ = 0;
};

struct SimulationConfig {
  NetworkParams params;
  std::int64_t horizon = 1'000'000;
  std::int64_t warmup = 10'000;
  std::uint64_t seed = 1;
  int stage_cap = 24;
  int batches = 20;  // batch-means standard errors
  FreezeRule freeze = FreezeRule::busy_channel;

  void validate() const;
};

struct SimulationStats {
  // Measured over slots [warmup, horizon).
  double empirical_p_tx = 0.0;
  double empirical_p_cl = 0.0;
  double empirical_p_idle = 0.0;
  double empirical_mu = 0.0;
  double mean_aoi = 0.0;
  double mean_system_time = 0.0;
  double mean_service_time = 0.0;
  double var_service_time = 0.0;
  double delivery_rate = 0.0;  // deliveries per node-slot
  std::int64_t delivered = 0;
  std::map<std::int64_t, std::int64_t> service_time_histogram;

  // Batch-means standard errors.
  double se_p_tx = 0.0;
  double se_p_cl = 0.0;
  double se_mu = 0.0;
  double se_aoi = 0.0;

  // Whole-run accounting, slot 0 to horizon.
  std::int64_t arrivals = 0;
  std::int64_t deliveries = 0;
  std::int64_t final_queue_total = 0;
  std::int64_t success_slots = 0;
  std::int64_t collision_slots = 0;
  std::int64_t idle_slots = 0;
  bool stable = true;  // heuristic: no significant upward queue trend

  bool operator==(const SimulationStats&) const = default;
};

// Optional outputs produced while simulating.
struct TraceSinks {
  // One line per slot: slot,event,queue_total with event I, S:<node>, C:<k>.
  std::ostream* slot_trace = nullptr;
  // Two-column CSV "slot,age" for aoi_node.
  std::ostream* aoi_path = nullptr;
  int aoi_node = 0;
};

SimulationStats simulate(const SimulationConfig& cfg, const TraceSinks& sinks = {});

struct AoiSample {
  std::int64_t slot;
  std::int64_t age;
  bool operator==(const AoiSample&) const = default;
};

// Age of `node` at the end of every slot of the run.
std::vector<AoiSample> record_aoi_path(const SimulationConfig& cfg, int node);

}  // namespace csma_aoi
