#pragma once

// Brute-force counterparts of the closed forms: an explicitly enumerated
// (stage, counter, buffer) Markov chain solved by power iteration, a
// Geom/Geom/1 queue simulator, and a direct summation of the backoff
// occupancy series. None of these call into analytic_core.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace csma_aoi::oracles {

// ---------------------------------------------------------------------------
// Truncated (stage, counter, buffer) chain with exogenous collision
// probability. State 0 is the idle state; state (i, j, k) has
// 0 <= i <= max_stage, 0 <= j < w_i, 1 <= k <= max_buffer.
//
// Mass leaving the truncated region is folded onto the boundary: a collision
// at max_stage redraws within max_stage's window, and an arrival at
// max_buffer leaves the buffer at max_buffer.
class TruncatedChain {
 public:
  struct State {
    int stage;             // -1 for idle
    std::int64_t counter;  // -1 for idle
    int buffer;            // 0 for idle
    bool operator==(const State&) const = default;
  };
  using Transition = std::pair<std::size_t, double>;

  TruncatedChain(double p, double p_cl, int w0, int max_stage, int max_buffer);

  std::size_t size() const { return size_; }
  double p() const { return p_; }
  double p_cl() const { return p_cl_; }
  int w0() const { return w0_; }
  int max_stage() const { return max_stage_; }
  int max_buffer() const { return max_buffer_; }
  std::int64_t window(int stage) const;
  // Index of (stage, 0, 1); states of a stage are contiguous.
  std::size_t stage_begin(int stage) const;

  std::size_t index_of(const State& s) const;
  State state_at(std::size_t index) const;

  // Outgoing transitions of one state, duplicates merged.
  std::vector<Transition> transition_row(std::size_t index) const;

  // Number of states a chain with these dimensions would have.
  static std::size_t count_states(int w0, int max_stage, int max_buffer);

 private:
  double p_;
  double p_cl_;
  int w0_;
  int max_stage_;
  int max_buffer_;
  std::vector<std::size_t> stage_offset_;  // in counter units
  std::size_t size_;
};

struct ChainOptions {
  double tolerance = 1e-12;           // L1 change between iterates
  long max_iterations = 5'000'000;
  double boundary_tolerance = 1e-8;   // estimated mass outside the truncation
  std::size_t state_budget = 1u << 21;
  bool parallel = true;               // OpenMP kernel, else serial reference
};

struct ChainStationary {
  int max_stage = 0;   // truncation actually used
  int max_buffer = 0;
  int w0 = 0;
  std::vector<double> pi;  // indexed as TruncatedChain
  double idle = 0.0;
  // b_{i,j,*} by stage: marginal[i][j].
  std::vector<std::vector<double>> marginal;
  double stage_boundary_mass = 0.0;
  double buffer_boundary_mass = 0.0;
  double boundary_mass = 0.0;
  long iterations = 0;
  double last_change = 0.0;

  double b(int stage, std::int64_t counter) const {
    return marginal.at(stage).at(static_cast<std::size_t>(counter));
  }
};

// Stationary distribution of the chain. max_stage and max_buffer are upper
// bounds: the truncation starts small and grows until the estimated mass
// beyond it is below opts.boundary_tolerance.
//
// Throws truncation_too_small when the bounds are reached first,
// state_space_too_large when the next truncation exceeds opts.state_budget,
// divergence for p_cl >= 0.5.
ChainStationary chain_stationary(double p, double p_cl, int w0, int max_stage,
                                 int max_buffer, const ChainOptions& opts = {});

// Power iteration on one fixed truncation, starting from `start` (idle mass
// when empty).
ChainStationary solve_truncated(const TruncatedChain& chain,
                                const ChainOptions& opts,
                                std::vector<double> start = {});

// ---------------------------------------------------------------------------
// Single Geom/Geom/1 queue: Bernoulli(p) arrivals, each service slot
// completes with probability mu. A packet generated in slot u starts
// service in slot u + 1 at the earliest.
struct QueueOracleResult {
  double mean_system_time = 0.0;   // E[T], T = delivery slot - generation slot
  double mean_waiting_time = 0.0;  // E[W]
  double mean_service_time = 0.0;  // E[S]
  double mean_xw = 0.0;            // E[X_k W_k]
  double mean_aoi = 0.0;           // time average, age = m - U + 1
  std::int64_t deliveries = 0;
};

QueueOracleResult queue_oracle(double p, double mu, std::int64_t horizon,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// 1 - sum of b_{i,j,*} for i <= max_stage, summed entry by entry, plus the
// exact mass of the omitted stages.
struct SeriesIdleResult {
  double value = 0.0;
  double tail_bound = 0.0;
};

SeriesIdleResult series_idle_probability(double p, double p_cl, int w0,
                                         int max_stage);

}  // namespace csma_aoi::oracles
