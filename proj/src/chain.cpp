#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "csma_aoi/chain_kernels.hpp"
#include "csma_aoi/errors.hpp"
#include "csma_aoi/oracles.hpp"

namespace csma_aoi::oracles {

namespace {

constexpr int kMaxStage = 40;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

TruncatedChain::TruncatedChain(double p, double p_cl, int w0, int max_stage,
                               int max_buffer)
    : p_(p), p_cl_(p_cl), w0_(w0), max_stage_(max_stage), max_buffer_(max_buffer) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::domain, "p outside (0, 1)");
  if (!(p_cl >= 0.0 && p_cl < 1.0)) fail(ErrorKind::domain, "p_cl outside [0, 1)");
  if (w0 < 1) fail(ErrorKind::domain, "w0 must be >= 1");
  if (max_stage < 0 || max_stage > kMaxStage) {
    fail(ErrorKind::domain, "max_stage outside [0, 40]");
  }
  if (max_buffer < 1) fail(ErrorKind::domain, "max_buffer must be >= 1");
  stage_offset_.resize(max_stage + 2);
  stage_offset_[0] = 0;
  for (int i = 0; i <= max_stage; ++i) {
    stage_offset_[i + 1] = stage_offset_[i] + static_cast<std::size_t>(window(i));
  }
  size_ = 1 + stage_offset_.back() * static_cast<std::size_t>(max_buffer);
}

std::size_t TruncatedChain::count_states(int w0, int max_stage, int max_buffer) {
  // w0 (2^(I+1) - 1) counter slots per buffer level, plus idle.
  const double counters = static_cast<double>(w0) * (std::ldexp(1.0, max_stage + 1) - 1.0);
  const double total = 1.0 + counters * max_buffer;
  return total > 1e18 ? static_cast<std::size_t>(1e18) : static_cast<std::size_t>(total);
}

std::int64_t TruncatedChain::window(int stage) const {
  return static_cast<std::int64_t>(w0_) << stage;
}

std::size_t TruncatedChain::stage_begin(int stage) const {
  return 1 + stage_offset_.at(stage) * static_cast<std::size_t>(max_buffer_);
}

std::size_t TruncatedChain::index_of(const State& s) const {
  if (s.stage < 0) {
    return 0;
  }
  if (s.stage > max_stage_ || s.counter < 0 || s.counter >= window(s.stage) ||
      s.buffer < 1 || s.buffer > max_buffer_) {
    fail(ErrorKind::domain, "state outside the truncated chain");
  }
  return 1 + (stage_offset_[s.stage] + static_cast<std::size_t>(s.counter)) * max_buffer_ +
         static_cast<std::size_t>(s.buffer - 1);
}

TruncatedChain::State TruncatedChain::state_at(std::size_t index) const {
  if (index == 0) {
    return {-1, -1, 0};
  }
  if (index >= size_) fail(ErrorKind::domain, "state index out of range");
  const std::size_t r = index - 1;
  const std::size_t slot = r / max_buffer_;
  const int k = static_cast<int>(r % max_buffer_) + 1;
  const auto it = std::upper_bound(stage_offset_.begin(), stage_offset_.end(), slot);
  const int i = static_cast<int>(it - stage_offset_.begin()) - 1;
  return {i, static_cast<std::int64_t>(slot - stage_offset_[i]), k};
}

std::vector<TruncatedChain::Transition> TruncatedChain::transition_row(
    std::size_t index) const {
  std::vector<Transition> row;
  auto add = [&](std::size_t to, double pr) {
    if (pr == 0.0) return;
    for (auto& t : row) {
      if (t.first == to) {
        t.second += pr;
        return;
      }
    }
    row.emplace_back(to, pr);
  };
  const double p = p_;
  const double q = 1.0 - p_;
  const double c = p_cl_;
  const double s = 1.0 - p_cl_;
  const int top = max_buffer_;
  auto up = [top](int k) { return std::min(k + 1, top); };

  const State st = state_at(index);
  if (st.stage < 0) {
    add(0, q);
    for (std::int64_t j = 0; j < w0_; ++j) add(index_of({0, j, 1}), p / w0_);
    return row;
  }
  const int i = st.stage;
  const std::int64_t j = st.counter;
  const int k = st.buffer;
  if (j >= 1) {
    add(index, q * c);
    add(index_of({i, j - 1, k}), q * s);
    add(index_of({i, j, up(k)}), p * c);
    add(index_of({i, j - 1, up(k)}), p * s);
    return row;
  }
  // Counter 0: the node transmits.
  for (std::int64_t d = 0; d < w0_; ++d) add(index_of({0, d, k}), p * s / w0_);
  if (k == 1) {
    add(0, q * s);
  } else {
    for (std::int64_t d = 0; d < w0_; ++d) add(index_of({0, d, k - 1}), q * s / w0_);
  }
  const int ni = std::min(i + 1, max_stage_);
  const double w = static_cast<double>(window(ni));
  for (std::int64_t d = 0; d < window(ni); ++d) {
    add(index_of({ni, d, k}), q * c / w);
    add(index_of({ni, d, up(k)}), p * c / w);
  }
  return row;
}

ChainStationary solve_truncated(const TruncatedChain& chain,
                                const ChainOptions& opts,
                                std::vector<double> start) {
  const std::size_t n = chain.size();
  std::vector<double> pi = std::move(start);
  if (pi.empty()) {
    pi.assign(n, 0.0);
    pi[0] = 1.0;
  }
  if (pi.size() != n) fail(ErrorKind::domain, "start vector has the wrong size");
  std::vector<double> next(n, 0.0);

  ChainStationary out;
  out.max_stage = chain.max_stage();
  out.max_buffer = chain.max_buffer();
  out.w0 = chain.w0();

  double change = 1.0;
  long it = 0;
  while (it < opts.max_iterations) {
    change = opts.parallel ? kernels::step_parallel(chain, pi, next)
                           : kernels::step_serial(chain, pi, next);
    pi.swap(next);
    ++it;
    if (it % 1024 == 0) {
      double total = 0.0;
      for (double x : pi) total += x;
      for (double& x : pi) x /= total;
    }
    if (change < opts.tolerance) break;
  }
  if (change >= opts.tolerance) {
    fail(ErrorKind::no_convergence,
         "power iteration stalled at L1 change " + fmt(change));
  }
  double total = 0.0;
  for (double x : pi) total += x;
  for (double& x : pi) x /= total;
  out.iterations = it;
  out.last_change = change;

  const int top = chain.max_buffer();
  out.idle = pi[0];
  out.marginal.resize(chain.max_stage() + 1);
  std::vector<double> stage_mass(chain.max_stage() + 1, 0.0);
  double top_buffer = 0.0;
  for (int i = 0; i <= chain.max_stage(); ++i) {
    const std::int64_t w = chain.window(i);
    auto& row = out.marginal[i];
    row.assign(static_cast<std::size_t>(w), 0.0);
    std::size_t idx = chain.stage_begin(i);
    for (std::int64_t j = 0; j < w; ++j) {
      double m = 0.0;
      for (int k = 1; k <= top; ++k, ++idx) m += pi[idx];
      top_buffer += pi[idx - 1];
      row[j] = m;
      stage_mass[i] += m;
    }
  }
  // Stage masses fall roughly by 2 p_cl per stage beyond the truncation.
  const double c = chain.p_cl();
  out.stage_boundary_mass =
      c == 0.0 ? 0.0 : stage_mass.back() * 2.0 * c / std::max(1.0 - 2.0 * c, 1e-300);
  if (c >= 0.5) out.stage_boundary_mass = stage_mass.back();
  out.buffer_boundary_mass = top_buffer;
  out.boundary_mass = out.stage_boundary_mass + out.buffer_boundary_mass;
  out.pi = std::move(pi);
  return out;
}

namespace {

// Copies a solution into a larger truncation of the same chain.
std::vector<double> embed(const ChainStationary& from, const TruncatedChain& to) {
  std::vector<double> pi(to.size(), 0.0);
  pi[0] = from.pi[0];
  const TruncatedChain old(to.p(), to.p_cl(), to.w0(), from.max_stage, from.max_buffer);
  for (int i = 0; i <= from.max_stage; ++i) {
    for (std::int64_t j = 0; j < old.window(i); ++j) {
      for (int k = 1; k <= from.max_buffer; ++k) {
        pi[to.index_of({i, j, k})] = from.pi[old.index_of({i, j, k})];
      }
    }
  }
  return pi;
}

}  // namespace

ChainStationary chain_stationary(double p, double p_cl, int w0, int max_stage,
                                 int max_buffer, const ChainOptions& opts) {
  if (p_cl >= 0.5 && p_cl < 1.0) {
    fail(ErrorKind::divergence, "p_cl = " + fmt(p_cl) + " >= 0.5");
  }
  if (max_stage < 0 || max_buffer < 1) {
    fail(ErrorKind::domain, "truncation needs max_stage >= 0 and max_buffer >= 1");
  }
  max_stage = std::min(max_stage, kMaxStage);
  const double half = 0.5 * opts.boundary_tolerance;
  int stages = p_cl == 0.0 ? 0 : std::min(max_stage, 2);
  int buffers = std::min(max_buffer, 8);

  auto too_small = [&](const ChainStationary& sol, const std::string& why) {
    fail(ErrorKind::truncation_too_small,
         "boundary mass " + fmt(sol.boundary_mass) + " at (" +
             std::to_string(sol.max_stage) + ", " + std::to_string(sol.max_buffer) +
             ") exceeds " + fmt(opts.boundary_tolerance) + why);
  };
  auto check_budget = [&](int i, int k) {
    const std::size_t states = TruncatedChain::count_states(w0, i, k);
    if (states > opts.state_budget) {
      std::ostringstream os;
      os << "truncation (" << i << ", " << k << ") needs " << states
         << " states, budget " << opts.state_budget;
      fail(ErrorKind::state_space_too_large, os.str());
    }
  };

  // Growth steps only need the boundary estimate and a warm start, so they
  // run at a looser tolerance; the accepted truncation is re-solved.
  ChainOptions loose = opts;
  loose.tolerance = std::max(opts.tolerance, 1e-9);
  std::optional<ChainStationary> prev;
  for (;;) {
    check_budget(stages, buffers);
    const TruncatedChain chain(p, p_cl, w0, stages, buffers);
    std::vector<double> start;
    if (prev) start = embed(*prev, chain);
    ChainStationary sol = solve_truncated(chain, loose, std::move(start));
    if (sol.stage_boundary_mass < half && sol.buffer_boundary_mass < half) {
      std::vector<double> warm = std::move(sol.pi);
      sol = solve_truncated(chain, opts, std::move(warm));
      if (sol.boundary_mass < opts.boundary_tolerance) return sol;
    }

    if (sol.stage_boundary_mass >= half) {
      if (stages == max_stage) too_small(sol, "");
      // Stage masses shrink by about 2 p_cl per stage.
      const double steps = std::ceil(std::log(half / sol.stage_boundary_mass) /
                                     std::log(2.0 * p_cl));
      const int need = stages + std::max(1, static_cast<int>(steps));
      if (need > max_stage) {
        too_small(sol, "; about " + std::to_string(need) + " stages needed");
      }
      check_budget(need, buffers);
      stages = need;
    } else {
      if (buffers == max_buffer) too_small(sol, "");
      buffers = std::min(max_buffer, buffers * 2);
      check_budget(stages, buffers);
    }
    prev = std::move(sol);
  }
}

}  // namespace csma_aoi::oracles
