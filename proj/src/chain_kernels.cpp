#include "csma_aoi/chain_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace csma_aoi::oracles::kernels {

double step_serial(const TruncatedChain& chain, std::span<const double> pi,
                   std::span<double> next) {
  const double p = chain.p();
  const double q = 1.0 - p;
  const double c = chain.p_cl();
  const double s = 1.0 - c;
  const int top = chain.max_buffer();
  const int w0 = chain.w0();
  const std::size_t C = static_cast<std::size_t>(top);

  std::fill(next.begin(), next.end(), 0.0);
  auto at = [&](int i, std::int64_t j, int k) {
    return chain.stage_begin(i) + static_cast<std::size_t>(j) * C + (k - 1);
  };

  next[0] += q * pi[0];
  for (int d = 0; d < w0; ++d) next[at(0, d, 1)] += p * pi[0] / w0;

  for (int i = 0; i <= chain.max_stage(); ++i) {
    const std::int64_t w = chain.window(i);
    const int ni = std::min(i + 1, chain.max_stage());
    const std::int64_t nw = chain.window(ni);
    for (std::int64_t j = 0; j < w; ++j) {
      for (int k = 1; k <= top; ++k) {
        const double v = pi[at(i, j, k)];
        if (v == 0.0) continue;
        const int ku = std::min(k + 1, top);
        if (j >= 1) {
          next[at(i, j, k)] += q * c * v;
          next[at(i, j - 1, k)] += q * s * v;
          next[at(i, j, ku)] += p * c * v;
          next[at(i, j - 1, ku)] += p * s * v;
          continue;
        }
        for (int d = 0; d < w0; ++d) next[at(0, d, k)] += p * s * v / w0;
        if (k == 1) {
          next[0] += q * s * v;
        } else {
          for (int d = 0; d < w0; ++d) next[at(0, d, k - 1)] += q * s * v / w0;
        }
        const double share = 1.0 / static_cast<double>(nw);
        for (std::int64_t d = 0; d < nw; ++d) {
          next[at(ni, d, k)] += q * c * v * share;
          next[at(ni, d, ku)] += p * c * v * share;
        }
      }
    }
  }
  double change = 0.0;
  for (std::size_t x = 0; x < pi.size(); ++x) change += std::abs(next[x] - pi[x]);
  return change;
}

double step_parallel(const TruncatedChain& chain, std::span<const double> pi,
                     std::span<double> next) {
  const double p = chain.p();
  const double q = 1.0 - p;
  const double c = chain.p_cl();
  const double s = 1.0 - c;
  const int top = chain.max_buffer();
  const int stages = chain.max_stage() + 1;
  const int w0 = chain.w0();
  const std::size_t C = static_cast<std::size_t>(top);

  // Counter-0 rows, z[i * C + k - 1] = pi(i, 0, k).
  std::vector<double> z(stages * C);
  for (int i = 0; i < stages; ++i) {
    std::copy_n(pi.begin() + chain.stage_begin(i), C, z.begin() + i * C);
  }
  std::vector<double> zsum(C + 1, 0.0);  // sum over stages, index k (k = C+1 stays 0)
  for (int i = 0; i < stages; ++i) {
    for (std::size_t k = 1; k <= C; ++k) zsum[k - 1] += z[i * C + k - 1];
  }
  // Per-counter inflow into stage 0 from successes and from idle.
  std::vector<double> fresh(C);
  for (std::size_t k = 1; k <= C; ++k) {
    double v = p * s * zsum[k - 1] + q * s * zsum[k];
    if (k == 1) v += p * pi[0];
    fresh[k - 1] = v / w0;
  }
  // Per-counter inflow into stage i from collisions.
  std::vector<double> redraw(stages * C, 0.0);
  auto collide_into = [&](int dest, int src) {
    const double share = 1.0 / static_cast<double>(chain.window(dest));
    const double* zs = &z[src * C];
    double* r = &redraw[dest * C];
    for (std::size_t k = 1; k <= C; ++k) {
      double v = q * c * zs[k - 1];
      if (k >= 2) v += p * c * zs[k - 2];
      if (k == C) v += p * c * zs[C - 1];
      r[k - 1] += v * share;
    }
  };
  for (int i = 1; i < stages; ++i) collide_into(i, i - 1);
  collide_into(stages - 1, stages - 1);

  double idle = q * pi[0];
  for (int i = 0; i < stages; ++i) idle += q * s * z[i * C];
  next[0] = idle;
  double change = std::abs(idle - pi[0]);

#pragma omp parallel reduction(+ : change)
  for (int i = 0; i < stages; ++i) {
    const std::int64_t w = chain.window(i);
    const std::size_t base = chain.stage_begin(i);
    const double* bucket = &redraw[i * C];
#pragma omp for schedule(static)
    for (std::int64_t j = 0; j < w; ++j) {
      const double* own = &pi[base + j * C];
      const double* after = j + 1 < w ? own + C : nullptr;
      double* out = &next[base + j * C];
      for (std::size_t k = 1; k <= C; ++k) {
        double v = bucket[k - 1];
        if (i == 0) v += fresh[k - 1];
        if (j >= 1) {
          v += q * c * own[k - 1];
          if (k >= 2) v += p * c * own[k - 2];
          if (k == C) v += p * c * own[C - 1];
        }
        if (after) {
          v += q * s * after[k - 1];
          if (k >= 2) v += p * s * after[k - 2];
          if (k == C) v += p * s * after[C - 1];
        }
        out[k - 1] = v;
        change += std::abs(v - own[k - 1]);
      }
    }
  }
  return change;
}

}  // namespace csma_aoi::oracles::kernels
