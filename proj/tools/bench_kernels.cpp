// Serial reference vs OpenMP kernels: one chain power-iteration step and a
// small analytic+simulated sweep.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "csma_aoi/chain_kernels.hpp"
#include "csma_aoi/sweep.hpp"

using namespace csma_aoi;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    if (dt < best) best = dt;
  }
  return best;
}

}  // namespace

int main() {
  std::printf("threads %d\n", omp_get_max_threads());

  const oracles::TruncatedChain chain(0.01, 0.1, 8, 10, 32);
  std::vector<double> pi(chain.size(), 1.0 / chain.size());
  std::vector<double> a(chain.size()), b(chain.size());
  double ca = 0.0, cb = 0.0;
  const double t_serial = best_of(5, [&] { ca = oracles::kernels::step_serial(chain, pi, a); });
  const double t_par = best_of(5, [&] { cb = oracles::kernels::step_parallel(chain, pi, b); });
  double diff = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) diff += std::abs(a[k] - b[k]);
  std::printf("chain step  states %zu  serial %.4f s  parallel %.4f s  speedup %.2f  L1 diff %.3g\n",
              chain.size(), t_serial, t_par, t_serial / t_par, diff);
  (void)ca;
  (void)cb;

  SweepSpec spec;
  spec.grid = parse_grid("linspace(0.001, 0.01, 8)");
  spec.curves = {10, 20};
  spec.simulate = true;
  spec.horizon = 200'000;
  spec.warmup = 1'000;
  std::vector<SweepRow> rs, rp;
  const double s_serial = best_of(1, [&] { rs = run_sweep(spec, false); });
  const double s_par = best_of(1, [&] { rp = run_sweep(spec, true); });
  std::printf("sweep       rows %zu  serial %.3f s  parallel %.3f s  speedup %.2f  identical %s\n",
              rs.size(), s_serial, s_par, s_serial / s_par, rs == rp ? "yes" : "no");
  return 0;
}
