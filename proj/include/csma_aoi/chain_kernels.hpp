#pragma once

// One power-iteration step next = pi * P of the truncated chain. Both return
// the L1 distance between next and pi.

#include <span>

#include "csma_aoi/oracles.hpp"

namespace csma_aoi::oracles::kernels {

// Reference: pushes every state's outgoing row, single thread.
double step_serial(const TruncatedChain& chain, std::span<const double> pi,
                   std::span<double> next);

// Pull formulation, parallel over destination states. Each destination reads
// its own state, its counter successor and the per-stage draw buckets.
double step_parallel(const TruncatedChain& chain, std::span<const double> pi,
                     std::span<double> next);

}  // namespace csma_aoi::oracles::kernels
