#pragma once

#include <cstdint>

namespace csma_aoi {

// Free variables of the network model. Window at backoff stage i is
// w_i = 2^i * min_window.
struct NetworkParams {
  int n_nodes = 1;
  double packet_rate = 0.0;
  int min_window = 8;

  // Throws ModelError(domain) unless 0 < p < 1, N >= 1, w0 >= 1.
  void validate() const;
};

inline std::int64_t window_at(int min_window, int stage) {
  return static_cast<std::int64_t>(min_window) << stage;
}

}  // namespace csma_aoi
