#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csma_aoi {

// Failure categories shared by every module. The CLI maps these to exit codes.
enum class ErrorKind {
  domain,                 // argument outside its mathematical domain
  divergence,             // p_cl >= 0.5, geometric stage sums diverge
  infeasible_load,        // idle probability goes negative (saturation)
  instability,            // p >= mu, queue and AoI unbounded
  over_capacity,          // no fixed point: p above max of x(1-x)^(N-1)
  validity,               // fixed point exists but p_cl >= 0.5
  no_convergence,         // iterative solver ran out of iterations
  truncation_too_small,   // oracle boundary mass above tolerance
  state_space_too_large,  // oracle chain exceeds its state budget
  invalid_spec,           // malformed sweep spec / CLI input
  io,
};

std::string_view to_string(ErrorKind kind);

class ModelError : public std::runtime_error {
 public:
  ModelError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw ModelError(kind, what);
}

}  // namespace csma_aoi
