#pragma once

// Arithmetic-work instrumentation.
//
// Every numerical kernel in this library reports how much work it did to a
// thread-local counter. The unit is the multiply-add: one fused a*b+c counts
// as 1, and an isolated multiply, add, divide, or square root also counts
// as 1. Counts are incremented per kernel call with the actual loop trip
// counts, so they reflect what was executed, not a closed-form model.

#include <cstdint>

namespace liftmc {

struct FlopCounter {
  std::uint64_t madds = 0;
  void add(std::uint64_t n) { madds += n; }
  void reset() { madds = 0; }
};

inline FlopCounter& flop_counter() {
  thread_local FlopCounter counter;
  return counter;
}

// RAII helper measuring the work done within a scope.
class FlopScope {
 public:
  FlopScope() : start_(flop_counter().madds) {}
  std::uint64_t elapsed() const { return flop_counter().madds - start_; }

 private:
  std::uint64_t start_;
};

}  // namespace liftmc
