#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace anamac {

/// Folds a list of integers into one 64-bit seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

/// Standard-normal stream built on mt19937_64 (whose output sequence is fixed
/// by the standard) and the polar method, so draws do not depend on the
/// standard library's distribution implementation.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double next();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace anamac
