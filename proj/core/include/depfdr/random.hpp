#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace depfdr {

// Purpose tags for seed-derived substreams. Every random quantity in an
// experiment is drawn from derive(seed, tag, index), so the draws for one
// purpose never depend on how many draws another purpose consumed.
enum class StreamTag : std::uint64_t {
  structure = 1,      // stationary vector and transition matrix
  training = 2,       // training realization theta
  signal = 3,         // test signal eta
  noise = 4,          // per-replication noise, index = replication
  signal_redraw = 5,  // per-replication eta when redrawing is enabled
  auxiliary = 6,      // tests and tools
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Thin wrapper over mt19937_64 with portable variate transforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng derive(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0);

  std::uint64_t next() { return engine_(); }

  // Uniform on the open interval (0, 1); 53-bit resolution.
  double uniform();

  // Standard exponential.
  double exponential();

  // Standard normal (Box-Muller, second variate cached).
  double normal();

  // Index drawn from a cumulative distribution whose last entry is the total.
  std::size_t categorical(std::span<const double> cumulative);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace depfdr
