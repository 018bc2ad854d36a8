#ifndef ZSLE_COMMON_HPP
#define ZSLE_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace zsle {

// Error taxonomy. The C API maps these onto status codes and the CLI onto
// exit codes, so every throw site below picks the category deliberately.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic RNG helpers. std::uniform_real_distribution and friends are
// implementation-defined, so every draw below is built directly from mt19937
// output words to keep seeded runs reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(static_cast<std::mt19937::result_type>(seed)) {}

  // uniform in [0, 1)
  double uniform() { return (engine_() >> 8) * 0x1.0p-24; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint32_t below(std::uint32_t n) {
    // rejection sampling keeps the draw unbiased and deterministic
    const std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
    std::uint32_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // standard normal via Box-Muller
  double normal() {
    const double u1 = (engine_() + 1.0) * 0x1.0p-32;  // (0, 1]
    const double u2 = engine_() * 0x1.0p-32;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937 engine_;
};

}  // namespace zsle

#endif
