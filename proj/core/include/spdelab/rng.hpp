#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace spdelab {

/// SplitMix64 step; used to derive well-separated seeds from (master, stream)
/// pairs so every path / sample owns an independent substream regardless of
/// scheduling order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

/// Deterministic per-stream Gaussian source. Identical (master, stream)
/// pairs produce identical draw sequences on every thread schedule.
class PathRng {
public:
  PathRng(std::uint64_t master, std::uint64_t stream)
      : eng_(mix_seed(master, stream)) {}

  double gaussian() { return normal_(eng_); }

  /// Fill `out` with i.i.d. N(0, stddev^2) entries.
  void fill_gaussian(Eigen::Ref<Eigen::VectorXd> out, double stddev) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = stddev * normal_(eng_);
  }

  double uniform() { return unif_(eng_); }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

} // namespace spdelab
