#include "cdpinn/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "cdpinn/errors.hpp"

namespace cdpinn {

double van_der_corput(unsigned long long index) {
  std::uint64_t v = index;
  // bit-reverse a 64-bit word
  v = ((v >> 1) & 0x5555555555555555ULL) | ((v & 0x5555555555555555ULL) << 1);
  v = ((v >> 2) & 0x3333333333333333ULL) | ((v & 0x3333333333333333ULL) << 2);
  v = ((v >> 4) & 0x0F0F0F0F0F0F0F0FULL) | ((v & 0x0F0F0F0F0F0F0F0FULL) << 4);
  v = ((v >> 8) & 0x00FF00FF00FF00FFULL) | ((v & 0x00FF00FF00FF00FFULL) << 8);
  v = ((v >> 16) & 0x0000FFFF0000FFFFULL) | ((v & 0x0000FFFF0000FFFFULL) << 16);
  v = (v >> 32) | (v << 32);
  return std::ldexp(static_cast<double>(v >> 11), -53);
}

TimeBatch sobol_interior(int log2_count, double t_min, double t_max) {
  if (log2_count < 0 || log2_count > 20) {
    throw ConfigError("log2_count must be in [0, 20], got " + std::to_string(log2_count));
  }
  if (!(t_min < t_max) || !std::isfinite(t_min) || !std::isfinite(t_max)) {
    throw ConfigError("time domain requires finite t_min < t_max");
  }
  TimeBatch batch;
  batch.t_min = t_min;
  batch.t_max = t_max;
  batch.log2_count = log2_count;
  const std::size_t count = std::size_t{1} << log2_count;
  const double half_stratum = std::ldexp(0.5, -log2_count);
  batch.interior.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = van_der_corput(i) + half_stratum;
    batch.interior.push_back(t_min + u * (t_max - t_min));
  }
  std::sort(batch.interior.begin(), batch.interior.end());
  return batch;
}

}  // namespace cdpinn
