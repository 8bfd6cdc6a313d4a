#pragma once

#include <vector>

namespace cdpinn {

// Interior collocation times plus the two endpoints of the domain.
struct TimeBatch {
  double t_min = 0.0;
  double t_max = 1.0;
  std::vector<double> interior;  // ascending, strictly inside (t_min, t_max)
  int log2_count = 0;
};

// Base-2 radical inverse of `index` (bit reversal into the binary fraction).
double van_der_corput(unsigned long long index);

// First 2^log2_count points of the one-dimensional Sobol sequence (which is
// the base-2 van der Corput sequence), shifted by half the finest stratum
// width so no point lands on an endpoint, mapped onto (t_min, t_max) and
// sorted. Throws ConfigError unless 0 <= log2_count <= 20 and t_min < t_max.
TimeBatch sobol_interior(int log2_count, double t_min = 0.0, double t_max = 1.0);

}  // namespace cdpinn
