#pragma once

#include <vector>

namespace ebselect {

/// One unit's noisy effect-size estimate and its known noise standard
/// deviation, in the same units.
struct Observation {
  double x = 0.0;
  double sigma = 1.0;
};

/// Throws std::domain_error unless every x is finite and every sigma is
/// finite and strictly positive.
void validate_observations(const std::vector<Observation>& obs);

}  // namespace ebselect
