#pragma once

#include <string>
#include <utility>
#include <vector>

#include "controlgen/rng.hpp"
#include "controlgen/transit_net.hpp"

namespace controlgen {

// Ridership-derived control-location distribution. `cond[slot]` holds the
// per-slot station weights; every row either sums to 1 or is all zero (a slot
// with no ridership mass under lambda = 0). Sampling mixes uniformly over the
// active slots.
struct TargetDistribution {
  std::vector<std::string> station_ids;  // lexicographic network order
  double lambda = 0.2;                   // randomness temperature toward uniform
  double sigma = 0.0;                    // hour-smoothing kernel width
  std::vector<std::vector<double>> cond; // [72][S]
  std::vector<int> active_slots;

  double weight(std::size_t station, int slot) const {
    return cond[static_cast<std::size_t>(slot)][station];
  }

  // (station index, slot index): slot uniform over active slots, then station
  // from that slot's weights.
  std::pair<std::size_t, int> sample(Rng& rng) const;
};

// Normalize ridership per slot, smooth across hours (circular Gaussian of
// width sigma within each day type), then mix lambda-uniform over stations.
TargetDistribution make_target(const TimeVaryingNetwork& tvn, double lambda,
                               double sigma);

}  // namespace controlgen
