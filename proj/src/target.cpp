#include "controlgen/target.hpp"

#include <cmath>

#include "controlgen/errors.hpp"

namespace controlgen {

std::pair<std::size_t, int> TargetDistribution::sample(Rng& rng) const {
  const int slot = active_slots[rng.uniform_int(active_slots.size())];
  const std::size_t s = rng.categorical(cond[static_cast<std::size_t>(slot)]);
  return {s, slot};
}

TargetDistribution make_target(const TimeVaryingNetwork& tvn, double lambda,
                               double sigma) {
  if (lambda < 0.0 || lambda > 1.0) throw SpecInvalid("lambda must be in [0,1]");
  if (sigma < 0.0) throw SpecInvalid("sigma must be >= 0");
  const std::size_t S = tvn.net().station_count();

  TargetDistribution t;
  t.lambda = lambda;
  t.sigma = sigma;
  for (const Station& s : tvn.net().stations()) t.station_ids.push_back(s.id);
  t.cond.assign(kSlotCount, std::vector<double>(S, 0.0));

  // mass-preserving circular Gaussian smoothing over the 24 hours of each day
  // type; sigma = 0 is the identity
  std::array<std::array<double, kHoursPerDay>, kHoursPerDay> kernel{};
  if (sigma > 0.0) {
    for (int g = 0; g < kHoursPerDay; ++g) {
      double norm = 0.0;
      for (int h = 0; h < kHoursPerDay; ++h) {
        const int d = std::min(std::abs(h - g), kHoursPerDay - std::abs(h - g));
        kernel[g][h] = std::exp(-0.5 * d * d / (sigma * sigma));
        norm += kernel[g][h];
      }
      for (int h = 0; h < kHoursPerDay; ++h) kernel[g][h] /= norm;
    }
  }

  std::vector<std::vector<double>> smoothed(kSlotCount, std::vector<double>(S, 0.0));
  bool any_mass = false;
  for (std::size_t s = 0; s < S; ++s) {
    for (int day = 0; day < 3; ++day) {
      for (int g = 0; g < kHoursPerDay; ++g) {
        const double r = tvn.boardings(s, day * kHoursPerDay + g);
        if (r <= 0.0) continue;
        any_mass = true;
        if (sigma > 0.0) {
          for (int h = 0; h < kHoursPerDay; ++h) {
            smoothed[day * kHoursPerDay + h][s] += r * kernel[g][h];
          }
        } else {
          smoothed[day * kHoursPerDay + g][s] += r;
        }
      }
    }
  }
  if (!any_mass) throw DegenerateRidership("ridership profile is all zero");

  for (int slot = 0; slot < kSlotCount; ++slot) {
    double mass = 0.0;
    for (double v : smoothed[slot]) mass += v;
    auto& row = t.cond[static_cast<std::size_t>(slot)];
    if (mass > 0.0) {
      for (std::size_t s = 0; s < S; ++s) {
        row[s] = lambda / static_cast<double>(S) +
                 (1.0 - lambda) * smoothed[slot][s] / mass;
      }
      t.active_slots.push_back(slot);
    } else if (lambda > 0.0) {
      // no ridership signal in this slot; the uniform component remains
      for (std::size_t s = 0; s < S; ++s) row[s] = 1.0 / static_cast<double>(S);
      t.active_slots.push_back(slot);
    }
    // lambda == 0 and no mass: row stays zero and the slot is inactive
  }
  return t;
}

}  // namespace controlgen
