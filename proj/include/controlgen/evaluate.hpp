#pragma once

#include <set>
#include <string>
#include <vector>

#include "controlgen/attack.hpp"
#include "controlgen/ingest.hpp"
#include "controlgen/target.hpp"
#include "controlgen/transit_net.hpp"

namespace controlgen {

struct KSResult {
  double d_stat = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  bool significant_at_05 = false;  // D > 1.358 * sqrt((n+m)/(n*m))
};

// Exact two-sample KS statistic: sup |ECDF_a - ECDF_b| over the pooled points.
KSResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// KS between the station indices of all trace visits and a same-size sample
// drawn from the target with a fixed internal seed; stations ordered by id.
KSResult distribution_similarity(const std::vector<ControlTrace>& traces,
                                 const TargetDistribution& target);

// Mean over unordered period pairs of sqrt(sum_s (v1_s - v2_s)^2 / S).
// Higher = more day-to-day variation; 0 iff all periods identical.
double dispersion_rmse(const std::vector<std::vector<double>>& period_counts);

struct Trip {
  std::vector<std::string> stations;
  TimeSlot slot;
};

// 1 - prod over trip stations of (1 - presence); station risks compose
// independently.
double ride_inspection_prob(const InspectionStats& stats, const TransitNetwork& net,
                            const Trip& trip);

// Mean selective-purchase evasion payoff over trips under `before` minus the
// same under `after`; positive = attacker worse off.
double payoff_reduction(const InspectionStats& before, const InspectionStats& after,
                        double fine, double ticket, const std::vector<Trip>& trips,
                        const TransitNetwork& net);
double payoff_reduction(const InspectionStats& before,
                        const std::vector<ControlTrace>& after_schedule, double fine,
                        double ticket, const std::vector<Trip>& trips,
                        const TransitNetwork& net);

// Top-1 Markov accuracy (80/20 day split) on `before` minus on `after`;
// positive = less predictable after.
double predictability_reduction(const SightingLog& before, const SightingLog& after,
                                const TransitNetwork& net, int k);
double predictability_reduction(const SightingLog& before,
                                const std::vector<ControlTrace>& after_schedule,
                                const TransitNetwork& net, int k);

// Each trace becomes one synthetic controller-day, visits in trace order.
SightingLog schedule_as_log(const std::vector<ControlTrace>& schedule,
                            const TransitNetwork& net);

// Chronological 80/20 train/test split on UTC-day boundaries.
std::pair<SightingLog, SightingLog> split_log_80_20(const SightingLog& log);

// Seeded evaluation trips: random origin/destination pairs routed along the
// travel-shortest path, at a random slot. Stations in `avoid` are excluded
// when possible.
std::vector<Trip> make_trips(const TransitNetwork& net, std::size_t count,
                             uint64_t seed,
                             const std::set<std::string>& avoid = {});

struct EvalReport {
  KSResult ks;            // vs the lambda-mixed target
  KSResult ks_ridership;  // vs the pure-ridership (lambda = 0) target
  double dispersion_rmse = 0.0;
  double payoff_delta = 0.0;
  double predictability_delta = 0.0;
  std::vector<std::string> station_ids;
  std::vector<double> shares_before;
  std::vector<double> shares_after;
};

EvalReport evaluate_schedule(const TimeVaryingNetwork& tvn,
                             const TargetDistribution& target,
                             const SightingLog& before,
                             const std::vector<ControlTrace>& schedule, double fine,
                             double ticket, const std::vector<Trip>& trips, int k);

}  // namespace controlgen
