#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "controlgen/ingest.hpp"
#include "controlgen/transit_net.hpp"

namespace controlgen {

// Where and when controls happened, estimated from a sighting log. Station
// indices follow the network's lexicographic order.
struct InspectionStats {
  std::vector<std::string> station_ids;
  std::vector<double> station_share;                   // sums to 1
  std::vector<std::array<double, kHoursPerDay>> heatmap;  // raw counts
  std::vector<double> inside_rate;
  std::map<std::pair<std::size_t, int>, double> presence_prob;  // (station, slot)

  // P(>= 1 control at station s in that slot on a day of the slot's type).
  double presence(std::size_t s, int slot) const {
    auto it = presence_prob.find({s, slot});
    return it == presence_prob.end() ? 0.0 : it->second;
  }
};

InspectionStats inspection_stats(const SightingLog& log, const TransitNetwork& net);

// Presence statistics induced by a generated schedule, treating each trace as
// one controller-day of its shift's day type. Lets historical and synthesized
// schedules be compared through the same attack lens.
InspectionStats stats_from_schedule(const std::vector<ControlTrace>& traces,
                                    const TransitNetwork& net);

struct MarkovRow {
  std::vector<double> prob;  // over stations, sums to 1
  double weight = 0.0;       // times this history occurred in training
};

struct MarkovModel {
  int order = 1;
  std::vector<std::string> station_ids;
  std::map<std::vector<std::size_t>, MarkovRow> rows;
  std::vector<double> marginal;  // next-station distribution over all transitions
};

// Maximum-likelihood transition table over consecutive sightings within the
// same UTC day; day boundaries reset the history.
MarkovModel fit_markov(const SightingLog& log, const TransitNetwork& net, int k);

struct Predictability {
  double accuracy = 0.0;     // top-1, ties broken by lexicographic station id
  double entropy_bits = 0.0; // training-frequency-weighted conditional entropy
  std::size_t evaluated = 0;
};

Predictability predictability(const MarkovModel& model, const SightingLog& holdout,
                              const TransitNetwork& net);

struct AttackScenario {
  double p_ins = 0.0;   // inspection probability of the ride
  double fine = 0.0;    // F_amt
  double ticket = 0.0;  // T_cost
};

struct PurchaseDecision {
  bool purchase = false;      // P_ins * F_amt >= T_cost (tie buys)
  double evade_payoff = 0.0;  // T_cost - P_ins * F_amt
};

PurchaseDecision selective_purchase(const AttackScenario& sc);

struct PathRisk {
  std::vector<std::string> stations;  // empty when origin == dest
  double risk = 0.0;                  // 1 - prod(1 - presence) over the path
  double travel_min = 0.0;
};

// Path from origin to dest minimizing the chance of meeting a control in
// `slot`; among risk ties, the travel-shortest path wins.
PathRisk min_inspection_path(const TransitNetwork& net, const InspectionStats& stats,
                             const std::string& origin, const std::string& dest,
                             TimeSlot slot);

struct Forecast {
  std::vector<std::string> stations;
  bool used_fallback = false;  // some history was unseen; marginal used
};

// Greedy argmax rollout of the fitted chain.
Forecast forecast_controls(const MarkovModel& model,
                           const std::vector<std::string>& recent, int horizon);

}  // namespace controlgen
