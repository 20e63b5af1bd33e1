#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "controlgen/timeslot.hpp"

namespace controlgen {

struct Station {
  std::string id;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<std::string> zone;
  double dwell_min = 10.0;  // control time spent per visit
};

struct Route {
  std::string id;
  std::string name;
  std::vector<std::string> stops;       // station ids, length >= 2
  std::vector<double> leg_minutes;      // length == stops.size() - 1, all > 0
};

enum class Exec { Serial, Parallel };

// Station/route bipartite graph plus the derived station graph used for
// travel costs. Stations are stored sorted by id; that lexicographic rank is
// the station index used everywhere else (policies, features, KS samples).
// Immutable after build(); safe to share across threads.
class TransitNetwork {
public:
  static TransitNetwork build(std::vector<Station> stations,
                              std::vector<Route> routes,
                              Exec exec = Exec::Parallel);

  const std::vector<Station>& stations() const { return stations_; }
  const std::vector<Route>& routes() const { return routes_; }
  std::size_t station_count() const { return stations_.size(); }

  bool has_station(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;  // throws UnknownStation
  const Station& station(std::size_t idx) const { return stations_[idx]; }

  // Minimum leg-minutes over all station paths; symmetric, 0 on the diagonal.
  double travel_cost(std::size_t p, std::size_t q) const {
    return travel_[p * stations_.size() + q];
  }
  double travel_cost(const std::string& p, const std::string& q) const;

  // Station sequence (inclusive of both ends) realizing travel_cost(p, q).
  std::vector<std::size_t> shortest_path(std::size_t from, std::size_t to) const;

  // Bipartite adjacency.
  const std::vector<std::size_t>& routes_of_station(std::size_t s) const {
    return station_routes_[s];
  }
  const std::vector<std::size_t>& stations_of_route(std::size_t r) const {
    return route_stations_[r];
  }

  // Derived station graph: s adjacent to t iff consecutive on some route;
  // weight = min leg minutes over those routes.
  const std::vector<std::vector<std::pair<std::size_t, double>>>& station_adjacency() const {
    return adj_;
  }

private:
  std::vector<Station> stations_;
  std::vector<Route> routes_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> station_routes_;
  std::vector<std::vector<std::size_t>> route_stations_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj_;
  std::vector<double> travel_;  // dense S x S matrix
};

// Boardings per (station, slot); station ids need not be bound to a network
// until a TimeVaryingNetwork is formed. Duplicate insertions accumulate.
struct RidershipProfile {
  std::map<std::string, std::array<double, kSlotCount>> boardings;

  void add(const std::string& station_id, TimeSlot slot, double count);
  bool all_zero() const;
};

class TimeVaryingNetwork {
public:
  TimeVaryingNetwork(TransitNetwork net, const RidershipProfile& profile);

  const TransitNetwork& net() const { return net_; }

  // Boardings at (station, slot); 0 when unrecorded.
  double boardings(std::size_t station, int slot) const {
    return board_[station * kSlotCount + static_cast<std::size_t>(slot)];
  }

private:
  TransitNetwork net_;
  std::vector<double> board_;  // S x 72
};

struct Visit {
  std::string station_id;
  TimeSlot slot;          // slot of the arrival instant
  double arrive_min = 0;  // minutes from shift start
  double depart_min = 0;  // arrive + station dwell
};

struct ControlTrace {
  std::string controller_id;
  std::vector<Visit> visits;
  double cost_min = 0.0;  // == trace_cost(visits)
  double quality = 0.0;   // == trace_quality(visits)
};

// Expected travelers controlled at (station, slot); 0 when unrecorded.
double quality_of_visit(const TimeVaryingNetwork& tvn, const std::string& station_id,
                        TimeSlot slot);

// Sum of dwell times plus travel between consecutive visits.
double trace_cost(const TimeVaryingNetwork& tvn, const std::vector<Visit>& visits);

// Sum of quality_of_visit over distinct (station, slot) pairs; revisits within
// the same slot reach the same riders and add nothing.
double trace_quality(const TimeVaryingNetwork& tvn, const std::vector<Visit>& visits);

// All-pairs shortest path minutes over an undirected weighted adjacency list;
// unreachable pairs come back as +inf. The Serial variant is the reference
// the parallel kernel is tested against.
std::vector<double> apsp_minutes(
    const std::vector<std::vector<std::pair<std::size_t, double>>>& adj, Exec exec);

}  // namespace controlgen
