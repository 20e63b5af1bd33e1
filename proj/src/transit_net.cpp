#include "controlgen/transit_net.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "controlgen/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace controlgen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Single-source Dijkstra over the station graph; fills dist (and prev when
// non-null) for `src`.
void dijkstra(const std::vector<std::vector<std::pair<std::size_t, double>>>& adj,
              std::size_t src, double* dist, std::size_t* prev = nullptr) {
  const std::size_t n = adj.size();
  for (std::size_t i = 0; i < n; ++i) dist[i] = kInf;
  if (prev) {
    for (std::size_t i = 0; i < n; ++i) prev[i] = n;
  }
  dist[src] = 0.0;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : adj[u]) {
      const double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        if (prev) prev[v] = u;
        pq.push({nd, v});
      }
    }
  }
}

}  // namespace

std::vector<double> apsp_minutes(
    const std::vector<std::vector<std::pair<std::size_t, double>>>& adj, Exec exec) {
  const std::size_t n = adj.size();
  std::vector<double> dist(n * n, kInf);
  if (exec == Exec::Serial) {
    for (std::size_t s = 0; s < n; ++s) dijkstra(adj, s, dist.data() + s * n);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (long long s = 0; s < static_cast<long long>(n); ++s) {
      dijkstra(adj, static_cast<std::size_t>(s), dist.data() + s * n);
    }
  }
  return dist;
}

TransitNetwork TransitNetwork::build(std::vector<Station> stations,
                                     std::vector<Route> routes, Exec exec) {
  if (stations.empty()) throw SpecInvalid("network needs at least one station");
  if (routes.empty()) throw SpecInvalid("network needs at least one route");

  TransitNetwork net;
  std::sort(stations.begin(), stations.end(),
            [](const Station& a, const Station& b) { return a.id < b.id; });
  for (std::size_t i = 0; i + 1 < stations.size(); ++i) {
    if (stations[i].id == stations[i + 1].id) {
      throw DuplicateId("duplicate station id '" + stations[i].id + "'");
    }
  }
  for (const Station& s : stations) {
    if (s.dwell_min < 1.0) {
      throw SpecInvalid("station '" + s.id + "' has dwell_min < 1");
    }
    if (s.lat < -90.0 || s.lat > 90.0 || s.lon < -180.0 || s.lon > 180.0) {
      throw SpecInvalid("station '" + s.id + "' has out-of-range coordinates");
    }
  }
  net.stations_ = std::move(stations);
  for (std::size_t i = 0; i < net.stations_.size(); ++i) {
    net.index_[net.stations_[i].id] = i;
  }

  std::set<std::string> route_ids;
  for (const Route& r : routes) {
    if (!route_ids.insert(r.id).second) {
      throw DuplicateId("duplicate route id '" + r.id + "'");
    }
    if (r.stops.size() < 2) {
      throw SpecInvalid("route '" + r.id + "' has fewer than 2 stops");
    }
    if (r.leg_minutes.size() != r.stops.size() - 1) {
      throw SpecInvalid("route '" + r.id + "' leg_minutes length mismatch");
    }
    for (double leg : r.leg_minutes) {
      if (!(leg > 0.0) || !std::isfinite(leg)) {
        throw SpecInvalid("route '" + r.id + "' has a non-positive leg");
      }
    }
    for (const std::string& stop : r.stops) {
      if (!net.index_.count(stop)) {
        throw UnknownStation("route '" + r.id + "' references unknown station '" +
                             stop + "'");
      }
    }
  }
  net.routes_ = std::move(routes);

  const std::size_t n = net.stations_.size();
  net.station_routes_.assign(n, {});
  net.route_stations_.assign(net.routes_.size(), {});
  net.adj_.assign(n, {});
  std::map<std::pair<std::size_t, std::size_t>, double> best_leg;
  for (std::size_t r = 0; r < net.routes_.size(); ++r) {
    const Route& route = net.routes_[r];
    std::set<std::size_t> on_route;
    for (const std::string& stop : route.stops) on_route.insert(net.index_.at(stop));
    for (std::size_t s : on_route) {
      net.station_routes_[s].push_back(r);
      net.route_stations_[r].push_back(s);
    }
    for (std::size_t i = 0; i + 1 < route.stops.size(); ++i) {
      std::size_t a = net.index_.at(route.stops[i]);
      std::size_t b = net.index_.at(route.stops[i + 1]);
      if (a == b) continue;
      auto key = std::minmax(a, b);
      auto [it, inserted] = best_leg.try_emplace({key.first, key.second},
                                                 route.leg_minutes[i]);
      if (!inserted) it->second = std::min(it->second, route.leg_minutes[i]);
    }
  }
  for (const auto& [key, w] : best_leg) {
    net.adj_[key.first].push_back({key.second, w});
    net.adj_[key.second].push_back({key.first, w});
  }

  for (std::size_t s = 0; s < n; ++s) {
    if (net.station_routes_[s].empty()) {
      throw Disconnected("station '" + net.stations_[s].id +
                         "' appears on no route");
    }
  }

  net.travel_ = apsp_minutes(net.adj_, exec);
  // the graph is undirected, but opposite-direction Dijkstra runs can round
  // differently; pin exact symmetry
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const double v = std::min(net.travel_[p * n + q], net.travel_[q * n + p]);
      net.travel_[p * n + q] = v;
      net.travel_[q * n + p] = v;
    }
  }
  for (std::size_t i = 0; i < n * n; ++i) {
    if (!std::isfinite(net.travel_[i])) {
      throw Disconnected("network is not connected (station '" +
                         net.stations_[i / n].id + "' cannot reach '" +
                         net.stations_[i % n].id + "')");
    }
  }
  return net;
}

bool TransitNetwork::has_station(const std::string& id) const {
  return index_.count(id) > 0;
}

std::size_t TransitNetwork::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownStation("unknown station '" + id + "'");
  return it->second;
}

double TransitNetwork::travel_cost(const std::string& p, const std::string& q) const {
  return travel_cost(index_of(p), index_of(q));
}

std::vector<std::size_t> TransitNetwork::shortest_path(std::size_t from,
                                                       std::size_t to) const {
  const std::size_t n = stations_.size();
  if (from == to) return {from};
  std::vector<double> dist(n);
  std::vector<std::size_t> prev(n);
  dijkstra(adj_, from, dist.data(), prev.data());
  if (!std::isfinite(dist[to])) {
    throw NoPath("no path from '" + stations_[from].id + "' to '" +
                 stations_[to].id + "'");
  }
  std::vector<std::size_t> path;
  for (std::size_t v = to; v != from; v = prev[v]) path.push_back(v);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

void RidershipProfile::add(const std::string& station_id, TimeSlot slot,
                           double count) {
  if (count < 0.0) throw NegativeCount("negative boardings for '" + station_id + "'");
  auto [it, inserted] = boardings.try_emplace(station_id);
  if (inserted) it->second.fill(0.0);
  it->second[static_cast<std::size_t>(slot_index(slot))] += count;
}

bool RidershipProfile::all_zero() const {
  for (const auto& [id, row] : boardings) {
    for (double v : row) {
      if (v > 0.0) return false;
    }
  }
  return true;
}

TimeVaryingNetwork::TimeVaryingNetwork(TransitNetwork net,
                                       const RidershipProfile& profile)
    : net_(std::move(net)) {
  board_.assign(net_.station_count() * kSlotCount, 0.0);
  for (const auto& [id, row] : profile.boardings) {
    const std::size_t s = net_.index_of(id);  // UnknownStation on stray ids
    for (int slot = 0; slot < kSlotCount; ++slot) {
      board_[s * kSlotCount + slot] = row[static_cast<std::size_t>(slot)];
    }
  }
}

double quality_of_visit(const TimeVaryingNetwork& tvn, const std::string& station_id,
                        TimeSlot slot) {
  const std::size_t s = tvn.net().index_of(station_id);
  return tvn.boardings(s, slot_index(slot));
}

double trace_cost(const TimeVaryingNetwork& tvn, const std::vector<Visit>& visits) {
  const TransitNetwork& net = tvn.net();
  double cost = 0.0;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    const std::size_t s = net.index_of(visits[i].station_id);
    if (i > 0) {
      const double leg = net.travel_cost(net.index_of(visits[i - 1].station_id), s);
      if (!std::isfinite(leg)) {
        throw InfeasibleLeg("no path between consecutive visits " +
                            visits[i - 1].station_id + " -> " + visits[i].station_id);
      }
      cost += leg;
    }
    cost += net.station(s).dwell_min;
  }
  return cost;
}

double trace_quality(const TimeVaryingNetwork& tvn, const std::vector<Visit>& visits) {
  std::set<std::pair<std::size_t, int>> seen;
  double q = 0.0;
  for (const Visit& v : visits) {
    const std::size_t s = tvn.net().index_of(v.station_id);
    if (seen.insert({s, slot_index(v.slot)}).second) {
      q += tvn.boardings(s, slot_index(v.slot));
    }
  }
  return q;
}

}  // namespace controlgen
