#include "controlgen/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "controlgen/errors.hpp"

namespace controlgen {

namespace {

int hour_of_ts(int64_t ts) {
  int64_t rem = ts % 86400;
  if (rem < 0) rem += 86400;
  return static_cast<int>(rem / 3600);
}

int64_t day_of_ts(int64_t ts) {
  int64_t d = ts / 86400;
  if (ts % 86400 < 0) d -= 1;
  return d;
}

double entropy_bits(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

// Station index sequences, one per UTC day, in log order.
std::vector<std::vector<std::size_t>> day_sequences(const SightingLog& log,
                                                    const TransitNetwork& net) {
  std::vector<std::vector<std::size_t>> days;
  int64_t cur_day = std::numeric_limits<int64_t>::min();
  for (const ControlSighting& s : log.sightings) {
    const int64_t d = day_of_ts(s.ts_sec);
    if (d != cur_day) {
      days.emplace_back();
      cur_day = d;
    }
    days.back().push_back(net.index_of(s.station_id));
  }
  return days;
}

std::size_t argmax_lex(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;  // strict: first (lex-lowest) index wins ties
  }
  return best;
}

}  // namespace

InspectionStats inspection_stats(const SightingLog& log, const TransitNetwork& net) {
  if (log.empty()) throw EmptyLog("inspection_stats needs a non-empty log");
  const std::size_t S = net.station_count();
  InspectionStats st;
  st.station_ids.reserve(S);
  for (const Station& s : net.stations()) st.station_ids.push_back(s.id);
  st.station_share.assign(S, 0.0);
  st.heatmap.assign(S, {});
  st.inside_rate.assign(S, 0.0);

  std::vector<double> counts(S, 0.0), inside(S, 0.0);
  std::set<std::tuple<std::size_t, int, int64_t>> slot_days;  // (station, slot, day)
  for (const ControlSighting& s : log.sightings) {
    const std::size_t idx = net.index_of(s.station_id);
    counts[idx] += 1.0;
    if (s.inside_vehicle) inside[idx] += 1.0;
    const int hour = hour_of_ts(s.ts_sec);
    st.heatmap[idx][static_cast<std::size_t>(hour)] += 1.0;
    const int64_t day = day_of_ts(s.ts_sec);
    const int slot = slot_index(TimeSlot{day_type_of_day(day), hour});
    slot_days.insert({idx, slot, day});
  }
  const double total = static_cast<double>(log.sightings.size());
  for (std::size_t i = 0; i < S; ++i) {
    st.station_share[i] = counts[i] / total;
    st.inside_rate[i] = counts[i] > 0.0 ? inside[i] / counts[i] : 0.0;
  }

  // days of each type inside the observation window
  std::array<double, 3> type_days{};
  for (int64_t d = day_of_ts(log.first_ts()); d <= day_of_ts(log.last_ts()); ++d) {
    type_days[static_cast<std::size_t>(day_type_of_day(d))] += 1.0;
  }
  std::map<std::pair<std::size_t, int>, double> hits;
  for (const auto& [station, slot, day] : slot_days) hits[{station, slot}] += 1.0;
  for (const auto& [key, n] : hits) {
    const double denom = type_days[static_cast<std::size_t>(slot_from_index(key.second).day)];
    if (denom > 0.0) st.presence_prob[key] = n / denom;
  }
  return st;
}

InspectionStats stats_from_schedule(const std::vector<ControlTrace>& traces,
                                    const TransitNetwork& net) {
  const std::size_t S = net.station_count();
  InspectionStats st;
  st.station_ids.reserve(S);
  for (const Station& s : net.stations()) st.station_ids.push_back(s.id);
  st.station_share.assign(S, 0.0);
  st.heatmap.assign(S, {});
  st.inside_rate.assign(S, 0.0);

  std::array<double, 3> type_traces{};
  std::map<std::pair<std::size_t, int>, double> hits;
  double total = 0.0;
  for (const ControlTrace& t : traces) {
    if (t.visits.empty()) continue;
    const DayType dt = t.visits.front().slot.day;
    type_traces[static_cast<std::size_t>(dt)] += 1.0;
    std::set<std::pair<std::size_t, int>> seen;
    for (const Visit& v : t.visits) {
      const std::size_t idx = net.index_of(v.station_id);
      st.station_share[idx] += 1.0;
      st.heatmap[idx][static_cast<std::size_t>(v.slot.hour)] += 1.0;
      seen.insert({idx, slot_index(v.slot)});
      total += 1.0;
    }
    for (const auto& key : seen) hits[key] += 1.0;
  }
  if (total > 0.0) {
    for (double& v : st.station_share) v /= total;
  }
  for (const auto& [key, n] : hits) {
    const double denom =
        type_traces[static_cast<std::size_t>(slot_from_index(key.second).day)];
    if (denom > 0.0) st.presence_prob[key] = n / denom;
  }
  return st;
}

MarkovModel fit_markov(const SightingLog& log, const TransitNetwork& net, int k) {
  if (k < 1) throw SpecInvalid("markov order must be >= 1");
  if (log.sightings.size() <= static_cast<std::size_t>(k)) {
    throw InsufficientData("log shorter than order " + std::to_string(k));
  }
  const std::size_t S = net.station_count();
  MarkovModel m;
  m.order = k;
  for (const Station& s : net.stations()) m.station_ids.push_back(s.id);
  std::map<std::vector<std::size_t>, std::vector<double>> counts;
  std::vector<double> marginal(S, 0.0);
  double transitions = 0.0;
  for (const auto& day : day_sequences(log, net)) {
    for (std::size_t i = static_cast<std::size_t>(k); i < day.size(); ++i) {
      std::vector<std::size_t> hist(day.begin() + (i - static_cast<std::size_t>(k)),
                                    day.begin() + i);
      auto [it, inserted] = counts.try_emplace(std::move(hist));
      if (inserted) it->second.assign(S, 0.0);
      it->second[day[i]] += 1.0;
      marginal[day[i]] += 1.0;
      transitions += 1.0;
    }
  }
  if (transitions == 0.0) {
    throw InsufficientData("no within-day transitions of order " + std::to_string(k));
  }
  for (auto& [hist, row] : counts) {
    MarkovRow r;
    r.weight = 0.0;
    for (double c : row) r.weight += c;
    r.prob.resize(S);
    for (std::size_t i = 0; i < S; ++i) r.prob[i] = row[i] / r.weight;
    m.rows.emplace(hist, std::move(r));
  }
  m.marginal.resize(S);
  for (std::size_t i = 0; i < S; ++i) m.marginal[i] = marginal[i] / transitions;
  return m;
}

Predictability predictability(const MarkovModel& model, const SightingLog& holdout,
                              const TransitNetwork& net) {
  const std::size_t k = static_cast<std::size_t>(model.order);
  if (holdout.sightings.size() <= k) {
    throw InsufficientData("holdout shorter than model order");
  }
  Predictability p;
  double correct = 0.0;
  for (const auto& day : day_sequences(holdout, net)) {
    for (std::size_t i = k; i < day.size(); ++i) {
      std::vector<std::size_t> hist(day.begin() + (i - k), day.begin() + i);
      auto it = model.rows.find(hist);
      const std::vector<double>& row =
          it != model.rows.end() ? it->second.prob : model.marginal;
      if (argmax_lex(row) == day[i]) correct += 1.0;
      p.evaluated += 1;
    }
  }
  if (p.evaluated == 0) throw InsufficientData("holdout has no within-day transitions");
  p.accuracy = correct / static_cast<double>(p.evaluated);

  double weight_total = 0.0;
  for (const auto& [hist, row] : model.rows) weight_total += row.weight;
  for (const auto& [hist, row] : model.rows) {
    p.entropy_bits += row.weight / weight_total * entropy_bits(row.prob);
  }
  return p;
}

PurchaseDecision selective_purchase(const AttackScenario& sc) {
  if (sc.p_ins < 0.0 || sc.p_ins > 1.0 || sc.fine < 0.0 || sc.ticket < 0.0) {
    throw SpecInvalid("invalid attack scenario");
  }
  const double expected_fine = sc.p_ins * sc.fine;
  return PurchaseDecision{expected_fine >= sc.ticket, sc.ticket - expected_fine};
}

PathRisk min_inspection_path(const TransitNetwork& net, const InspectionStats& stats,
                             const std::string& origin, const std::string& dest,
                             TimeSlot slot) {
  const std::size_t from = net.index_of(origin);
  const std::size_t to = net.index_of(dest);
  const int slot_ix = slot_index(slot);
  if (from == to) {
    return PathRisk{{}, stats.presence(from, slot_ix), 0.0};
  }
  const std::size_t n = net.station_count();
  auto node_cost = [&](std::size_t s) {
    return -std::log(std::max(1.0 - stats.presence(s, slot_ix), 1e-300));
  };
  // Dijkstra on (sum of -log survival, travel minutes), lexicographic.
  using Cost = std::pair<double, double>;
  const Cost inf{std::numeric_limits<double>::infinity(),
                 std::numeric_limits<double>::infinity()};
  std::vector<Cost> dist(n, inf);
  std::vector<std::size_t> prev(n, n);
  dist[from] = {node_cost(from), 0.0};
  using Item = std::pair<Cost, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({dist[from], from});
  while (!pq.empty()) {
    auto [c, u] = pq.top();
    pq.pop();
    if (c > dist[u]) continue;
    for (const auto& [v, w] : net.station_adjacency()[u]) {
      const Cost cand{c.first + node_cost(v), c.second + w};
      if (cand < dist[v]) {
        dist[v] = cand;
        prev[v] = u;
        pq.push({cand, v});
      }
    }
  }
  if (!(dist[to].first < inf.first)) {
    throw NoPath("no path from '" + origin + "' to '" + dest + "'");
  }
  std::vector<std::size_t> path;
  for (std::size_t v = to; v != from; v = prev[v]) path.push_back(v);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  PathRisk out;
  double survive = 1.0;
  for (std::size_t v : path) {
    out.stations.push_back(net.station(v).id);
    survive *= 1.0 - stats.presence(v, slot_ix);
  }
  out.risk = 1.0 - survive;
  out.travel_min = dist[to].second;
  return out;
}

Forecast forecast_controls(const MarkovModel& model,
                           const std::vector<std::string>& recent, int horizon) {
  const std::size_t k = static_cast<std::size_t>(model.order);
  if (recent.size() < k) throw InsufficientData("history shorter than model order");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < model.station_ids.size(); ++i) {
    index[model.station_ids[i]] = i;
  }
  std::vector<std::size_t> hist;
  for (std::size_t i = recent.size() - k; i < recent.size(); ++i) {
    auto it = index.find(recent[i]);
    if (it == index.end()) throw UnknownStation("unknown station '" + recent[i] + "'");
    hist.push_back(it->second);
  }
  Forecast f;
  for (int step = 0; step < horizon; ++step) {
    auto it = model.rows.find(hist);
    std::size_t next;
    if (it != model.rows.end()) {
      next = argmax_lex(it->second.prob);
    } else {
      next = argmax_lex(model.marginal);
      f.used_fallback = true;
    }
    f.stations.push_back(model.station_ids[next]);
    hist.erase(hist.begin());
    hist.push_back(next);
  }
  return f;
}

}  // namespace controlgen
