#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "controlgen/attack.hpp"
#include "controlgen/errors.hpp"
#include "controlgen/ingest.hpp"
#include "controlgen/rng.hpp"

using namespace controlgen;

namespace {

Station st(std::string id) {
  Station s;
  s.id = std::move(id);
  s.name = s.id;
  return s;
}

Route rt(std::string id, std::vector<std::string> stops, std::vector<double> legs) {
  Route r;
  r.id = std::move(id);
  r.name = r.id;
  r.stops = std::move(stops);
  r.leg_minutes = std::move(legs);
  return r;
}

TransitNetwork line_net(int n, double leg = 4.0) {
  std::vector<Station> stations;
  std::vector<std::string> stops;
  for (int i = 0; i < n; ++i) {
    stations.push_back(st(std::string(1, static_cast<char>('a' + i))));
    stops.push_back(stations.back().id);
  }
  return TransitNetwork::build(std::move(stations),
                               {rt("r1", stops, std::vector<double>(n - 1, leg))});
}

ControlSighting sighting(int64_t day, int minute_of_day, std::string station,
                         bool inside = false) {
  ControlSighting s;
  s.ts_sec = day * 86400 + static_cast<int64_t>(minute_of_day) * 60;
  s.station_id = std::move(station);
  s.inside_vehicle = inside;
  return s;
}

SightingLog make_log(std::vector<ControlSighting> sightings) {
  SightingLog log;
  log.sightings = std::move(sightings);
  std::stable_sort(log.sightings.begin(), log.sightings.end(),
                   [](const ControlSighting& a, const ControlSighting& b) {
                     return a.ts_sec < b.ts_sec;
                   });
  return log;
}

// cycle a->b->a->b..., `per_day` sightings each day
SightingLog cycle_log(int days, int per_day) {
  std::vector<ControlSighting> v;
  for (int d = 0; d < days; ++d) {
    for (int i = 0; i < per_day; ++i) {
      v.push_back(sighting(d, 9 * 60 + i * 30, i % 2 == 0 ? "a" : "b"));
    }
  }
  return make_log(std::move(v));
}

// all simple paths, exact risk product; the oracle for min_inspection_path
void enumerate_paths(const TransitNetwork& net, const InspectionStats& stats,
                     std::size_t u, std::size_t dest, int slot,
                     std::vector<bool>& used, double survive, double travel,
                     double& best_risk, double& best_travel) {
  survive *= 1.0 - stats.presence(u, slot);
  if (u == dest) {
    const double risk = 1.0 - survive;
    if (risk < best_risk - 1e-12 ||
        (std::abs(risk - best_risk) <= 1e-12 && travel < best_travel)) {
      best_risk = risk;
      best_travel = travel;
    }
    return;
  }
  used[u] = true;
  for (const auto& [v, w] : net.station_adjacency()[u]) {
    if (!used[v]) {
      enumerate_paths(net, stats, v, dest, slot, used, survive, travel + w,
                      best_risk, best_travel);
    }
  }
  used[u] = false;
}

}  // namespace

TEST_CASE("inspection_stats: degenerate concentration at one station") {
  const TransitNetwork net = line_net(3);
  std::vector<ControlSighting> v;
  for (int i = 0; i < 10; ++i) v.push_back(sighting(0, 8 * 60 + i, "a"));
  const InspectionStats stats = inspection_stats(make_log(std::move(v)), net);
  CHECK(stats.station_share[net.index_of("a")] == 1.0);
  CHECK(stats.station_share[net.index_of("b")] == 0.0);
  CHECK(stats.station_share[net.index_of("c")] == 0.0);
}

TEST_CASE("inspection_stats: single sighting puts one unit in one heatmap cell") {
  const TransitNetwork net = line_net(2);
  const InspectionStats stats =
      inspection_stats(make_log({sighting(0, 8 * 60 + 15, "a")}), net);
  double total = 0.0;
  int nonzero = 0;
  for (const auto& row : stats.heatmap) {
    for (double c : row) {
      total += c;
      nonzero += c != 0.0;
    }
  }
  CHECK(nonzero == 1);
  CHECK(total == 1.0);
  CHECK(stats.heatmap[net.index_of("a")][8] == 1.0);
}

TEST_CASE("inspection_stats: share vector equals an independent tally, exactly") {
  SynthSpec spec;
  spec.seed = 7;
  spec.n_stations = 20;
  spec.n_routes = 5;
  spec.days = 365;
  spec.concentration = 8.0;
  const SynthCity city = synth_city(spec);
  const InspectionStats stats = inspection_stats(city.sightings, city.net);

  // one-pass tally oracle over the raw records
  std::map<std::string, double> tally;
  for (const auto& s : city.sightings.sightings) tally[s.station_id] += 1.0;
  const double n = static_cast<double>(city.sightings.sightings.size());
  double share_sum = 0.0;
  for (std::size_t i = 0; i < city.net.station_count(); ++i) {
    CHECK(stats.station_share[i] == tally[city.net.station(i).id] / n);
    share_sum += stats.station_share[i];
  }
  CHECK(share_sum == doctest::Approx(1.0).epsilon(1e-9));

  // heatmap marginal over hours equals station counts
  for (std::size_t i = 0; i < city.net.station_count(); ++i) {
    double row = 0.0;
    for (double c : stats.heatmap[i]) row += c;
    CHECK(row == tally[city.net.station(i).id]);
  }
  // presence probabilities are probabilities
  for (const auto& [key, p] : stats.presence_prob) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("inspection_stats: presence is the fraction of same-type days covered") {
  const TransitNetwork net = line_net(2);
  // 2019-01-07 is a Monday; window = Mon..Fri (5 weekdays), sightings at "a"
  // during hour 8 on two of them
  const int64_t mon = days_from_civil(2019, 1, 7);
  const SightingLog log = make_log({sighting(mon, 8 * 60, "a"),
                                    sighting(mon, 8 * 60 + 30, "a"),
                                    sighting(mon + 2, 8 * 60 + 10, "a"),
                                    sighting(mon + 4, 12 * 60, "b")});
  const InspectionStats stats = inspection_stats(log, net);
  const int slot = slot_index({DayType::WD, 8});
  CHECK(stats.presence(net.index_of("a"), slot) == doctest::Approx(2.0 / 5.0));
  CHECK(stats.presence(net.index_of("b"), slot) == 0.0);
  CHECK(stats.presence(net.index_of("b"), slot_index({DayType::WD, 12})) ==
        doctest::Approx(1.0 / 5.0));
}

TEST_CASE("inspection_stats: inside_vehicle rate per station") {
  const TransitNetwork net = line_net(2);
  const InspectionStats stats = inspection_stats(
      make_log({sighting(0, 480, "a", true), sighting(0, 490, "a", false),
                sighting(0, 500, "b", true)}),
      net);
  CHECK(stats.inside_rate[net.index_of("a")] == 0.5);
  CHECK(stats.inside_rate[net.index_of("b")] == 1.0);
}

TEST_CASE("inspection_stats: errors") {
  const TransitNetwork net = line_net(2);
  CHECK_THROWS_AS(inspection_stats(SightingLog{}, net), EmptyLog);
  CHECK_THROWS_AS(inspection_stats(make_log({sighting(0, 480, "zz")}), net),
                  UnknownStation);
}

TEST_CASE("fit_markov: deterministic cycle gives unit transitions") {
  const TransitNetwork net = line_net(2);
  const MarkovModel m = fit_markov(cycle_log(5, 6), net, 1);
  const auto& row_a = m.rows.at({net.index_of("a")});
  const auto& row_b = m.rows.at({net.index_of("b")});
  CHECK(row_a.prob[net.index_of("b")] == 1.0);
  CHECK(row_b.prob[net.index_of("a")] == 1.0);
}

TEST_CASE("fit_markov: order too large for the log") {
  const TransitNetwork net = line_net(2);
  const SightingLog log = make_log({sighting(0, 480, "a"), sighting(0, 490, "b")});
  CHECK_THROWS_AS(fit_markov(log, net, 2), InsufficientData);
  CHECK_THROWS_AS(fit_markov(log, net, 5), InsufficientData);
}

TEST_CASE("fit_markov: day boundaries reset history") {
  const TransitNetwork net = line_net(3);
  // a then b at 23:50 / next day 00:10: no a->b transition
  const SightingLog log = make_log({sighting(0, 23 * 60 + 50, "a"),
                                    sighting(1, 10, "b"), sighting(1, 30, "c"),
                                    sighting(1, 50, "b")});
  const MarkovModel m = fit_markov(log, net, 1);
  CHECK(m.rows.find({net.index_of("a")}) == m.rows.end());
  CHECK(m.rows.at({net.index_of("b")}).prob[net.index_of("c")] == 1.0);
}

TEST_CASE("fit_markov: recovers a known 3-state chain within L-inf 0.05") {
  const TransitNetwork net = line_net(3);
  const std::vector<std::vector<double>> truth = {
      {0.1, 0.6, 0.3}, {0.5, 0.2, 0.3}, {0.25, 0.25, 0.5}};
  Rng rng(99);
  std::vector<ControlSighting> v;
  std::size_t cur = 0;
  const int per_day = 1440;
  for (int i = 0; i < 10050; ++i) {
    v.push_back(sighting(i / per_day, i % per_day,
                         std::string(1, static_cast<char>('a' + cur))));
    cur = rng.categorical(truth[cur]);
  }
  const MarkovModel m = fit_markov(make_log(std::move(v)), net, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& row = m.rows.at({i});
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(row.prob[j] - truth[i][j]) < 0.05);
    }
  }
}

TEST_CASE("predictability: deterministic cycle is fully predictable") {
  const TransitNetwork net = line_net(2);
  const MarkovModel m = fit_markov(cycle_log(5, 6), net, 1);
  const Predictability p = predictability(m, cycle_log(3, 6), net);
  CHECK(p.accuracy == 1.0);
  CHECK(p.entropy_bits == 0.0);
}

TEST_CASE("predictability: iid uniform over 4 stations") {
  const TransitNetwork net = line_net(4);
  Rng rng(5);
  auto draw_log = [&](int count, int64_t day0) {
    std::vector<ControlSighting> v;
    for (int i = 0; i < count; ++i) {
      v.push_back(sighting(day0 + i / 1440, i % 1440,
                           std::string(1, static_cast<char>('a' + rng.uniform_int(4)))));
    }
    return make_log(std::move(v));
  };
  const MarkovModel m = fit_markov(draw_log(10000, 0), net, 1);
  const Predictability p = predictability(m, draw_log(4000, 100), net);
  CHECK(p.accuracy == doctest::Approx(0.25).epsilon(0.2));  // 0.25 +/- 0.05
  CHECK(std::abs(p.accuracy - 0.25) < 0.05);
  CHECK(std::abs(p.entropy_bits - 2.0) < 0.1);
}

TEST_CASE("predictability: holdout of length k is insufficient") {
  const TransitNetwork net = line_net(2);
  const MarkovModel m = fit_markov(cycle_log(5, 6), net, 1);
  const SightingLog holdout = make_log({sighting(0, 480, "a")});
  CHECK_THROWS_AS(predictability(m, holdout, net), InsufficientData);
}

TEST_CASE("predictability: training accuracy beats the order-0 predictor") {
  SynthSpec spec;
  spec.seed = 13;
  spec.n_stations = 12;
  spec.n_routes = 3;
  spec.days = 200;
  spec.concentration = 6.0;
  const SynthCity city = synth_city(spec);
  const MarkovModel m = fit_markov(city.sightings, city.net, 1);
  const Predictability p = predictability(m, city.sightings, city.net);

  // order-0: always predict the most common next station
  std::size_t best = 0;
  for (std::size_t i = 1; i < m.marginal.size(); ++i) {
    if (m.marginal[i] > m.marginal[best]) best = i;
  }
  const InspectionStats stats = inspection_stats(city.sightings, city.net);
  double correct = 0.0, total = 0.0;
  int64_t prev_day = -1;
  bool have_prev = false;
  for (const auto& s : city.sightings.sightings) {
    const int64_t day = s.ts_sec / 86400;
    if (day != prev_day) {
      have_prev = false;
      prev_day = day;
    }
    if (have_prev) {
      correct += city.net.index_of(s.station_id) == best ? 1.0 : 0.0;
      total += 1.0;
    }
    have_prev = true;
  }
  CHECK(p.accuracy >= correct / total);
}

TEST_CASE("selective_purchase: expected-fine rule") {
  {
    const PurchaseDecision d = selective_purchase({0.1, 100.0, 3.0});
    CHECK(d.purchase);
    CHECK(d.evade_payoff == doctest::Approx(-7.0));
  }
  {
    const PurchaseDecision d = selective_purchase({0.02, 100.0, 3.0});
    CHECK_FALSE(d.purchase);
    CHECK(d.evade_payoff == doctest::Approx(1.0));
  }
  {
    // P*F == T exactly: tie buys the ticket
    const PurchaseDecision d = selective_purchase({0.03, 100.0, 3.0});
    CHECK(d.purchase);
    CHECK(d.evade_payoff == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(selective_purchase({1.5, 100.0, 3.0}), SpecInvalid);
}

TEST_CASE("selective_purchase: decision invariant under common scaling") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform();
    const double f = rng.uniform(0.0, 200.0);
    const double t = rng.uniform(0.0, 10.0);
    const double scale = rng.uniform(0.1, 50.0);
    CHECK(selective_purchase({p, f, t}).purchase ==
          selective_purchase({p, f * scale, t * scale}).purchase);
  }
}

TEST_CASE("min_inspection_path: zero presence falls back to travel-shortest") {
  const TransitNetwork net = line_net(4);
  InspectionStats stats;
  stats.station_ids = {"a", "b", "c", "d"};
  const PathRisk pr = min_inspection_path(net, stats, "a", "d", {DayType::WD, 9});
  CHECK(pr.risk == 0.0);
  CHECK(pr.travel_min == doctest::Approx(12.0));
  CHECK(pr.stations == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("min_inspection_path: origin equals destination") {
  const TransitNetwork net = line_net(2);
  InspectionStats stats;
  stats.presence_prob[{net.index_of("a"), slot_index({DayType::WD, 9})}] = 0.4;
  const PathRisk pr = min_inspection_path(net, stats, "a", "a", {DayType::WD, 9});
  CHECK(pr.stations.empty());
  CHECK(pr.risk == doctest::Approx(0.4));
}

TEST_CASE("min_inspection_path: detour around a hotspot matches the oracle") {
  // b is the hotspot on the direct path; d-e is the clean detour
  auto net = TransitNetwork::build(
      {st("a"), st("b"), st("c"), st("d"), st("e")},
      {rt("r1", {"a", "b", "c"}, {3.0, 3.0}),
       rt("r2", {"a", "d", "e", "c"}, {4.0, 4.0, 4.0})});
  const int slot = slot_index({DayType::WD, 17});
  InspectionStats stats;
  stats.presence_prob[{net.index_of("b"), slot}] = 0.9;
  stats.presence_prob[{net.index_of("d"), slot}] = 0.05;

  const PathRisk pr = min_inspection_path(net, stats, "a", "c", {DayType::WD, 17});

  std::vector<bool> used(net.station_count(), false);
  double best_risk = 2.0, best_travel = 0.0;
  enumerate_paths(net, stats, net.index_of("a"), net.index_of("c"), slot, used, 1.0,
                  0.0, best_risk, best_travel);
  CHECK(pr.risk == doctest::Approx(best_risk).epsilon(1e-9));
  CHECK(pr.travel_min == doctest::Approx(best_travel).epsilon(1e-9));
  CHECK(pr.stations == std::vector<std::string>{"a", "d", "e", "c"});

  // and never worse than the travel-shortest path
  const PathRisk direct = min_inspection_path(net, InspectionStats{}, "a", "c",
                                              {DayType::WD, 17});
  double survive = 1.0;
  for (const auto& id : direct.stations) {
    survive *= 1.0 - stats.presence(net.index_of(id), slot);
  }
  CHECK(pr.risk <= 1.0 - survive + 1e-12);
}

TEST_CASE("min_inspection_path: randomized nets match the oracle") {
  SynthSpec spec;
  spec.seed = 31;
  spec.n_stations = 8;
  spec.n_routes = 3;
  spec.days = 30;
  const SynthCity city = synth_city(spec);
  Rng rng(6);
  const int slot = slot_index({DayType::WD, 8});
  InspectionStats stats;
  for (std::size_t s = 0; s < city.net.station_count(); ++s) {
    if (rng.uniform() < 0.5) {
      stats.presence_prob[{s, slot}] = rng.uniform(0.0, 0.95);
    }
  }
  for (int it = 0; it < 20; ++it) {
    const std::size_t o = rng.uniform_int(city.net.station_count());
    std::size_t d = rng.uniform_int(city.net.station_count() - 1);
    if (d >= o) ++d;
    const PathRisk pr = min_inspection_path(city.net, stats,
                                            city.net.station(o).id,
                                            city.net.station(d).id,
                                            {DayType::WD, 8});
    std::vector<bool> used(city.net.station_count(), false);
    double best_risk = 2.0, best_travel = 0.0;
    enumerate_paths(city.net, stats, o, d, slot, used, 1.0, 0.0, best_risk,
                    best_travel);
    CHECK(pr.risk == doctest::Approx(best_risk).epsilon(1e-9));
  }
}

TEST_CASE("forecast_controls: greedy rollout on a deterministic cycle") {
  const TransitNetwork net = line_net(2);
  const MarkovModel m = fit_markov(cycle_log(5, 6), net, 1);
  const Forecast f = forecast_controls(m, {"a"}, 3);
  CHECK(f.stations == std::vector<std::string>{"b", "a", "b"});
  CHECK_FALSE(f.used_fallback);
  CHECK(forecast_controls(m, {"a"}, 0).stations.empty());
  CHECK_THROWS_AS(forecast_controls(m, {}, 3), InsufficientData);
}

TEST_CASE("forecast_controls: matches a manual greedy rollout") {
  const TransitNetwork net = line_net(3);
  // chain with known argmax structure: a->b (0.7), b->c (0.6), c->a (0.8)
  std::vector<ControlSighting> v;
  Rng rng(77);
  const std::vector<std::vector<double>> truth = {
      {0.2, 0.7, 0.1}, {0.3, 0.1, 0.6}, {0.8, 0.1, 0.1}};
  std::size_t cur = 0;
  for (int i = 0; i < 5000; ++i) {
    v.push_back(sighting(0, 0, std::string(1, static_cast<char>('a' + cur))));
    v.back().ts_sec = static_cast<int64_t>(i) * 60;
    cur = rng.categorical(truth[cur]);
  }
  const MarkovModel m = fit_markov(make_log(std::move(v)), net, 1);
  // manual rollout from a: argmax rows follow a -> b -> c -> a ...
  const Forecast f = forecast_controls(m, {"a"}, 5);
  CHECK(f.stations == std::vector<std::string>{"b", "c", "a", "b", "c"});
}

TEST_CASE("forecast_controls: unseen history falls back to the marginal") {
  const TransitNetwork net = line_net(3);
  // only a->b->a transitions observed; c never appears in a history
  const MarkovModel m = fit_markov(cycle_log(5, 6), net, 1);
  const Forecast f = forecast_controls(m, {"c"}, 2);
  CHECK(f.used_fallback);
  CHECK(f.stations.size() == 2);
}
