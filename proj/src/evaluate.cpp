#include "controlgen/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "controlgen/errors.hpp"
#include "controlgen/rng.hpp"

namespace controlgen {

namespace {

// fixed seed for the comparison sample in distribution_similarity
constexpr uint64_t kSimilaritySeed = 0x5eed0f0dULL;

}  // namespace

std::pair<SightingLog, SightingLog> split_log_80_20(const SightingLog& log) {
  std::vector<int64_t> days;
  for (const ControlSighting& s : log.sightings) {
    const int64_t d = s.ts_sec / 86400;
    if (days.empty() || days.back() != d) days.push_back(d);
  }
  const std::size_t train_days = std::max<std::size_t>(1, days.size() * 8 / 10);
  const int64_t cut =
      train_days < days.size() ? days[train_days] : days.back() + 1;
  SightingLog train, test;
  for (const ControlSighting& s : log.sightings) {
    (s.ts_sec / 86400 < cut ? train : test).sightings.push_back(s);
  }
  return {std::move(train), std::move(test)};
}

KSResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw EmptySample("ks_two_sample needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n || j < m) {
    double x;
    if (i < n && j < m) {
      x = std::min(a[i], b[j]);
    } else if (i < n) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < n && a[i] == x) ++i;
    while (j < m && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(n) -
                             static_cast<double>(j) / static_cast<double>(m)));
  }
  KSResult r;
  r.d_stat = d;
  r.n = n;
  r.m = m;
  const double critical =
      1.358 * std::sqrt(static_cast<double>(n + m) /
                        (static_cast<double>(n) * static_cast<double>(m)));
  r.significant_at_05 = d > critical;
  return r;
}

KSResult distribution_similarity(const std::vector<ControlTrace>& traces,
                                 const TargetDistribution& target) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < target.station_ids.size(); ++i) {
    index[target.station_ids[i]] = i;
  }
  std::vector<double> observed;
  for (const ControlTrace& t : traces) {
    for (const Visit& v : t.visits) {
      auto it = index.find(v.station_id);
      if (it == index.end()) {
        throw UnknownStation("trace visits unknown station '" + v.station_id + "'");
      }
      observed.push_back(static_cast<double>(it->second));
    }
  }
  if (observed.empty()) throw EmptySample("schedule has no visits");
  Rng rng(kSimilaritySeed);
  std::vector<double> expected;
  expected.reserve(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    expected.push_back(static_cast<double>(target.sample(rng).first));
  }
  return ks_two_sample(std::move(observed), std::move(expected));
}

double dispersion_rmse(const std::vector<std::vector<double>>& period_counts) {
  if (period_counts.size() < 2) {
    throw NeedTwoPeriods("dispersion needs at least two periods");
  }
  const std::size_t S = period_counts.front().size();
  for (const auto& p : period_counts) {
    if (p.size() != S) throw DimensionMismatch("period vectors differ in length");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < period_counts.size(); ++i) {
    for (std::size_t j = i + 1; j < period_counts.size(); ++j) {
      double sq = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        const double d = period_counts[i][s] - period_counts[j][s];
        sq += d * d;
      }
      total += std::sqrt(sq / static_cast<double>(S));
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

double ride_inspection_prob(const InspectionStats& stats, const TransitNetwork& net,
                            const Trip& trip) {
  double survive = 1.0;
  const int slot = slot_index(trip.slot);
  for (const std::string& id : trip.stations) {
    survive *= 1.0 - stats.presence(net.index_of(id), slot);
  }
  return 1.0 - survive;
}

double payoff_reduction(const InspectionStats& before, const InspectionStats& after,
                        double fine, double ticket, const std::vector<Trip>& trips,
                        const TransitNetwork& net) {
  if (trips.empty()) throw EmptySample("no evaluation trips");
  double payoff_before = 0.0, payoff_after = 0.0;
  for (const Trip& trip : trips) {
    payoff_before +=
        selective_purchase({ride_inspection_prob(before, net, trip), fine, ticket})
            .evade_payoff;
    payoff_after +=
        selective_purchase({ride_inspection_prob(after, net, trip), fine, ticket})
            .evade_payoff;
  }
  return (payoff_before - payoff_after) / static_cast<double>(trips.size());
}

double payoff_reduction(const InspectionStats& before,
                        const std::vector<ControlTrace>& after_schedule, double fine,
                        double ticket, const std::vector<Trip>& trips,
                        const TransitNetwork& net) {
  return payoff_reduction(before, stats_from_schedule(after_schedule, net), fine,
                          ticket, trips, net);
}

SightingLog schedule_as_log(const std::vector<ControlTrace>& schedule,
                            const TransitNetwork& net) {
  SightingLog log;
  int64_t day = 0;
  for (const ControlTrace& t : schedule) {
    for (const Visit& v : t.visits) {
      ControlSighting s;
      s.ts_sec = day * 86400 + 6 * 3600 + static_cast<int64_t>(v.arrive_min * 60.0);
      s.station_id = v.station_id;
      const Station& st = net.station(net.index_of(v.station_id));
      s.lat = st.lat;
      s.lon = st.lon;
      log.sightings.push_back(std::move(s));
    }
    ++day;  // one synthetic controller-day per trace; boundaries reset history
  }
  return log;
}

double predictability_reduction(const SightingLog& before, const SightingLog& after,
                                const TransitNetwork& net, int k) {
  auto run = [&](const SightingLog& log) {
    auto [train, test] = split_log_80_20(log);
    if (train.empty() || test.empty()) {
      throw InsufficientData("log too short for an 80/20 day split");
    }
    return predictability(fit_markov(train, net, k), test, net).accuracy;
  };
  return run(before) - run(after);
}

double predictability_reduction(const SightingLog& before,
                                const std::vector<ControlTrace>& after_schedule,
                                const TransitNetwork& net, int k) {
  return predictability_reduction(before, schedule_as_log(after_schedule, net), net,
                                  k);
}

std::vector<Trip> make_trips(const TransitNetwork& net, std::size_t count,
                             uint64_t seed, const std::set<std::string>& avoid) {
  const std::size_t S = net.station_count();
  if (S < 2) throw SpecInvalid("need at least two stations for trips");
  Rng rng(seed);
  std::vector<Trip> trips;
  trips.reserve(count);
  auto touches_avoided = [&](const std::vector<std::size_t>& path) {
    for (std::size_t s : path) {
      if (avoid.count(net.station(s).id)) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::size_t> path;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const std::size_t o = rng.uniform_int(S);
      std::size_t d = rng.uniform_int(S - 1);
      if (d >= o) ++d;
      path = net.shortest_path(o, d);
      if (avoid.empty() || !touches_avoided(path)) break;
    }
    Trip trip;
    for (std::size_t s : path) trip.stations.push_back(net.station(s).id);
    trip.slot = slot_from_index(static_cast<int>(rng.uniform_int(kSlotCount)));
    trips.push_back(std::move(trip));
  }
  return trips;
}

EvalReport evaluate_schedule(const TimeVaryingNetwork& tvn,
                             const TargetDistribution& target,
                             const SightingLog& before,
                             const std::vector<ControlTrace>& schedule, double fine,
                             double ticket, const std::vector<Trip>& trips, int k) {
  const TransitNetwork& net = tvn.net();
  EvalReport report;
  report.ks = distribution_similarity(schedule, target);
  report.ks_ridership =
      distribution_similarity(schedule, make_target(tvn, 0.0, target.sigma));

  std::vector<std::vector<double>> periods;
  for (const ControlTrace& t : schedule) {
    std::vector<double> counts(net.station_count(), 0.0);
    for (const Visit& v : t.visits) counts[net.index_of(v.station_id)] += 1.0;
    periods.push_back(std::move(counts));
  }
  report.dispersion_rmse = dispersion_rmse(periods);

  const InspectionStats stats_before = inspection_stats(before, net);
  const InspectionStats stats_after = stats_from_schedule(schedule, net);
  report.payoff_delta =
      payoff_reduction(stats_before, stats_after, fine, ticket, trips, net);
  report.predictability_delta =
      predictability_reduction(before, schedule_as_log(schedule, net), net, k);
  report.station_ids = stats_before.station_ids;
  report.shares_before = stats_before.station_share;
  report.shares_after = stats_after.station_share;
  return report;
}

}  // namespace controlgen
