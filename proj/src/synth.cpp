#include <algorithm>
#include <cmath>
#include <numeric>

#include "controlgen/errors.hpp"
#include "controlgen/ingest.hpp"
#include "controlgen/rng.hpp"

namespace controlgen {

namespace {

// Service window for historical controls: 06:00-22:00.
constexpr int kServiceStartMin = 6 * 60;
constexpr int kServiceMinutes = 16 * 60;
constexpr double kNoiseShare = 0.03;  // off-script sightings

std::string padded_id(const char* prefix, int i, int count) {
  int width = 1;
  for (int v = count; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(i);
  while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return std::string(prefix) + digits;
}

double wd_profile(int h) {
  auto bump = [](double h0, double x, double s) {
    return std::exp(-(x - h0) * (x - h0) / (2.0 * s * s));
  };
  return 0.03 + bump(8.0, h, 1.5) + 0.9 * bump(17.5, h, 2.0) + 0.25 * bump(12.5, h, 3.0);
}

double sa_profile(int h) {
  auto bump = [](double h0, double x, double s) {
    return std::exp(-(x - h0) * (x - h0) / (2.0 * s * s));
  };
  return 0.04 + 0.7 * bump(14.0, h, 3.0) + 0.2 * bump(21.0, h, 2.0);
}

double su_profile(int h) {
  auto bump = [](double h0, double x, double s) {
    return std::exp(-(x - h0) * (x - h0) / (2.0 * s * s));
  };
  return 0.04 + 0.5 * bump(14.0, h, 3.5);
}

}  // namespace

SynthCity synth_city(const SynthSpec& spec) {
  if (spec.n_stations < 4) throw SpecInvalid("n_stations must be >= 4");
  if (spec.n_routes < 1) throw SpecInvalid("n_routes must be >= 1");
  if (spec.days < 7) throw SpecInvalid("days must be >= 7");
  if (spec.concentration < 1.0) throw SpecInvalid("concentration must be >= 1");
  if (!(spec.sightings_per_day > 0.0)) throw SpecInvalid("sightings_per_day must be > 0");

  Rng rng(spec.seed);
  const int n = spec.n_stations;

  // --- stations -----------------------------------------------------------
  std::vector<Station> stations;
  stations.reserve(static_cast<std::size_t>(n));
  const double lat0 = 46.52, lon0 = 6.63;
  for (int i = 0; i < n; ++i) {
    Station s;
    s.id = padded_id("s", i + 1, n);
    s.name = "Stop " + std::to_string(i + 1);
    s.lat = lat0 + rng.uniform(-0.05, 0.05);
    s.lon = lon0 + rng.uniform(-0.07, 0.07);
    s.zone = std::string("Z") + (s.lat >= lat0 ? (s.lon >= lon0 ? "1" : "2")
                                               : (s.lon >= lon0 ? "3" : "4"));
    s.dwell_min = 10.0;
    stations.push_back(std::move(s));
  }

  // --- routes: contiguous segments of a shuffled chain, overlapping by one
  // station so the network is connected by construction ---------------------
  std::vector<std::size_t> chain(static_cast<std::size_t>(n));
  std::iota(chain.begin(), chain.end(), 0u);
  rng.shuffle(chain);

  std::vector<Route> routes;
  const int chain_routes = std::min(spec.n_routes, n - 1);
  const int edges = n - 1;
  int edge_pos = 0;
  for (int r = 0; r < chain_routes; ++r) {
    const int take = edges / chain_routes + (r < edges % chain_routes ? 1 : 0);
    Route route;
    route.id = padded_id("r", r + 1, spec.n_routes);
    route.name = "Line " + std::to_string(r + 1);
    for (int e = edge_pos; e <= edge_pos + take; ++e) {
      route.stops.push_back(stations[chain[static_cast<std::size_t>(e)]].id);
    }
    for (int e = 0; e < take; ++e) {
      route.leg_minutes.push_back(std::round(rng.uniform(2.0, 8.0) * 10.0) / 10.0);
    }
    edge_pos += take;
    routes.push_back(std::move(route));
  }
  for (int r = chain_routes; r < spec.n_routes; ++r) {
    // express route over random distinct stations
    Route route;
    route.id = padded_id("r", r + 1, spec.n_routes);
    route.name = "Express " + std::to_string(r + 1);
    std::vector<std::size_t> pick(static_cast<std::size_t>(n));
    std::iota(pick.begin(), pick.end(), 0u);
    rng.shuffle(pick);
    const std::size_t stops = 2 + rng.uniform_int(2);
    for (std::size_t i = 0; i < stops; ++i) {
      route.stops.push_back(stations[pick[i]].id);
    }
    for (std::size_t i = 0; i + 1 < stops; ++i) {
      route.leg_minutes.push_back(std::round(rng.uniform(3.0, 9.0) * 10.0) / 10.0);
    }
    routes.push_back(std::move(route));
  }

  TransitNetwork net = TransitNetwork::build(std::move(stations), std::move(routes));
  // station indices below refer to the network's sorted order
  const std::size_t S = net.station_count();

  // --- ridership: per-station base load, morning/evening weekday peaks -----
  RidershipProfile ridership;
  std::vector<double> base(S);
  for (std::size_t s = 0; s < S; ++s) {
    const double u = rng.uniform();
    base[s] = 80.0 + 400.0 * u * u;
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      ridership.add(net.station(s).id, TimeSlot{DayType::WD, h},
                    std::round(base[s] * wd_profile(h)));
      ridership.add(net.station(s).id, TimeSlot{DayType::SA, h},
                    std::round(base[s] * sa_profile(h)));
      ridership.add(net.station(s).id, TimeSlot{DayType::SU, h},
                    std::round(base[s] * su_profile(h)));
    }
  }

  // --- historical control shares: geometric decay over a seeded hot order --
  SynthTruth truth;
  truth.station_weight.assign(S, 0.0);
  truth.hot_order.resize(S);
  std::iota(truth.hot_order.begin(), truth.hot_order.end(), 0u);
  rng.shuffle(truth.hot_order);
  {
    const double rho = std::exp(-(spec.concentration - 1.0) / 10.0);
    double mass = 0.0;
    for (std::size_t r = 0; r < S; ++r) {
      const double w = std::pow(rho, static_cast<double>(r));
      truth.station_weight[truth.hot_order[r]] = w;
      mass += w;
    }
    for (double& w : truth.station_weight) w /= mass;
  }

  // --- daily patrol script: one disjoint minute-block per station inside the
  // service window, width proportional to its share. A station's sightings
  // cluster around its block center, which is the planted peak hour. ---------
  std::vector<int> block_start(S), block_width(S);
  {
    std::vector<int> width(S, 0);
    std::vector<std::pair<double, std::size_t>> rem;
    int used = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const double raw = truth.station_weight[s] * kServiceMinutes;
      width[s] = static_cast<int>(raw);
      rem.push_back({raw - width[s], s});
      used += width[s];
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int i = 0; i < kServiceMinutes - used; ++i) width[rem[static_cast<std::size_t>(i) % S].second] += 1;
    // keep every block wide enough to hold a cluster
    for (std::size_t s = 0; s < S; ++s) {
      while (width[s] < 4) {
        std::size_t widest = std::max_element(width.begin(), width.end()) - width.begin();
        width[widest] -= 1;
        width[s] += 1;
      }
    }
    std::vector<std::size_t> order(S);
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(order);
    int pos = 0;
    for (std::size_t s : order) {
      block_start[s] = pos;
      block_width[s] = width[s];
      pos += width[s];
    }
  }
  truth.peak_hour.resize(S);
  truth.inside_bias.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    truth.peak_hour[s] = (kServiceStartMin + block_start[s] + block_width[s] / 2) / 60;
    truth.inside_bias[s] = 0.2 + 0.6 * rng.uniform();
  }
  truth.weekend_shift_hours = 2;

  // --- sightings ------------------------------------------------------------
  SightingLog log;
  const int64_t start_day = days_from_civil(2019, 1, 1);
  // weekday rate r solves (5r + 2*0.6r)/7 = sightings_per_day
  const double r_wd = spec.sightings_per_day * 7.0 / 6.2;
  const int shift_min = truth.weekend_shift_hours * 60;
  for (int d = 0; d < spec.days; ++d) {
    const int64_t day = start_day + d;
    const DayType dt = day_type_of_day(day);
    const bool weekend = dt != DayType::WD;
    const int count = rng.poisson(weekend ? 0.6 * r_wd : r_wd);
    for (int i = 0; i < count; ++i) {
      std::size_t s;
      double minute;
      if (rng.uniform() < kNoiseShare) {
        s = rng.uniform_int(S);
        minute = rng.uniform(0.0, kServiceMinutes);
      } else {
        s = rng.categorical(truth.station_weight);
        const int offset = weekend ? shift_min : 0;
        const double center = block_start[s] + block_width[s] / 2.0;
        const double sigma = std::max(2.0, block_width[s] / 6.0);
        double m;
        do {
          m = rng.normal(center, sigma);
        } while (m < block_start[s] || m >= block_start[s] + block_width[s]);
        minute = m + offset;
        if (minute >= kServiceMinutes) minute -= kServiceMinutes;
      }
      ControlSighting c;
      c.ts_sec = day * 86400 + (kServiceStartMin + static_cast<int>(minute)) * 60 +
                 static_cast<int64_t>(rng.uniform_int(60));
      c.station_id = net.station(s).id;
      c.lat = net.station(s).lat + rng.normal(0.0, 0.003);
      c.lon = net.station(s).lon + rng.normal(0.0, 0.003);
      c.inside_vehicle = rng.uniform() < truth.inside_bias[s];
      log.sightings.push_back(std::move(c));
    }
  }
  std::stable_sort(log.sightings.begin(), log.sightings.end(),
                   [](const ControlSighting& a, const ControlSighting& b) {
                     return a.ts_sec < b.ts_sec;
                   });

  return SynthCity{std::move(net), std::move(ridership), std::move(log),
                   std::move(truth)};
}

}  // namespace controlgen
