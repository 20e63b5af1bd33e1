#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "controlgen/transit_net.hpp"

namespace controlgen {

struct ControlSighting {
  int64_t ts_sec = 0;  // UTC seconds since epoch
  std::string station_id;
  double lat = 0.0;
  double lon = 0.0;
  bool inside_vehicle = false;
};

struct SightingLog {
  std::vector<ControlSighting> sightings;  // chronologically sorted

  bool empty() const { return sightings.empty(); }
  int64_t first_ts() const { return sightings.front().ts_sec; }
  int64_t last_ts() const { return sightings.back().ts_sec; }
};

// network.json
TransitNetwork parse_network(std::istream& in);
void write_network(const TransitNetwork& net, std::ostream& out);

// sightings.csv: timestamp,station_id,lat,lon,inside_vehicle
SightingLog parse_sightings(std::istream& in);
void write_sightings(const SightingLog& log, std::ostream& out);

// ridership.csv: station_id,day_type,hour,boardings (duplicate keys summed)
RidershipProfile parse_ridership(std::istream& in);
void write_ridership(const RidershipProfile& profile, std::ostream& out);

// traces.jsonl, one trace per line
std::vector<ControlTrace> read_traces(std::istream& in);
void write_traces(const std::vector<ControlTrace>& traces, std::ostream& out);

// --- Synthetic city -------------------------------------------------------
//
// Stand-in for the unpublished crowdsourced dataset: a connected city,
// peaked ridership, and a historical sighting log with three planted
// regularities (hotspot skew, per-station peak hours, weekday/weekend shift)
// for the analysis module to find. Pure function of the spec.

struct SynthSpec {
  uint64_t seed = 7;
  int n_stations = 20;
  int n_routes = 5;
  int days = 1460;             // observation window length
  double concentration = 4.0;  // >= 1; 1 = uniform station shares
  double sightings_per_day = 10.0;
};

// Ground truth of the planted regularities, for tests and reports.
struct SynthTruth {
  std::vector<double> station_weight;  // historical control share per station
  std::vector<int> peak_hour;          // planted weekday peak hour per station
  std::vector<double> inside_bias;     // per-station P(inside_vehicle)
  std::vector<std::size_t> hot_order;  // station indices, most controlled first
  int weekend_shift_hours = 2;
};

struct SynthCity {
  TransitNetwork net;
  RidershipProfile ridership;
  SightingLog sightings;
  SynthTruth truth;
};

SynthCity synth_city(const SynthSpec& spec);

}  // namespace controlgen
