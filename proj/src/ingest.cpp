#include "controlgen/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "controlgen/errors.hpp"
#include "json.hpp"

namespace controlgen {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double_field(const std::string& s, int row, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ": bad " + what + " '" + s + "'");
  }
}

long parse_int_field(const std::string& s, int row, const char* what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ": bad " + what + " '" + s + "'");
  }
}

// Shortest round-trip decimal form; keeps file output byte-stable.
std::string num(double v) {
  json j = v;
  return j.dump();
}

}  // namespace

TransitNetwork parse_network(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("network.json: ") + e.what());
  }
  std::vector<Station> stations;
  std::vector<Route> routes;
  try {
    if (!j.is_object() || !j.contains("stations") || !j.contains("routes")) {
      throw ParseError("network.json: missing 'stations' or 'routes'");
    }
    for (const auto& js : j.at("stations")) {
      Station s;
      s.id = js.at("id").get<std::string>();
      s.name = js.value("name", s.id);
      s.lat = js.at("lat").get<double>();
      s.lon = js.at("lon").get<double>();
      if (js.contains("zone") && !js.at("zone").is_null()) {
        s.zone = js.at("zone").get<std::string>();
      }
      s.dwell_min = js.value("dwell_min", 10.0);
      stations.push_back(std::move(s));
    }
    for (const auto& jr : j.at("routes")) {
      Route r;
      r.id = jr.at("id").get<std::string>();
      r.name = jr.value("name", r.id);
      r.stops = jr.at("stops").get<std::vector<std::string>>();
      r.leg_minutes = jr.at("leg_minutes").get<std::vector<double>>();
      if (r.leg_minutes.size() + 1 != r.stops.size()) {
        throw ParseError("route '" + r.id + "': leg_minutes length " +
                         std::to_string(r.leg_minutes.size()) + " != stops - 1");
      }
      routes.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("network.json: ") + e.what());
  }
  return TransitNetwork::build(std::move(stations), std::move(routes));
}

void write_network(const TransitNetwork& net, std::ostream& out) {
  json stations = json::array();
  for (const Station& s : net.stations()) {
    json js{{"id", s.id},   {"name", s.name},         {"lat", s.lat},
            {"lon", s.lon}, {"dwell_min", s.dwell_min}};
    if (s.zone) js["zone"] = *s.zone;
    stations.push_back(std::move(js));
  }
  json routes = json::array();
  for (const Route& r : net.routes()) {
    routes.push_back(json{{"id", r.id},
                          {"name", r.name},
                          {"stops", r.stops},
                          {"leg_minutes", r.leg_minutes}});
  }
  out << json{{"stations", stations}, {"routes", routes}}.dump(2) << "\n";
}

SightingLog parse_sightings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyLog("sightings stream is empty");
  {
    auto header = split_csv_row(line);
    const std::vector<std::string> want = {"timestamp", "station_id", "lat", "lon",
                                           "inside_vehicle"};
    if (std::vector<std::string>(header.begin(), header.end()) != want) {
      throw ParseError("sightings.csv: unexpected header '" + line + "'");
    }
  }
  SightingLog log;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = split_csv_row(line);
    if (f.size() != 5) {
      throw ParseError("row " + std::to_string(row) + ": expected 5 fields, got " +
                       std::to_string(f.size()));
    }
    ControlSighting s;
    auto ts = parse_iso8601(f[0]);
    if (!ts) throw ParseError("row " + std::to_string(row) + ": bad timestamp '" + f[0] + "'");
    s.ts_sec = *ts;
    s.station_id = f[1];
    if (s.station_id.empty()) {
      throw ParseError("row " + std::to_string(row) + ": empty station_id");
    }
    s.lat = parse_double_field(f[2], row, "lat");
    s.lon = parse_double_field(f[3], row, "lon");
    if (f[4] == "0" || f[4] == "false") {
      s.inside_vehicle = false;
    } else if (f[4] == "1" || f[4] == "true") {
      s.inside_vehicle = true;
    } else {
      throw ParseError("row " + std::to_string(row) + ": bad inside_vehicle '" + f[4] + "'");
    }
    log.sightings.push_back(std::move(s));
  }
  if (log.sightings.empty()) throw EmptyLog("sightings.csv has no data rows");
  std::stable_sort(log.sightings.begin(), log.sightings.end(),
                   [](const ControlSighting& a, const ControlSighting& b) {
                     return a.ts_sec < b.ts_sec;
                   });
  return log;
}

void write_sightings(const SightingLog& log, std::ostream& out) {
  out << "timestamp,station_id,lat,lon,inside_vehicle\n";
  for (const ControlSighting& s : log.sightings) {
    out << format_iso8601(s.ts_sec) << ',' << s.station_id << ',' << num(s.lat)
        << ',' << num(s.lon) << ',' << (s.inside_vehicle ? '1' : '0') << '\n';
  }
}

RidershipProfile parse_ridership(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("ridership stream is empty");
  {
    auto header = split_csv_row(line);
    const std::vector<std::string> want = {"station_id", "day_type", "hour", "boardings"};
    if (std::vector<std::string>(header.begin(), header.end()) != want) {
      throw ParseError("ridership.csv: unexpected header '" + line + "'");
    }
  }
  RidershipProfile profile;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = split_csv_row(line);
    if (f.size() != 4) {
      throw ParseError("row " + std::to_string(row) + ": expected 4 fields, got " +
                       std::to_string(f.size()));
    }
    if (f[0].empty()) throw ParseError("row " + std::to_string(row) + ": empty station_id");
    auto day = parse_day_type(f[1]);
    if (!day) throw ParseError("row " + std::to_string(row) + ": bad day_type '" + f[1] + "'");
    long hour = parse_int_field(f[2], row, "hour");
    if (hour < 0 || hour > 23) {
      throw ParseError("row " + std::to_string(row) + ": hour out of range '" + f[2] + "'");
    }
    double boardings = parse_double_field(f[3], row, "boardings");
    if (boardings < 0.0) {
      throw NegativeCount("row " + std::to_string(row) + ": negative boardings");
    }
    profile.add(f[0], TimeSlot{*day, static_cast<int>(hour)}, boardings);
  }
  return profile;
}

void write_ridership(const RidershipProfile& profile, std::ostream& out) {
  out << "station_id,day_type,hour,boardings\n";
  for (const auto& [id, slots] : profile.boardings) {
    for (int i = 0; i < kSlotCount; ++i) {
      const double v = slots[static_cast<std::size_t>(i)];
      if (v <= 0.0) continue;
      const TimeSlot slot = slot_from_index(i);
      out << id << ',' << day_type_name(slot.day) << ',' << slot.hour << ','
          << num(v) << '\n';
    }
  }
}

std::vector<ControlTrace> read_traces(std::istream& in) {
  std::vector<ControlTrace> traces;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(n) + ": " + e.what());
    }
    ControlTrace t;
    try {
      if (!j.contains("visits")) {
        throw ParseError("line " + std::to_string(n) + ": missing 'visits'");
      }
      t.controller_id = j.at("controller_id").get<std::string>();
      for (const auto& jv : j.at("visits")) {
        Visit v;
        v.station_id = jv.at("station_id").get<std::string>();
        auto day = parse_day_type(jv.at("day_type").get<std::string>());
        if (!day) {
          throw ParseError("line " + std::to_string(n) + ": bad day_type");
        }
        const int hour = jv.at("hour").get<int>();
        if (hour < 0 || hour > 23) {
          throw ParseError("line " + std::to_string(n) + ": hour out of range");
        }
        v.slot = TimeSlot{*day, hour};
        v.arrive_min = jv.at("arrive_min").get<double>();
        v.depart_min = jv.at("depart_min").get<double>();
        t.visits.push_back(std::move(v));
      }
      t.cost_min = j.at("cost_min").get<double>();
      t.quality = j.at("quality").get<double>();
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(n) + ": " + e.what());
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

void write_traces(const std::vector<ControlTrace>& traces, std::ostream& out) {
  for (const ControlTrace& t : traces) {
    json visits = json::array();
    for (const Visit& v : t.visits) {
      visits.push_back(json{{"station_id", v.station_id},
                            {"day_type", day_type_name(v.slot.day)},
                            {"hour", v.slot.hour},
                            {"arrive_min", v.arrive_min},
                            {"depart_min", v.depart_min}});
    }
    out << json{{"controller_id", t.controller_id},
                {"visits", visits},
                {"cost_min", t.cost_min},
                {"quality", t.quality}}
               .dump()
        << '\n';
  }
}

}  // namespace controlgen
