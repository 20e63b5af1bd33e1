// Times the serial reference kernels against their OpenMP variants on a
// synthetic city: all-pairs travel matrix, baseline walk batches, and policy
// rollout batches. The outputs must match bit-for-bit; this binary checks that
// too before printing timings.

#include <chrono>
#include <cstdio>
#include <string>

#include "controlgen/ingest.hpp"
#include "controlgen/target.hpp"
#include "controlgen/trace_gen.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace controlgen;
using Clock = std::chrono::high_resolution_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool same_traces(const std::vector<ControlTrace>& a,
                 const std::vector<ControlTrace>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].cost_min != b[i].cost_min || a[i].quality != b[i].quality ||
        a[i].visits.size() != b[i].visits.size()) {
      return false;
    }
    for (std::size_t v = 0; v < a[i].visits.size(); ++v) {
      if (a[i].visits[v].station_id != b[i].visits[v].station_id ||
          a[i].visits[v].arrive_min != b[i].visits[v].arrive_min) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int stations = 120;
  int walks = 20000;
  if (argc > 1) stations = std::stoi(argv[1]);
  if (argc > 2) walks = std::stoi(argv[2]);

#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: not enabled\n");
#endif

  SynthSpec spec;
  spec.seed = 99;
  spec.n_stations = stations;
  spec.n_routes = std::max(2, stations / 10);
  spec.days = 30;
  const SynthCity city = synth_city(spec);
  const TimeVaryingNetwork tvn(city.net, city.ridership);
  const TargetDistribution target = make_target(tvn, 0.2, 1.0);
  const Budget budget{240};

  // all-pairs shortest paths
  auto t0 = Clock::now();
  const auto apsp_serial = apsp_minutes(city.net.station_adjacency(), Exec::Serial);
  const double t_apsp_s = ms_since(t0);
  t0 = Clock::now();
  const auto apsp_par = apsp_minutes(city.net.station_adjacency(), Exec::Parallel);
  const double t_apsp_p = ms_since(t0);
  const bool apsp_ok = apsp_serial == apsp_par;

  // baseline walk batch
  t0 = Clock::now();
  const auto base_serial = sample_baseline_batch(tvn, budget, target,
                                                 static_cast<std::size_t>(walks), 7,
                                                 Exec::Serial);
  const double t_base_s = ms_since(t0);
  t0 = Clock::now();
  const auto base_par = sample_baseline_batch(tvn, budget, target,
                                              static_cast<std::size_t>(walks), 7,
                                              Exec::Parallel);
  const double t_base_p = ms_since(t0);
  const bool base_ok = same_traces(base_serial, base_par);

  // policy rollout batch (untrained uniform policy)
  GeneratorPolicy policy(target.station_ids, 1, 1.0);
  t0 = Clock::now();
  const auto roll_serial = generate_schedule(policy, tvn, budget,
                                             static_cast<std::size_t>(walks), 7,
                                             Exec::Serial);
  const double t_roll_s = ms_since(t0);
  t0 = Clock::now();
  const auto roll_par = generate_schedule(policy, tvn, budget,
                                          static_cast<std::size_t>(walks), 7,
                                          Exec::Parallel);
  const double t_roll_p = ms_since(t0);
  const bool roll_ok = same_traces(roll_serial, roll_par);

  std::printf("%-22s %10s %10s %8s %s\n", "kernel", "serial ms", "omp ms",
              "speedup", "match");
  std::printf("%-22s %10.1f %10.1f %7.2fx %s\n", "apsp", t_apsp_s, t_apsp_p,
              t_apsp_s / t_apsp_p, apsp_ok ? "yes" : "NO");
  std::printf("%-22s %10.1f %10.1f %7.2fx %s\n", "baseline walks", t_base_s,
              t_base_p, t_base_s / t_base_p, base_ok ? "yes" : "NO");
  std::printf("%-22s %10.1f %10.1f %7.2fx %s\n", "policy rollouts", t_roll_s,
              t_roll_p, t_roll_s / t_roll_p, roll_ok ? "yes" : "NO");
  return apsp_ok && base_ok && roll_ok ? 0 : 1;
}
