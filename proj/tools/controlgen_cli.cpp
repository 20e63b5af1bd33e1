// controlgen: model a transit network, analyze controller sightings for the
// attack surface they expose, train a randomized control-trace generator, and
// evaluate generated schedules. Exit codes: 0 success, 1 domain error, 2 usage.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "controlgen/attack.hpp"
#include "controlgen/errors.hpp"
#include "controlgen/evaluate.hpp"
#include "controlgen/ingest.hpp"
#include "controlgen/target.hpp"
#include "controlgen/trace_gen.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace controlgen;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "'");
  return f;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write '" + path.string() + "'");
  return f;
}

std::string slot_name(int slot) {
  const TimeSlot ts = slot_from_index(slot);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%s-%02d", day_type_name(ts.day).c_str(), ts.hour);
  return buf;
}

json stats_json(const InspectionStats& st) {
  json share = json::object(), inside = json::object(), heat = json::object(),
       presence = json::object();
  for (std::size_t s = 0; s < st.station_ids.size(); ++s) {
    const std::string& id = st.station_ids[s];
    share[id] = st.station_share[s];
    inside[id] = st.inside_rate[s];
    heat[id] = st.heatmap[s];
  }
  for (const auto& [key, p] : st.presence_prob) {
    presence[st.station_ids[key.first]][slot_name(key.second)] = p;
  }
  return json{{"station_share", share},
              {"presence_prob", presence},
              {"heatmap", heat},
              {"inside_rate", inside}};
}

json ks_json(const KSResult& ks) {
  return json{{"d_stat", ks.d_stat},
              {"n", ks.n},
              {"m", ks.m},
              {"significant_at_05", ks.significant_at_05}};
}

struct TrainFlags {
  std::string network, ridership, out = "model.json";
  int budget = 240;
  double lambda = 0.2, sigma = 1.0;
  int n_sequences = 200;
  int order = 1;
  double temperature = 1.0;
  TrainingConfig config;
};

void add_train_options(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--budget", f.budget, "shift budget in minutes")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", f.lambda, "randomness temperature")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sigma", f.sigma, "hour smoothing width")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--sequences", f.n_sequences, "training sequences to derive")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--order", f.order, "policy history order")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--temperature", f.temperature, "softmax temperature")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--pretrain-epochs", f.config.pretrain_epochs)
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--gan-epochs", f.config.gan_epochs)->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch", f.config.batch_size)->check(CLI::PositiveNumber);
  cmd->add_option("--rollouts", f.config.rollouts_per_step, "MC rollouts per step")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lr-gen", f.config.lr_gen)->check(CLI::PositiveNumber);
  cmd->add_option("--lr-disc", f.config.lr_disc)->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.config.seed, "training seed");
}

TimeVaryingNetwork load_tvn(const std::string& network_path,
                            const std::string& ridership_path) {
  auto nf = open_in(network_path);
  TransitNetwork net = parse_network(nf);
  auto rf = open_in(ridership_path);
  RidershipProfile profile = parse_ridership(rf);
  return TimeVaryingNetwork(std::move(net), profile);
}

std::pair<GeneratorPolicy, Discriminator> train_pipeline(
    const TimeVaryingNetwork& tvn, const TrainFlags& f) {
  const TargetDistribution target = make_target(tvn, f.lambda, f.sigma);
  Rng rng(f.config.seed);
  const auto sequences = derive_training_sequences(
      tvn, Budget{f.budget}, static_cast<std::size_t>(f.n_sequences), target, rng);
  std::vector<std::string> ids = target.station_ids;
  GeneratorPolicy policy(std::move(ids), f.order, f.temperature);
  policy = pretrain_policy(std::move(policy), sequences, f.config);
  auto [trained, disc, history] = train_gan(std::move(policy), Discriminator{},
                                            sequences, tvn, Budget{f.budget},
                                            f.config, rng);
  if (!history.disc_accuracy.empty()) {
    std::cout << "gan epochs: " << history.disc_accuracy.size()
              << "  final disc accuracy: " << history.disc_accuracy.back()
              << "  final mean reward: " << history.gen_reward.back() << "\n";
  }
  return {std::move(trained), std::move(disc)};
}

int run(int argc, char** argv) {
  CLI::App app{"randomized ticket-control schedule toolkit"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  SynthSpec spec;
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "generate a synthetic city");
  synth->add_option("--seed", spec.seed, "generator seed");
  synth->add_option("--stations", spec.n_stations)->check(CLI::Range(4, 100000));
  synth->add_option("--routes", spec.n_routes)->check(CLI::PositiveNumber);
  synth->add_option("--days", spec.days)->check(CLI::Range(7, 1000000));
  synth->add_option("--concentration", spec.concentration)
      ->check(CLI::Range(1.0, 1000.0));
  synth->add_option("--rate", spec.sightings_per_day, "mean sightings per day")
      ->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_out, "output directory");

  // --- analyze ---------------------------------------------------------------
  std::string an_network, an_sightings, an_out = ".";
  int an_k = 1;
  auto* analyze = app.add_subcommand("analyze", "attack-surface report from sightings");
  analyze->add_option("--network", an_network)->required();
  analyze->add_option("--sightings", an_sightings)->required();
  analyze->add_option("--markov-k", an_k)->check(CLI::PositiveNumber);
  analyze->add_option("--out", an_out, "output directory");

  // --- train -----------------------------------------------------------------
  TrainFlags tf;
  auto* train = app.add_subcommand("train", "derive sequences, pretrain, train GAN");
  train->add_option("--network", tf.network)->required();
  train->add_option("--ridership", tf.ridership)->required();
  train->add_option("--out", tf.out, "model output path");
  add_train_options(train, tf);

  // --- generate ----------------------------------------------------------------
  std::string gen_model, gen_network, gen_ridership, gen_out = "traces.jsonl";
  int gen_n = 50, gen_budget = 240;
  uint64_t gen_seed = 1;
  auto* generate = app.add_subcommand("generate", "sample a schedule from a model");
  generate->add_option("--model", gen_model)->required();
  generate->add_option("--network", gen_network)->required();
  generate->add_option("--ridership", gen_ridership)->required();
  generate->add_option("--n", gen_n, "number of controller shifts")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--budget", gen_budget)->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen_seed);
  generate->add_option("--out", gen_out);

  // --- evaluate ------------------------------------------------------------------
  std::string ev_network, ev_ridership, ev_sightings, ev_traces, ev_out = "report.json";
  double ev_lambda = 0.2, ev_sigma = 1.0, ev_fine = 100.0, ev_ticket = 3.0;
  int ev_k = 1, ev_trips = 200;
  uint64_t ev_trip_seed = 42;
  auto* evaluate = app.add_subcommand("evaluate", "score a schedule against history");
  evaluate->add_option("--network", ev_network)->required();
  evaluate->add_option("--ridership", ev_ridership)->required();
  evaluate->add_option("--sightings", ev_sightings)->required();
  evaluate->add_option("--traces", ev_traces)->required();
  evaluate->add_option("--lambda", ev_lambda)->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--sigma", ev_sigma)->check(CLI::NonNegativeNumber);
  evaluate->add_option("--fine", ev_fine)->check(CLI::NonNegativeNumber);
  evaluate->add_option("--ticket", ev_ticket)->check(CLI::NonNegativeNumber);
  evaluate->add_option("--markov-k", ev_k)->check(CLI::PositiveNumber);
  evaluate->add_option("--trips", ev_trips)->check(CLI::PositiveNumber);
  evaluate->add_option("--trip-seed", ev_trip_seed);
  evaluate->add_option("--out", ev_out);

  // --- simulate ---------------------------------------------------------------
  SynthSpec sim_spec;
  sim_spec.days = 365;
  sim_spec.concentration = 8.0;
  TrainFlags sf;
  sf.config.gan_epochs = 40;
  sf.n_sequences = 120;
  std::string sim_out = "simulation";
  int sim_n = 60;
  auto* simulate = app.add_subcommand(
      "simulate", "synth -> analyze -> train -> generate -> evaluate in one run");
  simulate->add_option("--stations", sim_spec.n_stations)->check(CLI::Range(4, 100000));
  simulate->add_option("--routes", sim_spec.n_routes)->check(CLI::PositiveNumber);
  simulate->add_option("--days", sim_spec.days)->check(CLI::Range(7, 1000000));
  simulate->add_option("--concentration", sim_spec.concentration)
      ->check(CLI::Range(1.0, 1000.0));
  simulate->add_option("--n", sim_n, "controllers to schedule")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim_out, "output directory");
  add_train_options(simulate, sf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version vs usage error
  }

  if (*synth) {
    const SynthCity city = synth_city(spec);
    fs::create_directories(synth_out);
    auto nf = open_out(fs::path(synth_out) / "network.json");
    write_network(city.net, nf);
    auto rf = open_out(fs::path(synth_out) / "ridership.csv");
    write_ridership(city.ridership, rf);
    auto sf2 = open_out(fs::path(synth_out) / "sightings.csv");
    write_sightings(city.sightings, sf2);
    std::cout << "wrote " << city.sightings.sightings.size() << " sightings, "
              << city.net.station_count() << " stations, "
              << city.net.routes().size() << " routes to " << synth_out << "\n";
    return 0;
  }

  if (*analyze) {
    auto nf = open_in(an_network);
    const TransitNetwork net = parse_network(nf);
    auto sfin = open_in(an_sightings);
    const SightingLog log = parse_sightings(sfin);
    const InspectionStats st = inspection_stats(log, net);

    auto [train_log, test_log] = split_log_80_20(log);
    const Predictability pred =
        predictability(fit_markov(train_log, net, an_k), test_log, net);

    json report = stats_json(st);
    report["predictability"] = json{{"k", an_k},
                                    {"accuracy", pred.accuracy},
                                    {"entropy_bits", pred.entropy_bits}};
    fs::create_directories(an_out);
    open_out(fs::path(an_out) / "report.json") << report.dump(2) << "\n";

    auto share_csv = open_out(fs::path(an_out) / "station_share.csv");
    share_csv << "station_id,share\n";
    for (std::size_t s = 0; s < st.station_ids.size(); ++s) {
      share_csv << st.station_ids[s] << ',' << json(st.station_share[s]).dump() << '\n';
    }
    auto heat_csv = open_out(fs::path(an_out) / "heatmap.csv");
    heat_csv << "station_id,hour,count\n";
    for (std::size_t s = 0; s < st.station_ids.size(); ++s) {
      for (int h = 0; h < kHoursPerDay; ++h) {
        heat_csv << st.station_ids[s] << ',' << h << ','
                 << json(st.heatmap[s][static_cast<std::size_t>(h)]).dump() << '\n';
      }
    }
    std::cout << "analyze: " << log.sightings.size() << " sightings, top-1 accuracy "
              << pred.accuracy << ", entropy " << pred.entropy_bits << " bits\n";
    return 0;
  }

  if (*train) {
    const TimeVaryingNetwork tvn = load_tvn(tf.network, tf.ridership);
    auto [policy, disc] = train_pipeline(tvn, tf);
    auto mf = open_out(tf.out);
    write_model(policy, disc, mf);
    std::cout << "wrote model to " << tf.out << "\n";
    return 0;
  }

  if (*generate) {
    auto mf = open_in(gen_model);
    auto [policy, disc] = read_model(mf);
    const TimeVaryingNetwork tvn = load_tvn(gen_network, gen_ridership);
    const auto schedule = generate_schedule(policy, tvn, Budget{gen_budget},
                                            static_cast<std::size_t>(gen_n), gen_seed);
    auto tfout = open_out(gen_out);
    write_traces(schedule, tfout);
    double total_cost = 0.0, total_quality = 0.0;
    for (const ControlTrace& t : schedule) {
      total_cost += t.cost_min;
      total_quality += t.quality;
    }
    std::cout << "wrote " << schedule.size() << " traces (schedule totals: cost "
              << total_cost << " min, quality " << total_quality << ") to " << gen_out
              << "\n";
    return 0;
  }

  if (*evaluate) {
    const TimeVaryingNetwork tvn = load_tvn(ev_network, ev_ridership);
    auto sfin = open_in(ev_sightings);
    const SightingLog log = parse_sightings(sfin);
    auto tfin = open_in(ev_traces);
    const auto schedule = read_traces(tfin);
    const TargetDistribution target = make_target(tvn, ev_lambda, ev_sigma);
    const auto trips = make_trips(tvn.net(), static_cast<std::size_t>(ev_trips),
                                  ev_trip_seed);
    const EvalReport rep = evaluate_schedule(tvn, target, log, schedule, ev_fine,
                                             ev_ticket, trips, ev_k);
    json shares_before = json::object(), shares_after = json::object();
    for (std::size_t s = 0; s < rep.station_ids.size(); ++s) {
      shares_before[rep.station_ids[s]] = rep.shares_before[s];
      shares_after[rep.station_ids[s]] = rep.shares_after[s];
    }
    json out{{"ks", ks_json(rep.ks)},
             {"ks_ridership", ks_json(rep.ks_ridership)},
             {"dispersion_rmse", rep.dispersion_rmse},
             {"payoff_delta", rep.payoff_delta},
             {"predictability_delta", rep.predictability_delta},
             {"shares_before", shares_before},
             {"shares_after", shares_after}};
    open_out(ev_out) << out.dump(2) << "\n";
    std::cout << "ks D=" << rep.ks.d_stat
              << (rep.ks.significant_at_05 ? " (significant)" : " (not significant)")
              << "  dispersion_rmse=" << rep.dispersion_rmse
              << "  payoff_delta=" << rep.payoff_delta
              << "  predictability_delta=" << rep.predictability_delta << "\n";
    return 0;
  }

  if (*simulate) {
    fs::create_directories(sim_out);
    sim_spec.seed = sf.config.seed;  // one --seed drives the whole pipeline
    const SynthCity city = synth_city(sim_spec);
    {
      auto nf = open_out(fs::path(sim_out) / "network.json");
      write_network(city.net, nf);
      auto rf = open_out(fs::path(sim_out) / "ridership.csv");
      write_ridership(city.ridership, rf);
      auto sfo = open_out(fs::path(sim_out) / "sightings.csv");
      write_sightings(city.sightings, sfo);
    }
    const TimeVaryingNetwork tvn(city.net, city.ridership);
    auto [policy, disc] = train_pipeline(tvn, sf);
    {
      auto mf = open_out(fs::path(sim_out) / "model.json");
      write_model(policy, disc, mf);
    }
    const auto schedule =
        generate_schedule(policy, tvn, Budget{sf.budget},
                          static_cast<std::size_t>(sim_n), sf.config.seed);
    {
      auto tfo = open_out(fs::path(sim_out) / "traces.jsonl");
      write_traces(schedule, tfo);
    }
    const TargetDistribution target = make_target(tvn, sf.lambda, sf.sigma);
    const auto trips = make_trips(tvn.net(), 200, 42);
    const EvalReport rep = evaluate_schedule(tvn, target, city.sightings, schedule,
                                             100.0, 3.0, trips, 1);
    json shares_before = json::object(), shares_after = json::object();
    for (std::size_t s = 0; s < rep.station_ids.size(); ++s) {
      shares_before[rep.station_ids[s]] = rep.shares_before[s];
      shares_after[rep.station_ids[s]] = rep.shares_after[s];
    }
    json out{{"ks", ks_json(rep.ks)},
             {"ks_ridership", ks_json(rep.ks_ridership)},
             {"dispersion_rmse", rep.dispersion_rmse},
             {"payoff_delta", rep.payoff_delta},
             {"predictability_delta", rep.predictability_delta},
             {"shares_before", shares_before},
             {"shares_after", shares_after}};
    open_out(fs::path(sim_out) / "report.json") << out.dump(2) << "\n";
    std::cout << "simulate: payoff_delta=" << rep.payoff_delta
              << " predictability_delta=" << rep.predictability_delta
              << " dispersion_rmse=" << rep.dispersion_rmse << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
