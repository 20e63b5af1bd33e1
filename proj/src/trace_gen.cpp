#include "controlgen/trace_gen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "controlgen/errors.hpp"
#include "json.hpp"

namespace controlgen {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// walk core
// ---------------------------------------------------------------------------

struct IxVisit {
  std::size_t station;
  int slot;
  double arrive;
  double depart;
};

struct WalkState {
  Shift shift;
  std::vector<IxVisit> visits;
  double clock = 0.0;  // depart of last visit == cost so far
  bool started = false;
  std::size_t cur = 0;
};

int slot_at(const Shift& shift, double minute) {
  const int hour =
      (shift.start_hour + static_cast<int>(minute) / 60) % kHoursPerDay;
  return slot_index(TimeSlot{shift.day, hour});
}

Shift sample_shift(Rng& rng) {
  const TimeSlot ts = slot_from_index(static_cast<int>(rng.uniform_int(kSlotCount)));
  return Shift{ts.day, ts.hour};
}

double min_dwell(const TimeVaryingNetwork& tvn) {
  double d = std::numeric_limits<double>::infinity();
  for (const Station& s : tvn.net().stations()) d = std::min(d, s.dwell_min);
  return d;
}

void check_budget(const TimeVaryingNetwork& tvn, Budget budget) {
  if (budget.minutes < min_dwell(tvn)) {
    throw BudgetTooSmall("budget " + std::to_string(budget.minutes) +
                         " min does not fit a single visit");
  }
}

void append_visit(WalkState& st, const TimeVaryingNetwork& tvn, std::size_t j,
                  double arrive) {
  const double depart = arrive + tvn.net().station(j).dwell_min;
  st.visits.push_back(IxVisit{j, slot_at(st.shift, arrive), arrive, depart});
  st.clock = depart;
  st.cur = j;
  st.started = true;
}

// Next-station draw proportional to the target weight at each candidate's own
// arrival slot, masked to candidates affordable within the remaining budget.
bool target_step(const TimeVaryingNetwork& tvn, const TargetDistribution& target,
                 double budget, WalkState& st, Rng& rng) {
  const TransitNetwork& net = tvn.net();
  const std::size_t S = net.station_count();
  std::vector<double> w(S, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < S; ++j) {
    const double travel = st.started ? net.travel_cost(st.cur, j) : 0.0;
    const double arrive = st.clock + travel;
    if (arrive + net.station(j).dwell_min > budget) continue;
    w[j] = target.weight(j, slot_at(st.shift, arrive));
    total += w[j];
  }
  if (total <= 0.0) return false;
  const std::size_t j = rng.categorical(w);
  append_visit(st, tvn, j, st.clock + (st.started ? net.travel_cost(st.cur, j) : 0.0));
  return true;
}

// Per-step record kept during policy sampling so the policy-gradient update
// can be computed against the exact distribution that was sampled from.
struct StepRecord {
  uint64_t key = 0;
  std::vector<double> masked;  // renormalized masked probabilities
  std::size_t action = 0;
};

struct WalkRecord {
  int shift_slot = 0;
  std::vector<double> shift_probs;
  std::vector<StepRecord> steps;
};

std::vector<std::size_t> history_of(const WalkState& st, int order) {
  const std::size_t k = std::min<std::size_t>(st.visits.size(),
                                              static_cast<std::size_t>(order));
  std::vector<std::size_t> h;
  h.reserve(k);
  for (std::size_t i = st.visits.size() - k; i < st.visits.size(); ++i) {
    h.push_back(st.visits[i].station);
  }
  return h;
}

bool policy_step(const TimeVaryingNetwork& tvn, const GeneratorPolicy& policy,
                 double budget, WalkState& st, Rng& rng, StepRecord* rec) {
  const TransitNetwork& net = tvn.net();
  const std::size_t S = net.station_count();
  const auto hist = history_of(st, policy.order());
  const int slot = slot_at(st.shift, st.clock);
  std::vector<double> p = policy.probs(hist, slot);
  double total = 0.0;
  for (std::size_t j = 0; j < S; ++j) {
    const double travel = st.started ? net.travel_cost(st.cur, j) : 0.0;
    if (st.clock + travel + net.station(j).dwell_min > budget) {
      p[j] = 0.0;
    }
    total += p[j];
  }
  if (total <= 0.0) return false;
  for (double& v : p) v /= total;
  const std::size_t j = rng.categorical(p);
  if (rec) {
    rec->key = policy.key(hist, slot);
    rec->masked = p;
    rec->action = j;
  }
  append_visit(st, tvn, j, st.clock + (st.started ? net.travel_cost(st.cur, j) : 0.0));
  return true;
}

ControlTrace finalize(const TimeVaryingNetwork& tvn, const WalkState& st,
                      std::string controller_id) {
  ControlTrace t;
  t.controller_id = std::move(controller_id);
  t.visits.reserve(st.visits.size());
  for (const IxVisit& v : st.visits) {
    t.visits.push_back(Visit{tvn.net().station(v.station).id, slot_from_index(v.slot),
                             v.arrive, v.depart});
  }
  t.cost_min = trace_cost(tvn, t.visits);
  t.quality = trace_quality(tvn, t.visits);
  return t;
}

ControlTrace run_target_walk(const TimeVaryingNetwork& tvn,
                             const TargetDistribution& target, Budget budget,
                             Rng& rng, std::string id) {
  WalkState st;
  st.shift = sample_shift(rng);
  while (target_step(tvn, target, budget.minutes, st, rng)) {
  }
  return finalize(tvn, st, std::move(id));
}

ControlTrace run_policy_walk(const TimeVaryingNetwork& tvn,
                             const GeneratorPolicy& policy, Budget budget, Rng& rng,
                             std::string id, WalkRecord* record = nullptr,
                             std::vector<WalkState>* snapshots = nullptr) {
  WalkState st;
  const std::vector<double> sp = policy.shift_probs();
  const int shift_slot = static_cast<int>(rng.categorical(sp));
  const TimeSlot ts = slot_from_index(shift_slot);
  st.shift = Shift{ts.day, ts.hour};
  if (record) {
    record->shift_slot = shift_slot;
    record->shift_probs = sp;
  }
  StepRecord rec;
  while (policy_step(tvn, policy, budget.minutes, st, rng,
                     record ? &rec : nullptr)) {
    if (record) record->steps.push_back(rec);
    if (snapshots) snapshots->push_back(st);
  }
  return finalize(tvn, st, std::move(id));
}

// Completes a partial walk to budget exhaustion under the policy.
WalkState complete_walk(const TimeVaryingNetwork& tvn, const GeneratorPolicy& policy,
                        Budget budget, WalkState st, Rng& rng) {
  while (policy_step(tvn, policy, budget.minutes, st, rng, nullptr)) {
  }
  return st;
}

template <typename Fn>
std::vector<ControlTrace> run_batch(std::size_t n, Exec exec, Fn&& fn) {
  std::vector<ControlTrace> out(n);
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    }
  }
  return out;
}

std::string controller_name(std::size_t i, std::size_t n) {
  int width = 1;
  for (std::size_t v = n; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(i + 1);
  while (static_cast<int>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return "c" + digits;
}

double entropy_bits_of(const std::map<int, double>& counts, double total) {
  double h = 0.0;
  for (const auto& [key, c] : counts) {
    const double p = c / total;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

void validate_config(const TrainingConfig& c) {
  if (c.pretrain_epochs < 0 || c.gan_epochs < 0) {
    throw SpecInvalid("epoch counts must be >= 0");
  }
  if (c.batch_size <= 0 || c.rollouts_per_step < 1) {
    throw SpecInvalid("batch_size must be > 0 and rollouts_per_step >= 1");
  }
  if (!(c.lr_gen > 0.0) || !(c.lr_disc > 0.0)) {
    throw SpecInvalid("learning rates must be > 0");
  }
}

// Shift reconstruction for traces that came from file: the first visit's slot
// anchors the start hour.
Shift shift_of_trace(const ControlTrace& t) {
  const Visit& v0 = t.visits.front();
  const int elapsed = static_cast<int>(v0.arrive_min) / 60;
  const int start_hour = ((v0.slot.hour - elapsed) % kHoursPerDay + kHoursPerDay) %
                         kHoursPerDay;
  return Shift{v0.slot.day, start_hour};
}

}  // namespace

// ---------------------------------------------------------------------------
// GeneratorPolicy
// ---------------------------------------------------------------------------

GeneratorPolicy::GeneratorPolicy(std::vector<std::string> station_ids, int order,
                                 double temperature)
    : station_ids_(std::move(station_ids)), order_(order), temperature_(temperature) {
  if (order_ < 1) throw SpecInvalid("policy order must be >= 1");
  if (!(temperature_ > 0.0)) throw SpecInvalid("temperature must be > 0");
  // key packing must fit 64 bits: (S+1)^k * 72
  double bound = 72.0;
  for (int i = 0; i < order_; ++i) bound *= static_cast<double>(station_ids_.size() + 1);
  if (bound >= 9.0e18) throw SpecInvalid("order too large for this station count");
}

uint64_t GeneratorPolicy::key(const std::vector<std::size_t>& history,
                              int slot) const {
  const uint64_t base = station_ids_.size() + 1;
  const uint64_t pad = station_ids_.size();
  uint64_t k = 0;
  const std::size_t missing = static_cast<std::size_t>(order_) - history.size();
  for (std::size_t i = 0; i < missing; ++i) k = k * base + pad;
  for (std::size_t h : history) k = k * base + h;
  return k * kSlotCount + static_cast<uint64_t>(slot);
}

std::vector<double> GeneratorPolicy::probs(const std::vector<std::size_t>& history,
                                           int slot) const {
  const std::size_t S = station_ids_.size();
  std::vector<double> p(S);
  const std::vector<double>* row = find_row(key(history, slot));
  if (!row) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(S));
    return p;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : *row) mx = std::max(mx, z / temperature_);
  double total = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    p[i] = std::exp((*row)[i] / temperature_ - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double>& GeneratorPolicy::logits_row(uint64_t key) {
  auto [it, inserted] = table_.try_emplace(key);
  if (inserted) it->second.assign(station_ids_.size(), 0.0);
  return it->second;
}

const std::vector<double>* GeneratorPolicy::find_row(uint64_t key) const {
  auto it = table_.find(key);
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<double> GeneratorPolicy::shift_probs() const {
  std::vector<double> p(kSlotCount);
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : shift_logits_) mx = std::max(mx, z / temperature_);
  double total = 0.0;
  for (int i = 0; i < kSlotCount; ++i) {
    p[static_cast<std::size_t>(i)] =
        std::exp(shift_logits_[static_cast<std::size_t>(i)] / temperature_ - mx);
    total += p[static_cast<std::size_t>(i)];
  }
  for (double& v : p) v /= total;
  return p;
}

// ---------------------------------------------------------------------------
// Discriminator and features
// ---------------------------------------------------------------------------

double Discriminator::raw(const std::vector<double>& features) const {
  double z = bias;
  for (std::size_t i = 0; i < weights.size() && i < features.size(); ++i) {
    double x = features[i];
    if (!feat_mean.empty()) x = (x - feat_mean[i]) / feat_scale[i];
    z += weights[i] * x;
  }
  return z;
}

double Discriminator::score(const std::vector<double>& features) const {
  return 1.0 / (1.0 + std::exp(-raw(features)));
}

std::size_t feature_dim(std::size_t station_count) { return 2 * station_count + 27; }

std::vector<double> trace_features(const TimeVaryingNetwork& tvn,
                                   const ControlTrace& trace) {
  const std::size_t S = tvn.net().station_count();
  std::vector<double> f(feature_dim(S), 0.0);
  const double n = static_cast<double>(trace.visits.size());
  if (n > 0.0) {
    std::vector<std::map<int, double>> slot_counts(S);
    std::map<int, double> transitions;
    std::size_t prev = 0;
    for (std::size_t i = 0; i < trace.visits.size(); ++i) {
      const Visit& v = trace.visits[i];
      const std::size_t s = tvn.net().index_of(v.station_id);
      f[s] += 1.0;
      slot_counts[s][slot_index(v.slot)] += 1.0;
      f[2 * S + static_cast<std::size_t>(v.slot.hour)] += 1.0;
      if (i > 0) transitions[static_cast<int>(prev * S + s)] += 1.0;
      prev = s;
    }
    for (std::size_t s = 0; s < S; ++s) {
      double c = f[s];
      if (c > 0.0) f[S + s] = entropy_bits_of(slot_counts[s], c);
      f[s] = c / n;
    }
    for (int h = 0; h < kHoursPerDay; ++h) f[2 * S + static_cast<std::size_t>(h)] /= n;
    if (n > 1.0) f[2 * S + 26] = entropy_bits_of(transitions, n - 1.0);
  }
  f[2 * S + 24] = trace.cost_min;
  f[2 * S + 25] = trace.quality;
  return f;
}

// ---------------------------------------------------------------------------
// sampling operations
// ---------------------------------------------------------------------------

ControlTrace sample_baseline(const TimeVaryingNetwork& tvn, Budget budget,
                             const TargetDistribution& target, Rng& rng) {
  check_budget(tvn, budget);
  return run_target_walk(tvn, target, budget, rng, "baseline");
}

std::vector<ControlTrace> sample_baseline_batch(const TimeVaryingNetwork& tvn,
                                                Budget budget,
                                                const TargetDistribution& target,
                                                std::size_t n, uint64_t seed,
                                                Exec exec) {
  check_budget(tvn, budget);
  return run_batch(n, exec, [&](std::size_t i) {
    Rng rng(Rng::mix(seed, i));
    return run_target_walk(tvn, target, budget, rng, controller_name(i, n));
  });
}

std::vector<ControlTrace> derive_training_sequences(const TimeVaryingNetwork& tvn,
                                                    Budget budget, std::size_t n,
                                                    const TargetDistribution& target,
                                                    Rng& rng, Exec exec) {
  check_budget(tvn, budget);
  if (n == 0) return {};
  const std::size_t pool_size = 5 * n;
  const uint64_t seed = rng.bits();
  std::vector<ControlTrace> pool = run_batch(pool_size, exec, [&](std::size_t i) {
    Rng wrng(Rng::mix(seed, i));
    return run_target_walk(tvn, target, budget, wrng, controller_name(i, pool_size));
  });
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto ratio = [&](std::size_t i) {
    return pool[i].cost_min > 0.0 ? pool[i].quality / pool[i].cost_min : -1.0;
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = ratio(a), rb = ratio(b);
    if (ra != rb) return ra > rb;
    return a < b;
  });
  std::vector<ControlTrace> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) kept.push_back(std::move(pool[order[i]]));
  return kept;
}

ControlTrace greedy_improve(const TimeVaryingNetwork& tvn, const ControlTrace& trace,
                            Budget budget) {
  if (trace.visits.empty()) return trace;
  const TransitNetwork& net = tvn.net();
  const std::size_t S = net.station_count();
  const Shift shift = shift_of_trace(trace);
  const double arrive0 = trace.visits.front().arrive_min;

  std::vector<std::size_t> seq;
  for (const Visit& v : trace.visits) seq.push_back(net.index_of(v.station_id));

  // rebuild visit times for a station sequence; nullopt when over budget
  auto retime = [&](const std::vector<std::size_t>& s)
      -> std::pair<std::vector<Visit>, double> {
    std::vector<Visit> visits;
    double clock = arrive0;
    double cost = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0) {
        const double travel = net.travel_cost(s[i - 1], s[i]);
        clock += travel;
        cost += travel;
      }
      const double dwell = net.station(s[i]).dwell_min;
      visits.push_back(Visit{net.station(s[i]).id,
                             slot_from_index(slot_at(shift, clock)), clock,
                             clock + dwell});
      clock += dwell;
      cost += dwell;
    }
    return {std::move(visits), cost};
  };

  auto [cur_visits, cur_cost] = retime(seq);
  double cur_q = trace_quality(tvn, cur_visits);

  for (int iter = 0; iter < 100000; ++iter) {
    double best_q = cur_q;
    std::size_t best_pos = 0, best_station = 0;
    bool found = false;
    for (std::size_t pos = 0; pos < seq.size(); ++pos) {
      const std::size_t orig = seq[pos];
      for (std::size_t s = 0; s < S; ++s) {
        if (s == orig) continue;
        seq[pos] = s;
        auto [visits, cost] = retime(seq);
        if (cost <= budget.minutes) {
          const double q = trace_quality(tvn, visits);
          if (q > best_q + 1e-12) {
            best_q = q;
            best_pos = pos;
            best_station = s;
            found = true;
          }
        }
      }
      seq[pos] = orig;
    }
    if (!found) break;
    seq[best_pos] = best_station;
    std::tie(cur_visits, cur_cost) = retime(seq);
    cur_q = best_q;
  }

  ControlTrace out;
  out.controller_id = trace.controller_id;
  out.visits = std::move(cur_visits);
  out.cost_min = trace_cost(tvn, out.visits);
  out.quality = trace_quality(tvn, out.visits);
  return out;
}

std::vector<ControlTrace> generate_schedule(const GeneratorPolicy& policy,
                                            const TimeVaryingNetwork& tvn,
                                            Budget budget, std::size_t n,
                                            uint64_t seed, Exec exec) {
  check_budget(tvn, budget);
  return run_batch(n, exec, [&](std::size_t i) {
    Rng rng(Rng::mix(seed, i));
    return run_policy_walk(tvn, policy, budget, rng, controller_name(i, n));
  });
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

GeneratorPolicy pretrain_policy(GeneratorPolicy policy,
                                const std::vector<ControlTrace>& sequences,
                                const TrainingConfig& config,
                                std::vector<double>* nll_history) {
  validate_config(config);
  if (sequences.empty()) throw EmptyBatch("no training sequences");
  const std::size_t S = policy.station_count();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < S; ++i) index[policy.station_ids()[i]] = i;

  // aggregate transition counts per (history, slot) key, plus shift counts
  std::map<uint64_t, std::vector<double>> counts;
  std::vector<double> shift_counts(kSlotCount, 0.0);
  double shift_total = 0.0;
  double n_total = 0.0;
  for (const ControlTrace& t : sequences) {
    if (t.visits.empty()) continue;
    const Shift shift = shift_of_trace(t);
    shift_counts[static_cast<std::size_t>(
        slot_index(TimeSlot{shift.day, shift.start_hour}))] += 1.0;
    shift_total += 1.0;
    std::vector<std::size_t> seq;
    for (const Visit& v : t.visits) {
      auto it = index.find(v.station_id);
      if (it == index.end()) throw UnknownStation("unknown station '" + v.station_id + "'");
      seq.push_back(it->second);
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const std::size_t k =
          std::min<std::size_t>(i, static_cast<std::size_t>(policy.order()));
      std::vector<std::size_t> hist(seq.begin() + (i - k), seq.begin() + i);
      const double clock = i == 0 ? t.visits[0].arrive_min : t.visits[i - 1].depart_min;
      const uint64_t key = policy.key(hist, slot_at(shift, clock));
      auto [it, inserted] = counts.try_emplace(key);
      if (inserted) it->second.assign(S, 0.0);
      it->second[seq[i]] += 1.0;
      n_total += 1.0;
    }
  }
  if (n_total == 0.0) throw EmptyBatch("training sequences contain no visits");

  const double tau = policy.temperature();
  auto row_probs = [&](uint64_t key) {
    const std::vector<double>* row = policy.find_row(key);
    std::vector<double> p(S, 1.0 / static_cast<double>(S));
    if (!row) return p;
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : *row) mx = std::max(mx, z / tau);
    double total = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      p[i] = std::exp((*row)[i] / tau - mx);
      total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
  };
  auto eval_nll = [&]() {
    double nll = 0.0;
    for (const auto& [key, c] : counts) {
      const auto p = row_probs(key);
      for (std::size_t s = 0; s < S; ++s) {
        if (c[s] > 0.0) nll -= c[s] * std::log(p[s]);
      }
    }
    return nll / n_total;
  };

  if (nll_history) nll_history->push_back(eval_nll());
  // the shift token is a single categorical; start it at its MLE (floored so
  // every slot keeps sampling support) and let the epochs polish it
  if (config.pretrain_epochs > 0) {
    for (int i = 0; i < kSlotCount; ++i) {
      policy.shift_logits()[static_cast<std::size_t>(i)] =
          tau * std::log(shift_counts[static_cast<std::size_t>(i)] / shift_total +
                         1e-4);
    }
  }
  // per-row mean gradient: every history row converges at the same rate
  // regardless of how often it occurs, and since each row's own CE descends,
  // the transition-weighted NLL reported above is non-increasing too
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    for (const auto& [key, c] : counts) {
      const auto p = row_probs(key);
      double m = 0.0;
      for (double v : c) m += v;
      std::vector<double>& row = policy.logits_row(key);
      for (std::size_t s = 0; s < S; ++s) {
        const double grad = (p[s] - c[s] / m) / tau;
        row[s] -= config.lr_gen * grad;
      }
    }
    // the shift token trains the same way, toward the observed start slots
    const auto sp = policy.shift_probs();
    for (int i = 0; i < kSlotCount; ++i) {
      const double grad =
          (sp[static_cast<std::size_t>(i)] -
           shift_counts[static_cast<std::size_t>(i)] / shift_total) / tau;
      policy.shift_logits()[static_cast<std::size_t>(i)] -= config.lr_gen * grad;
    }
    if (nll_history) nll_history->push_back(eval_nll());
  }
  return policy;
}

std::tuple<GeneratorPolicy, Discriminator, GanHistory> train_gan(
    GeneratorPolicy policy, Discriminator disc,
    const std::vector<ControlTrace>& real, const TimeVaryingNetwork& tvn,
    Budget budget, const TrainingConfig& config, Rng& rng) {
  validate_config(config);
  if (real.empty()) throw EmptyBatch("no real sequences");
  GanHistory history;
  if (config.gan_epochs == 0) return {std::move(policy), std::move(disc), history};
  check_budget(tvn, budget);

  const std::size_t S = tvn.net().station_count();
  const std::size_t D = feature_dim(S);
  if (disc.weights.empty()) disc.weights.assign(D, 0.0);
  if (disc.weights.size() != D) throw DimensionMismatch("discriminator dimension");

  std::vector<std::vector<double>> real_features;
  real_features.reserve(real.size());
  for (const ControlTrace& t : real) real_features.push_back(trace_features(tvn, t));
  const std::size_t B = static_cast<std::size_t>(config.batch_size);
  const uint64_t base_seed = rng.bits();
  if (disc.feat_mean.empty()) {
    // standardization fitted on real plus an initial generated batch; features
    // that are constant in the real set (e.g. unvisited night hours) still get
    // a usable scale instead of a degenerate one
    std::vector<std::vector<double>> pool = real_features;
    for (std::size_t i = 0; i < B; ++i) {
      Rng wrng(Rng::mix(base_seed, 0xfeedULL + i));
      pool.push_back(trace_features(
          tvn, run_policy_walk(tvn, policy, budget, wrng, "std")));
    }
    disc.feat_mean.assign(D, 0.0);
    disc.feat_scale.assign(D, 1.0);
    for (const auto& f : pool) {
      for (std::size_t i = 0; i < D; ++i) disc.feat_mean[i] += f[i];
    }
    for (double& v : disc.feat_mean) v /= static_cast<double>(pool.size());
    std::vector<double> var(D, 0.0);
    for (const auto& f : pool) {
      for (std::size_t i = 0; i < D; ++i) {
        const double d = f[i] - disc.feat_mean[i];
        var[i] += d * d;
      }
    }
    for (std::size_t i = 0; i < D; ++i) {
      disc.feat_scale[i] =
          std::max(std::sqrt(var[i] / static_cast<double>(pool.size())), 1e-3);
    }
  }
  auto standardize = [&](const std::vector<double>& f) {
    std::vector<double> x(D);
    for (std::size_t i = 0; i < D; ++i) x[i] = (f[i] - disc.feat_mean[i]) / disc.feat_scale[i];
    return x;
  };

  const int N = config.rollouts_per_step;
  const double tau = policy.temperature();

  for (int epoch = 0; epoch < config.gan_epochs; ++epoch) {
    Rng erng(Rng::mix(base_seed, static_cast<uint64_t>(epoch)));

    // 1. sample a generator batch, keeping per-step records and prefix states
    std::vector<ControlTrace> fake(B);
    std::vector<WalkRecord> records(B);
    std::vector<std::vector<WalkState>> prefixes(B);
    for (std::size_t i = 0; i < B; ++i) {
      Rng wrng = erng.substream(i);
      fake[i] = run_policy_walk(tvn, policy, budget, wrng, controller_name(i, B),
                                &records[i], &prefixes[i]);
    }

    // 2. discriminator step on real-vs-generated features
    std::vector<const std::vector<double>*> batch_feats;
    std::vector<double> labels;
    std::vector<std::vector<double>> fake_features(B);
    for (std::size_t i = 0; i < B; ++i) {
      batch_feats.push_back(&real_features[erng.uniform_int(real.size())]);
      labels.push_back(1.0);
    }
    for (std::size_t i = 0; i < B; ++i) {
      fake_features[i] = trace_features(tvn, fake[i]);
      batch_feats.push_back(&fake_features[i]);
      labels.push_back(0.0);
    }
    std::vector<double> grad_w(D, 0.0);
    double grad_b = 0.0;
    double correct = 0.0;
    for (std::size_t i = 0; i < batch_feats.size(); ++i) {
      const auto x = standardize(*batch_feats[i]);
      const double p = disc.score(*batch_feats[i]);
      if (!std::isfinite(p)) {
        throw NonFiniteLoss("discriminator score diverged at epoch " +
                            std::to_string(epoch));
      }
      if ((p > 0.5) == (labels[i] > 0.5)) correct += 1.0;
      const double dz = p - labels[i];
      for (std::size_t d = 0; d < D; ++d) grad_w[d] += dz * x[d];
      grad_b += dz;
    }
    const double inv = 1.0 / static_cast<double>(batch_feats.size());
    for (std::size_t d = 0; d < D; ++d) disc.weights[d] -= config.lr_disc * grad_w[d] * inv;
    disc.bias -= config.lr_disc * grad_b * inv;
    history.disc_accuracy.push_back(correct * inv);

    // 3. Monte-Carlo rollout rewards for every partial sequence. Jobs are
    //    independent with per-job seeds, so the parallel schedule cannot
    //    change the result.
    struct Job {
      std::size_t trace;
      std::size_t step;
      int rollout;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < B; ++i) {
      if (records[i].steps.empty()) continue;
      for (std::size_t t = 0; t + 1 < records[i].steps.size(); ++t) {
        for (int j = 0; j < N; ++j) jobs.push_back(Job{i, t, j});
      }
    }
    std::vector<double> job_score(jobs.size(), 0.0);
    const uint64_t roll_seed = Rng::mix(base_seed, 0x726f6c6cULL + static_cast<uint64_t>(epoch));
#pragma omp parallel for schedule(dynamic, 8)
    for (long long ji = 0; ji < static_cast<long long>(jobs.size()); ++ji) {
      const Job& job = jobs[static_cast<std::size_t>(ji)];
      Rng jrng(Rng::mix(Rng::mix(roll_seed, job.trace * 4096 + job.step),
                        static_cast<uint64_t>(job.rollout)));
      WalkState done = complete_walk(tvn, policy, budget,
                                     prefixes[job.trace][job.step], jrng);
      const ControlTrace full = finalize(tvn, done, "mc");
      job_score[static_cast<std::size_t>(ji)] =
          disc.score(trace_features(tvn, full));
    }

    std::vector<std::vector<double>> rewards(B);
    std::size_t cursor = 0;
    double reward_sum = 0.0;
    std::size_t reward_n = 0;
    for (std::size_t i = 0; i < B; ++i) {
      rewards[i].assign(records[i].steps.size(), 0.0);
      if (records[i].steps.empty()) continue;
      for (std::size_t t = 0; t + 1 < records[i].steps.size(); ++t) {
        double acc = 0.0;
        for (int j = 0; j < N; ++j) acc += job_score[cursor++];
        rewards[i][t] = acc / N;
      }
      rewards[i].back() = disc.score(fake_features[i]);
      for (double r : rewards[i]) {
        if (!std::isfinite(r)) {
          throw NonFiniteLoss("generator reward diverged at epoch " +
                              std::to_string(epoch));
        }
        reward_sum += r;
        reward_n += 1;
      }
    }
    const double baseline = reward_n > 0 ? reward_sum / static_cast<double>(reward_n) : 0.0;
    history.gen_reward.push_back(baseline);

    // 4. REINFORCE update against the sampled masked distributions; the shift
    //    token is credited with the rollout value of the opening step
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t t = 0; t < records[i].steps.size(); ++t) {
        const StepRecord& rec = records[i].steps[t];
        const double adv = rewards[i][t] - baseline;
        std::vector<double>& row = policy.logits_row(rec.key);
        for (std::size_t s = 0; s < S; ++s) {
          const double indicator = s == rec.action ? 1.0 : 0.0;
          row[s] += config.lr_gen / static_cast<double>(B) * adv *
                    (indicator - rec.masked[s]) / tau;
        }
      }
      if (!records[i].steps.empty()) {
        const double adv = rewards[i].front() - baseline;
        std::vector<double>& sl = policy.shift_logits();
        for (int slot = 0; slot < kSlotCount; ++slot) {
          const double indicator = slot == records[i].shift_slot ? 1.0 : 0.0;
          sl[static_cast<std::size_t>(slot)] +=
              config.lr_gen / static_cast<double>(B) * adv *
              (indicator - records[i].shift_probs[static_cast<std::size_t>(slot)]) /
              tau;
        }
      }
    }
  }
  return {std::move(policy), std::move(disc), history};
}

// ---------------------------------------------------------------------------
// model.json
// ---------------------------------------------------------------------------

void write_model(const GeneratorPolicy& policy, const Discriminator& disc,
                 std::ostream& out) {
  json logits = json::object();
  std::vector<uint64_t> keys;
  keys.reserve(policy.table().size());
  for (const auto& [k, row] : policy.table()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (uint64_t k : keys) logits[std::to_string(k)] = *policy.find_row(k);
  json j{{"format", "controlgen-model-v1"},
         {"policy",
          {{"order", policy.order()},
           {"temperature", policy.temperature()},
           {"stations", policy.station_ids()},
           {"shift_logits", policy.shift_logits()},
           {"logits", logits}}},
         {"discriminator",
          {{"feature_space", "hist-entropy-v1"},
           {"weights", disc.weights},
           {"bias", disc.bias},
           {"feat_mean", disc.feat_mean},
           {"feat_scale", disc.feat_scale}}}};
  out << j.dump(2) << "\n";
}

std::pair<GeneratorPolicy, Discriminator> read_model(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model.json: ") + e.what());
  }
  try {
    if (j.value("format", "") != "controlgen-model-v1") {
      throw ParseError("model.json: unknown format tag");
    }
    const json& jp = j.at("policy");
    GeneratorPolicy policy(jp.at("stations").get<std::vector<std::string>>(),
                           jp.at("order").get<int>(),
                           jp.at("temperature").get<double>());
    for (const auto& [key, row] : jp.at("logits").items()) {
      policy.logits_row(std::stoull(key)) = row.get<std::vector<double>>();
    }
    policy.shift_logits() = jp.at("shift_logits").get<std::vector<double>>();
    if (policy.shift_logits().size() != kSlotCount) {
      throw ParseError("model.json: shift_logits must have 72 entries");
    }
    const json& jd = j.at("discriminator");
    Discriminator disc;
    disc.weights = jd.at("weights").get<std::vector<double>>();
    disc.bias = jd.at("bias").get<double>();
    disc.feat_mean = jd.at("feat_mean").get<std::vector<double>>();
    disc.feat_scale = jd.at("feat_scale").get<std::vector<double>>();
    return {std::move(policy), std::move(disc)};
  } catch (const json::exception& e) {
    throw ParseError(std::string("model.json: ") + e.what());
  }
}

}  // namespace controlgen
