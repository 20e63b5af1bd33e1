#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "controlgen/rng.hpp"
#include "controlgen/target.hpp"
#include "controlgen/transit_net.hpp"

namespace controlgen {

// One controller-shift: day type plus starting hour; visit slots advance with
// elapsed minutes (wrapping past midnight keeps the day type).
struct Shift {
  DayType day = DayType::WD;
  int start_hour = 8;
};

struct Budget {
  int minutes = 240;
};

// Tabular order-k autoregressive policy: softmax(logits / temperature) over
// stations, keyed by (k-station history, decision slot). Missing rows read as
// zeros (uniform). At sampling time the distribution is masked to stations
// affordable within the remaining budget and renormalized.
class GeneratorPolicy {
public:
  GeneratorPolicy() = default;
  GeneratorPolicy(std::vector<std::string> station_ids, int order = 1,
                  double temperature = 1.0);

  const std::vector<std::string>& station_ids() const { return station_ids_; }
  std::size_t station_count() const { return station_ids_.size(); }
  int order() const { return order_; }
  double temperature() const { return temperature_; }

  // history = station indices of up to the last `order` visits, oldest first;
  // shorter histories at sequence start are padded internally.
  uint64_t key(const std::vector<std::size_t>& history, int slot) const;
  std::vector<double> probs(const std::vector<std::size_t>& history, int slot) const;
  std::vector<double>& logits_row(uint64_t key);          // creates zero row
  const std::vector<double>* find_row(uint64_t key) const;  // nullptr if absent

  // The shift start slot is the first token of the sequence: a learned
  // categorical over the 72 slots (zero logits = uniform).
  std::vector<double> shift_probs() const;
  std::vector<double>& shift_logits() { return shift_logits_; }
  const std::vector<double>& shift_logits() const { return shift_logits_; }

  const std::unordered_map<uint64_t, std::vector<double>>& table() const {
    return table_;
  }
  std::unordered_map<uint64_t, std::vector<double>>& table() { return table_; }

private:
  std::vector<std::string> station_ids_;
  int order_ = 1;
  double temperature_ = 1.0;
  std::unordered_map<uint64_t, std::vector<double>> table_;
  std::vector<double> shift_logits_ = std::vector<double>(kSlotCount, 0.0);
};

// Logistic real-vs-generated trace classifier over the fixed 2S+27 feature
// space. When feat_mean/feat_scale are set (fitted on the real batch at the
// start of adversarial training) features are standardized before scoring.
struct Discriminator {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feat_mean;
  std::vector<double> feat_scale;

  double raw(const std::vector<double>& features) const;
  double score(const std::vector<double>& features) const;  // logistic, in (0,1)
};

// [0,S) station-visit fractions; [S,2S) per-station slot entropy (bits);
// [2S,2S+24) hour fractions; then cost_min, quality, transition entropy.
std::vector<double> trace_features(const TimeVaryingNetwork& tvn,
                                   const ControlTrace& trace);
std::size_t feature_dim(std::size_t station_count);

struct TrainingConfig {
  int pretrain_epochs = 1500;
  int gan_epochs = 300;
  int batch_size = 32;
  int rollouts_per_step = 8;  // Monte-Carlo completions per partial sequence
  double lr_gen = 0.06;
  double lr_disc = 0.015;
  uint64_t seed = 1;
};

struct GanHistory {
  std::vector<double> disc_accuracy;  // per epoch, on the training batch
  std::vector<double> gen_reward;     // per epoch mean rollout reward
};

// --- operations ------------------------------------------------------------

// Weighted walk under the target with hard budget masking. The shift is drawn
// from the rng (uniform over the 72 start slots).
ControlTrace sample_baseline(const TimeVaryingNetwork& tvn, Budget budget,
                             const TargetDistribution& target, Rng& rng);

// n independent baseline walks with per-index derived seeds; Serial and
// Parallel produce identical output.
std::vector<ControlTrace> sample_baseline_batch(const TimeVaryingNetwork& tvn,
                                                Budget budget,
                                                const TargetDistribution& target,
                                                std::size_t n, uint64_t seed,
                                                Exec exec = Exec::Parallel);

// Oversample 5n feasible walks, keep the n with the highest Q/C ratio.
std::vector<ControlTrace> derive_training_sequences(const TimeVaryingNetwork& tvn,
                                                    Budget budget, std::size_t n,
                                                    const TargetDistribution& target,
                                                    Rng& rng,
                                                    Exec exec = Exec::Parallel);

// Repeated best single-visit substitution; quality never decreases and the
// budget stays respected.
ControlTrace greedy_improve(const TimeVaryingNetwork& tvn, const ControlTrace& trace,
                            Budget budget);

// Maximum-likelihood pretraining on observed transitions (full-batch gradient
// descent; per-epoch NLL appended to *nll_history when given).
GeneratorPolicy pretrain_policy(GeneratorPolicy policy,
                                const std::vector<ControlTrace>& sequences,
                                const TrainingConfig& config,
                                std::vector<double>* nll_history = nullptr);

// SeqGAN loop: policy-gradient generator updates with discriminator score as
// episodic reward (N-rollout Monte-Carlo credit for partial sequences),
// alternating with logistic discriminator updates on real vs generated.
std::tuple<GeneratorPolicy, Discriminator, GanHistory> train_gan(
    GeneratorPolicy policy, Discriminator disc,
    const std::vector<ControlTrace>& real, const TimeVaryingNetwork& tvn,
    Budget budget, const TrainingConfig& config, Rng& rng);

// n independent policy rollouts, each budget-feasible, tagged with cost and
// quality. Deterministic in seed; Serial and Parallel agree.
std::vector<ControlTrace> generate_schedule(const GeneratorPolicy& policy,
                                            const TimeVaryingNetwork& tvn,
                                            Budget budget, std::size_t n,
                                            uint64_t seed,
                                            Exec exec = Exec::Parallel);

// model.json round-trip.
void write_model(const GeneratorPolicy& policy, const Discriminator& disc,
                 std::ostream& out);
std::pair<GeneratorPolicy, Discriminator> read_model(std::istream& in);

}  // namespace controlgen
