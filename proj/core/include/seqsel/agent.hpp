#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "seqsel/dataset.hpp"
#include "seqsel/env.hpp"
#include "seqsel/qnet.hpp"
#include "seqsel/rng.hpp"

namespace seqsel {

struct Transition {
  std::vector<float> state;       // [x*m ; m], length 2n
  std::vector<float> next_state;  // unused when done
  ActionId action;
  float reward = 0.0f;
  bool done = false;
};

/// Fixed-capacity ring buffer with uniform sampling; oldest entries are
/// evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }

  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> storage_;
};

struct TrainConfig {
  long long episodes = 10000;
  double lambda = 1e-4;   // per-feature acquisition cost
  double gamma = 0.99;    // discount
  double tau = 0.01;      // soft target update rate
  double eps_start = 0.70;
  double eps_min = 0.03;
  // Linear decay slope; when unset, epsilon reaches eps_min at 80% of the
  // episode budget.
  std::optional<double> eps_decay;
  int batch_size = 64;
  int buffer_capacity = 100000;
  int updates_per_episode = 1;
  std::optional<int> max_steps;  // defaults to n
  Arch arch = Arch::D3QN;
  std::uint64_t seed = 0;
  int warmup_transitions = 1000;

  double epsilon_decay_rate() const;
  int resolved_max_steps(int n_features) const;
  void validate() const;
};

/// Epsilon for episode index t: max(eps_min, eps_start - alpha * t).
double epsilon_at(long long t, const TrainConfig& cfg);

/// Epsilon-greedy over currently valid actions. Greedy branch takes the
/// argmax of the penalty-masked Q-values, ties broken toward the lowest
/// action index. max_steps < 0 disables the step cap.
ActionId select_action(const QNetParams& params, const EpisodeState& state, double epsilon,
                       Rng& rng, int n_classes, int max_steps);

/// Double-Q regression targets: r for terminal transitions, otherwise
/// r + gamma * Q_target(s', a*) where a* is the masked argmax under the
/// online network at s' (mask rebuilt from the stored state's mask half).
/// The bootstrap uses the raw target-network value at a*.
std::vector<float> double_q_targets(const std::vector<const Transition*>& batch,
                                    const QNetParams& online, const QNetParams& target,
                                    double gamma);

/// target <- tau * online + (1 - tau) * target, per scalar.
void soft_update(QNetParams& target, const QNetParams& online, double tau);

/// Ordered record of one episode: which features were revealed (step numbers
/// are positions + 1) and how it ended.
struct EpisodeRecord {
  int true_label = 0;
  int predicted_label = 0;
  std::vector<int> features;

  int length() const { return static_cast<int>(features.size()); }
};

struct SelectionLog {
  std::vector<EpisodeRecord> episodes;
};

struct TraceRecord {
  long long episode = 0;
  double epsilon = 0.0;
  double lr = 0.0;
  double mean_episode_length = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  QNetParams params;
  OptState<float> opt;
  SelectionLog log;             // every training episode, exploration included
  std::vector<TraceRecord> trace;
};

/// Train a policy on `data` (assumed normalized). One uniform replay batch,
/// one clipped Adam step and one soft target update per episode once the
/// buffer holds warmup_transitions. Deterministic for a fixed seed. When a
/// validation set is given, a greedy evaluation runs every eval_interval
/// episodes and lands in the trace.
TrainResult train(const Dataset& data, const TrainConfig& cfg,
                  const Dataset* validation = nullptr, long long eval_interval = 500);

struct EvalResult {
  SelectionLog log;
  std::vector<int> predictions;
};

/// Pure greedy rollout (epsilon = 0) over every row; no learning.
EvalResult evaluate(const QNetParams& params, const Dataset& data, int max_steps);

/// Diagnostic baseline: uniform choice among valid actions at every step.
EvalResult evaluate_random_policy(const Dataset& data, int max_steps, std::uint64_t seed);

void write_selection_log(const SelectionLog& log, std::ostream& out);
void write_trace(const std::vector<TraceRecord>& trace, std::ostream& out);

}  // namespace seqsel
