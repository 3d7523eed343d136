#include "seqsel/agent.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace seqsel {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: capacity must be > 0");
  storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (storage_.empty()) throw std::logic_error("replay buffer: cannot sample while empty");
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(&storage_[rng.uniform_index(size())]);
  return out;
}

double TrainConfig::epsilon_decay_rate() const {
  if (eps_decay) return *eps_decay;
  if (episodes <= 0) return 0.0;
  return (eps_start - eps_min) / (0.8 * static_cast<double>(episodes));
}

int TrainConfig::resolved_max_steps(int n_features) const {
  return max_steps ? *max_steps : n_features;
}

void TrainConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("train config: episodes must be >= 0");
  if (lambda < 0.0) throw std::invalid_argument("train config: lambda must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("train config: gamma must lie in [0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::invalid_argument("train config: tau must lie in [0, 1]");
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_min >= 0.0 && eps_min <= 1.0))
    throw std::invalid_argument("train config: epsilon bounds must lie in [0, 1]");
  if (eps_min > eps_start)
    throw std::invalid_argument("train config: eps_min must not exceed eps_start");
  if (eps_decay && *eps_decay < 0.0)
    throw std::invalid_argument("train config: eps_decay must be >= 0");
  if (batch_size <= 0) throw std::invalid_argument("train config: batch_size must be > 0");
  if (buffer_capacity <= 0)
    throw std::invalid_argument("train config: buffer_capacity must be > 0");
  if (updates_per_episode < 0)
    throw std::invalid_argument("train config: updates_per_episode must be >= 0");
  if (max_steps && *max_steps <= 0)
    throw std::invalid_argument("train config: max_steps must be > 0");
  if (warmup_transitions < 0)
    throw std::invalid_argument("train config: warmup_transitions must be >= 0");
}

double epsilon_at(long long t, const TrainConfig& cfg) {
  if (t < 0) throw std::invalid_argument("epsilon_at: t must be >= 0");
  return std::max(cfg.eps_min, cfg.eps_start - cfg.epsilon_decay_rate() * static_cast<double>(t));
}

namespace {

int masked_argmax(std::span<const float> q) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[a] > q[best]) best = a;  // strict: ties keep the lowest index
  return best;
}

}  // namespace

ActionId select_action(const QNetParams& params, const EpisodeState& state, double epsilon,
                       Rng& rng, int n_classes, int max_steps) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("select_action: epsilon must lie in [0, 1]");
  if (rng.uniform01() < epsilon) {
    const auto valid = valid_actions(state, n_classes, max_steps);
    return ActionId{valid[rng.uniform_index(valid.size())]};
  }
  const auto input = state.net_input();
  const auto q = forward(params, std::span<const float>(input), 1);
  const auto masked = validity_penalty(q, state, max_steps);
  return ActionId{masked_argmax(masked)};
}

std::vector<float> double_q_targets(const std::vector<const Transition*>& batch,
                                    const QNetParams& online, const QNetParams& target,
                                    double gamma) {
  if (batch.empty()) throw std::invalid_argument("double_q_targets: empty batch");
  const int n = online.n;
  const int actions = online.action_dim();

  std::vector<float> targets(batch.size());
  std::vector<std::size_t> pending;  // indices of non-terminal transitions
  std::vector<float> next_states;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i]->done) {
      targets[i] = batch[i]->reward;
    } else {
      pending.push_back(i);
      next_states.insert(next_states.end(), batch[i]->next_state.begin(),
                         batch[i]->next_state.end());
    }
  }
  if (pending.empty()) return targets;

  const int m = static_cast<int>(pending.size());
  const auto q_online = forward(online, std::span<const float>(next_states), m);
  const auto q_target = forward(target, std::span<const float>(next_states), m);

  for (int j = 0; j < m; ++j) {
    const std::size_t i = pending[j];
    const float* s_next = next_states.data() + static_cast<std::size_t>(j) * 2 * n;
    const float* qo = q_online.data() + static_cast<std::size_t>(j) * actions;

    // argmax under the online net with revealed features masked out
    int best = -1;
    float best_q = 0.0f;
    for (int a = 0; a < actions; ++a) {
      float q = qo[a];
      if (a < n && s_next[n + a] != 0.0f) q -= kInvalidActionPenalty;
      if (best < 0 || q > best_q) {
        best = a;
        best_q = q;
      }
    }
    const float bootstrap = q_target[static_cast<std::size_t>(j) * actions + best];
    targets[i] = batch[i]->reward + static_cast<float>(gamma) * bootstrap;
  }
  return targets;
}

void soft_update(QNetParams& target, const QNetParams& online, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
  if (target.arch != online.arch || target.n != online.n || target.k != online.k)
    throw std::invalid_argument("soft_update: architecture mismatch");
  auto t_refs = tensor_list(target);
  auto o_refs = tensor_list(std::as_const(online));
  for (std::size_t t = 0; t < t_refs.size(); ++t) {
    auto& tv = *t_refs[t].data;
    const auto& ov = *o_refs[t].data;
    for (std::size_t i = 0; i < tv.size(); ++i)
      tv[i] = static_cast<float>(tau * static_cast<double>(ov[i]) +
                                 (1.0 - tau) * static_cast<double>(tv[i]));
  }
}

namespace {

std::vector<float> row_as_float(const Dataset& data, std::size_t i) {
  const auto r = data.row(i);
  return std::vector<float>(r.begin(), r.end());
}

/// Greedy episode; shared by evaluate() and the validation trace.
EpisodeRecord greedy_rollout(const QNetParams& params, const Dataset& data, std::size_t row,
                             int max_steps) {
  const int n = data.n_features;
  const int k = data.n_classes;
  const auto sample = row_as_float(data, row);
  EpisodeState state = reset(std::span<const float>(sample));

  EpisodeRecord record;
  record.true_label = data.labels[row];
  while (true) {
    const auto input = state.net_input();
    const auto q = forward(params, std::span<const float>(input), 1);
    const auto masked = validity_penalty(q, state, max_steps);
    const ActionId action{masked_argmax(masked)};
    StepResult res = step(state, action, data.labels[row], 0.0f, k);
    if (res.done) {
      record.predicted_label = res.predicted_class;
      break;
    }
    record.features.push_back(action.feature(n));
    state = std::move(res.next_state);
  }
  return record;
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& cfg, const Dataset* validation,
                  long long eval_interval) {
  cfg.validate();
  if (data.rows() == 0) throw std::invalid_argument("train: empty dataset");
  data.validate();
  const int n = data.n_features;
  const int k = data.n_classes;
  const int max_steps = cfg.resolved_max_steps(n);
  const auto lambda = static_cast<float>(cfg.lambda);

  TrainResult result;
  result.params = init_params(n, k, cfg.arch, cfg.seed);
  QNetParams target = result.params;
  result.opt = init_opt_state(result.params);

  ReplayBuffer buffer(cfg.buffer_capacity);
  Rng rng(Rng::mix(cfg.seed, 4));

  std::vector<int> batch_actions(cfg.batch_size);
  std::vector<float> batch_states;

  for (long long episode = 0; episode < cfg.episodes; ++episode) {
    const double epsilon = epsilon_at(episode, cfg);
    const double lr = lr_at(episode);

    const std::size_t row = rng.uniform_index(data.rows());
    const auto sample = row_as_float(data, row);
    const int label = data.labels[row];

    EpisodeState state = reset(std::span<const float>(sample));
    EpisodeRecord record;
    record.true_label = label;

    while (true) {
      const ActionId action = select_action(result.params, state, epsilon, rng, k, max_steps);
      StepResult res = step(state, action, label, lambda, k);

      Transition t;
      t.state = state.net_input();
      t.action = action;
      t.reward = res.reward;
      t.done = res.done;
      if (!res.done) t.next_state = res.next_state.net_input();
      buffer.push(std::move(t));

      if (res.done) {
        record.predicted_label = res.predicted_class;
        break;
      }
      record.features.push_back(action.feature(n));
      state = std::move(res.next_state);
    }
    result.log.episodes.push_back(std::move(record));

    if (buffer.size() >= static_cast<std::size_t>(cfg.warmup_transitions)) {
      for (int u = 0; u < cfg.updates_per_episode; ++u) {
        const auto batch = buffer.sample(cfg.batch_size, rng);
        const auto targets = double_q_targets(batch, result.params, target, cfg.gamma);

        batch_states.clear();
        for (std::size_t i = 0; i < batch.size(); ++i) {
          batch_states.insert(batch_states.end(), batch[i]->state.begin(),
                              batch[i]->state.end());
          batch_actions[i] = batch[i]->action.index;
        }
        auto lg = td_loss_and_grads(result.params, std::span<const float>(batch_states),
                                    std::span<const int>(batch_actions.data(), batch.size()),
                                    std::span<const float>(targets), static_cast<int>(batch.size()));
        clip_global_norm(lg.grads, kMaxGradNorm);
        result.opt.learning_rate = lr;
        adam_step(result.params, lg.grads, result.opt, kWeightDecay);
        soft_update(target, result.params, cfg.tau);
      }
    }

    if (validation && eval_interval > 0 && (episode + 1) % eval_interval == 0) {
      const EvalResult ev = evaluate(result.params, *validation, max_steps);
      double length_sum = 0.0;
      std::size_t correct = 0;
      for (const auto& rec : ev.log.episodes) {
        length_sum += rec.length();
        if (rec.predicted_label == rec.true_label) ++correct;
      }
      TraceRecord tr;
      tr.episode = episode + 1;
      tr.epsilon = epsilon;
      tr.lr = lr;
      tr.mean_episode_length =
          ev.log.episodes.empty() ? 0.0 : length_sum / static_cast<double>(ev.log.episodes.size());
      tr.accuracy = ev.log.episodes.empty()
                        ? 0.0
                        : static_cast<double>(correct) / static_cast<double>(ev.log.episodes.size());
      result.trace.push_back(tr);
    }
  }
  return result;
}

EvalResult evaluate(const QNetParams& params, const Dataset& data, int max_steps) {
  if (params.n != data.n_features || params.k != data.n_classes)
    throw std::invalid_argument("evaluate: checkpoint dimensions do not match dataset");
  EvalResult out;
  out.log.episodes.reserve(data.rows());
  out.predictions.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto record = greedy_rollout(params, data, i, max_steps);
    out.predictions.push_back(record.predicted_label);
    out.log.episodes.push_back(std::move(record));
  }
  return out;
}

EvalResult evaluate_random_policy(const Dataset& data, int max_steps, std::uint64_t seed) {
  const int n = data.n_features;
  const int k = data.n_classes;
  Rng rng(Rng::mix(seed, 5));
  EvalResult out;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto sample = row_as_float(data, i);
    EpisodeState state = reset(std::span<const float>(sample));
    EpisodeRecord record;
    record.true_label = data.labels[i];
    while (true) {
      const auto valid = valid_actions(state, k, max_steps);
      const ActionId action{valid[rng.uniform_index(valid.size())]};
      StepResult res = step(state, action, data.labels[i], 0.0f, k);
      if (res.done) {
        record.predicted_label = res.predicted_class;
        break;
      }
      record.features.push_back(action.feature(n));
      state = std::move(res.next_state);
    }
    out.predictions.push_back(record.predicted_label);
    out.log.episodes.push_back(std::move(record));
  }
  return out;
}

void write_selection_log(const SelectionLog& log, std::ostream& out) {
  for (const auto& rec : log.episodes) {
    nlohmann::json j;
    j["true_label"] = rec.true_label;
    j["predicted_label"] = rec.predicted_label;
    j["features"] = rec.features;
    out << j.dump() << '\n';
  }
}

void write_trace(const std::vector<TraceRecord>& trace, std::ostream& out) {
  for (const auto& tr : trace) {
    nlohmann::json j;
    j["episode"] = tr.episode;
    j["epsilon"] = tr.epsilon;
    j["lr"] = tr.lr;
    j["mean_episode_length"] = tr.mean_episode_length;
    j["accuracy"] = tr.accuracy;
    out << j.dump() << '\n';
  }
}

}  // namespace seqsel
