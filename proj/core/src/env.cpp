#include "seqsel/env.hpp"

#include <stdexcept>

namespace seqsel {

std::vector<float> EpisodeState::net_input() const {
  const int n = n_features();
  std::vector<float> out(2 * static_cast<std::size_t>(n), 0.0f);
  for (int i = 0; i < n; ++i) {
    if (mask[i]) {
      out[i] = x[i];
      out[n + i] = 1.0f;
    }
  }
  return out;
}

EpisodeState reset(std::span<const float> sample_features) {
  if (sample_features.empty()) throw std::invalid_argument("reset: empty sample");
  EpisodeState s;
  s.x.assign(sample_features.begin(), sample_features.end());
  s.mask.assign(sample_features.size(), 0);
  s.revealed = 0;
  return s;
}

StepResult step(const EpisodeState& state, ActionId action, int true_label, float lambda,
                int n_classes) {
  const int n = state.n_features();
  if (action.index < 0 || action.index >= n + n_classes)
    throw std::invalid_argument("step: action index out of range");
  if (true_label < 0 || true_label >= n_classes)
    throw std::invalid_argument("step: true_label out of range");

  StepResult result;
  if (action.is_feature(n)) {
    const int i = action.feature(n);
    if (state.mask[i])
      throw std::logic_error("step: feature " + std::to_string(i) + " already revealed");
    result.next_state = state;
    result.next_state.mask[i] = 1;
    result.next_state.revealed = state.revealed + 1;
    result.reward = -lambda;
    result.done = false;
  } else {
    const int predicted = action.predicted_class(n);
    result.reward = predicted == true_label ? 0.0f : -1.0f;
    result.done = true;
    result.predicted_class = predicted;
  }
  return result;
}

std::vector<float> validity_penalty(std::span<const float> q_values, const EpisodeState& state) {
  return validity_penalty(q_values, state, -1);
}

std::vector<float> validity_penalty(std::span<const float> q_values, const EpisodeState& state,
                                    int max_steps) {
  const int n = state.n_features();
  if (q_values.size() < static_cast<std::size_t>(n))
    throw std::invalid_argument("validity_penalty: q vector shorter than feature count");
  std::vector<float> out(q_values.begin(), q_values.end());
  const bool capped = max_steps >= 0 && state.revealed >= max_steps;
  for (int i = 0; i < n; ++i)
    if (capped || state.mask[i]) out[i] -= kInvalidActionPenalty;
  return out;
}

std::vector<int> valid_actions(const EpisodeState& state, int n_classes, int max_steps) {
  const int n = state.n_features();
  std::vector<int> out;
  const bool capped = max_steps >= 0 && state.revealed >= max_steps;
  if (!capped)
    for (int i = 0; i < n; ++i)
      if (!state.mask[i]) out.push_back(i);
  for (int c = 0; c < n_classes; ++c) out.push_back(n + c);
  return out;
}

}  // namespace seqsel
