#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace seqsel {

/// Index into the combined action space of size n + k: indices [0, n) reveal
/// feature i, indices [n, n + k) terminate with class prediction index - n.
struct ActionId {
  int index = 0;

  bool is_feature(int n_features) const { return index < n_features; }
  int feature(int /*n_features*/) const { return index; }
  int predicted_class(int n_features) const { return index - n_features; }

  friend bool operator==(ActionId a, ActionId b) { return a.index == b.index; }
};

inline ActionId feature_action(int feature_index) { return ActionId{feature_index}; }
inline ActionId class_action(int n_features, int class_index) {
  return ActionId{n_features + class_index};
}

/// One in-flight classification episode: the full (normalized) sample plus a
/// reveal mask. The network never sees unrevealed values; net_input() zeroes
/// them and appends the mask.
struct EpisodeState {
  std::vector<float> x;          // full sample, length n
  std::vector<std::uint8_t> mask;  // 0/1 per feature
  int revealed = 0;

  int n_features() const { return static_cast<int>(x.size()); }

  /// [x * m ; m], length 2n.
  std::vector<float> net_input() const;
};

struct StepResult {
  EpisodeState next_state;  // valid only when !done
  float reward = 0.0f;
  bool done = false;
  int predicted_class = -1;  // set iff done
};

/// Fresh episode over one sample; nothing revealed yet.
EpisodeState reset(std::span<const float> sample_features);

/// Apply one action. Feature actions reveal a feature and cost -lambda;
/// classification actions terminate with reward 0 (correct) or -1 (wrong).
/// Re-selecting a revealed feature is a caller contract violation and throws.
StepResult step(const EpisodeState& state, ActionId action, int true_label, float lambda,
                int n_classes);

/// Q-values with 1e6 subtracted from every already-revealed feature action.
/// Classification actions are never penalized.
std::vector<float> validity_penalty(std::span<const float> q_values, const EpisodeState& state);

/// As above, but once `revealed >= max_steps` every feature action is
/// penalized, forcing the argmax onto a classification action.
std::vector<float> validity_penalty(std::span<const float> q_values, const EpisodeState& state,
                                    int max_steps);

/// Action indices currently selectable: unrevealed features plus all
/// classification actions; only classification once the step cap is reached.
std::vector<int> valid_actions(const EpisodeState& state, int n_classes, int max_steps);

inline constexpr float kInvalidActionPenalty = 1e6f;

}  // namespace seqsel
