#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seqsel {

enum class Arch { D3QN, DDQN };

std::string arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

inline constexpr int kHiddenWidth = 128;

/// All learnable tensors of the Q-network. Three PReLU hidden layers feed
/// either a dueling value/advantage pair (D3QN) or a single linear output
/// head (DDQN). The same container shape is reused for gradients and for
/// optimizer moments.
template <typename T>
struct NetTensors {
  Arch arch = Arch::D3QN;
  int n = 0;  // feature count; input is [x * m ; m] of length 2n
  int k = 0;  // class count; action space is n + k

  std::array<std::vector<T>, 3> weight;  // [128 x in], row-major
  std::array<std::vector<T>, 3> bias;    // [128]
  std::array<std::vector<T>, 3> slope;   // [128] learnable PReLU slopes

  std::vector<T> value_weight;  // [1 x 128]      (D3QN)
  std::vector<T> value_bias;    // [1]
  std::vector<T> adv_weight;    // [(n+k) x 128]  (D3QN)
  std::vector<T> adv_bias;      // [n+k]

  std::vector<T> out_weight;  // [(n+k) x 128]    (DDQN)
  std::vector<T> out_bias;    // [n+k]

  int input_dim() const { return 2 * n; }
  int action_dim() const { return n + k; }
  std::size_t parameter_count() const;
};

using QNetParams = NetTensors<float>;

/// Stable enumeration of a network's tensors; defines checkpoint layout and
/// the order generic per-scalar operations visit parameters.
template <typename T>
struct TensorRef {
  std::string name;
  std::vector<T>* data;
  int rows;
  int cols;  // 0 for vectors
};

template <typename T>
struct ConstTensorRef {
  std::string name;
  const std::vector<T>* data;
  int rows;
  int cols;
};

template <typename T>
std::vector<TensorRef<T>> tensor_list(NetTensors<T>& net);
template <typename T>
std::vector<ConstTensorRef<T>> tensor_list(const NetTensors<T>& net);

/// Same architecture and dimensions, all tensors zero-filled.
template <typename T>
NetTensors<T> zeros_like(const NetTensors<T>& net);

template <typename To, typename From>
NetTensors<To> convert(const NetTensors<From>& net);

/// Fan-in scaled uniform weights, zero biases, PReLU slopes 0.25.
/// Deterministic for a fixed seed.
QNetParams init_params(int n, int k, Arch arch, std::uint64_t seed);

/// Per-sample intermediate values kept by the cached forward pass.
template <typename T>
struct Activations {
  int batch = 0;
  std::vector<T> z1, h1, z2, h2, z3, h3;  // batch x 128
  std::vector<T> value;                   // batch        (D3QN)
  std::vector<T> adv;                     // batch x (n+k) (D3QN)
  std::vector<T> q;                       // batch x (n+k)
};

/// Q-values for a batch of states (row-major batch x 2n).
template <typename T>
std::vector<T> forward(const NetTensors<T>& net, std::span<const T> states, int batch);

template <typename T>
Activations<T> forward_cached(const NetTensors<T>& net, std::span<const T> states, int batch);

template <typename T>
struct LossGrads {
  double loss = 0.0;
  NetTensors<T> grads;
};

/// Mean squared error between Q(s_i, a_i) and target_i, plus exact analytic
/// gradients for every tensor (PReLU slopes included). Loss is accumulated in
/// double regardless of T.
template <typename T>
LossGrads<T> td_loss_and_grads(const NetTensors<T>& net, std::span<const T> states,
                               std::span<const int> actions, std::span<const T> targets,
                               int batch);

/// Central-difference gradient of the same loss, (L(p+h) - L(p-h)) / 2h per
/// scalar parameter. Forward-only; shares no code with the backward pass.
/// Meaningful tolerances require T = double.
template <typename T>
NetTensors<T> finite_difference_grad(const NetTensors<T>& net, std::span<const T> states,
                                     std::span<const int> actions, std::span<const T> targets,
                                     int batch, T h);

/// Scale all gradients by max_norm/g when the global L2 norm g exceeds
/// max_norm. Returns the pre-clip norm.
template <typename T>
double clip_global_norm(NetTensors<T>& grads, double max_norm);

template <typename T>
struct OptState {
  NetTensors<T> m;  // first moments
  NetTensors<T> v;  // second moments
  long long step = 0;
  double learning_rate = 1e-3;
};

template <typename T>
OptState<T> init_opt_state(const NetTensors<T>& net);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// Adam with coupled L2 weight decay (grad += wd * param before the moment
/// update) and bias correction. Uses opt.learning_rate.
template <typename T>
void adam_step(NetTensors<T>& params, const NetTensors<T>& grads, OptState<T>& opt,
               double weight_decay);

/// Step-decay schedule: 1e-3 * 0.7^floor(epoch / 3000), floored at 3e-8.
double lr_at(long long epoch);

inline constexpr double kInitialLearningRate = 1e-3;
inline constexpr double kLrDecayFactor = 0.7;
inline constexpr long long kLrDecayEpochs = 3000;
inline constexpr double kMinLearningRate = 3e-8;
inline constexpr double kWeightDecay = 1e-6;
inline constexpr double kMaxGradNorm = 1.0;

extern template struct NetTensors<float>;
extern template struct NetTensors<double>;

}  // namespace seqsel
