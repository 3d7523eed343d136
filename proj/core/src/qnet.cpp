#include "seqsel/qnet.hpp"

#include <cmath>
#include <stdexcept>

#include "seqsel/rng.hpp"

namespace seqsel {

std::string arch_name(Arch arch) { return arch == Arch::D3QN ? "d3qn" : "ddqn"; }

Arch arch_from_name(const std::string& name) {
  if (name == "d3qn") return Arch::D3QN;
  if (name == "ddqn") return Arch::DDQN;
  throw std::invalid_argument("unknown architecture '" + name + "' (expected d3qn or ddqn)");
}

namespace {

template <typename T>
inline T prelu(T z, T slope) {
  return z >= T(0) ? z : slope * z;
}

template <typename NetT, typename RefT>
std::vector<RefT> build_tensor_list(NetT& net) {
  const int hidden = kHiddenWidth;
  std::vector<RefT> out;
  for (int l = 0; l < 3; ++l) {
    const std::string p = "l" + std::to_string(l + 1);
    const int in_dim = l == 0 ? net.input_dim() : hidden;
    out.push_back({p + ".weight", &net.weight[l], hidden, in_dim});
    out.push_back({p + ".bias", &net.bias[l], hidden, 0});
    out.push_back({p + ".prelu", &net.slope[l], hidden, 0});
  }
  if (net.arch == Arch::D3QN) {
    out.push_back({"value.weight", &net.value_weight, 1, hidden});
    out.push_back({"value.bias", &net.value_bias, 1, 0});
    out.push_back({"advantage.weight", &net.adv_weight, net.action_dim(), hidden});
    out.push_back({"advantage.bias", &net.adv_bias, net.action_dim(), 0});
  } else {
    out.push_back({"output.weight", &net.out_weight, net.action_dim(), hidden});
    out.push_back({"output.bias", &net.out_bias, net.action_dim(), 0});
  }
  return out;
}

template <typename T>
void check_dims(const NetTensors<T>& net) {
  if (net.n < 1 || net.k < 1) throw std::invalid_argument("qnet: n and k must be >= 1");
}

}  // namespace

template <typename T>
std::size_t NetTensors<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& ref : tensor_list(*this)) total += ref.data->size();
  return total;
}

template <typename T>
std::vector<TensorRef<T>> tensor_list(NetTensors<T>& net) {
  return build_tensor_list<NetTensors<T>, TensorRef<T>>(net);
}

template <typename T>
std::vector<ConstTensorRef<T>> tensor_list(const NetTensors<T>& net) {
  return build_tensor_list<const NetTensors<T>, ConstTensorRef<T>>(net);
}

template <typename T>
NetTensors<T> zeros_like(const NetTensors<T>& net) {
  NetTensors<T> out;
  out.arch = net.arch;
  out.n = net.n;
  out.k = net.k;
  for (int l = 0; l < 3; ++l) {
    out.weight[l].assign(net.weight[l].size(), T(0));
    out.bias[l].assign(net.bias[l].size(), T(0));
    out.slope[l].assign(net.slope[l].size(), T(0));
  }
  out.value_weight.assign(net.value_weight.size(), T(0));
  out.value_bias.assign(net.value_bias.size(), T(0));
  out.adv_weight.assign(net.adv_weight.size(), T(0));
  out.adv_bias.assign(net.adv_bias.size(), T(0));
  out.out_weight.assign(net.out_weight.size(), T(0));
  out.out_bias.assign(net.out_bias.size(), T(0));
  return out;
}

template <typename To, typename From>
NetTensors<To> convert(const NetTensors<From>& net) {
  NetTensors<To> out;
  out.arch = net.arch;
  out.n = net.n;
  out.k = net.k;
  auto copy = [](const std::vector<From>& src, std::vector<To>& dst) {
    dst.assign(src.begin(), src.end());
  };
  for (int l = 0; l < 3; ++l) {
    copy(net.weight[l], out.weight[l]);
    copy(net.bias[l], out.bias[l]);
    copy(net.slope[l], out.slope[l]);
  }
  copy(net.value_weight, out.value_weight);
  copy(net.value_bias, out.value_bias);
  copy(net.adv_weight, out.adv_weight);
  copy(net.adv_bias, out.adv_bias);
  copy(net.out_weight, out.out_weight);
  copy(net.out_bias, out.out_bias);
  return out;
}

QNetParams init_params(int n, int k, Arch arch, std::uint64_t seed) {
  if (n < 1 || k < 1) throw std::invalid_argument("init_params: n and k must be >= 1");
  QNetParams net;
  net.arch = arch;
  net.n = n;
  net.k = k;
  const int hidden = kHiddenWidth;
  const int actions = n + k;
  for (int l = 0; l < 3; ++l) {
    const int in_dim = l == 0 ? 2 * n : hidden;
    net.weight[l].resize(static_cast<std::size_t>(hidden) * in_dim);
    net.bias[l].assign(hidden, 0.0f);
    net.slope[l].assign(hidden, 0.25f);
  }
  if (arch == Arch::D3QN) {
    net.value_weight.resize(hidden);
    net.value_bias.assign(1, 0.0f);
    net.adv_weight.resize(static_cast<std::size_t>(actions) * hidden);
    net.adv_bias.assign(actions, 0.0f);
  } else {
    net.out_weight.resize(static_cast<std::size_t>(actions) * hidden);
    net.out_bias.assign(actions, 0.0f);
  }

  Rng rng(Rng::mix(seed, 3));
  for (auto& ref : tensor_list(net)) {
    if (ref.cols == 0) continue;  // biases and slopes keep their fill values
    const double limit = std::sqrt(6.0 / static_cast<double>(ref.cols));
    for (auto& w : *ref.data) w = static_cast<float>(rng.uniform(-limit, limit));
  }
  return net;
}

namespace {

template <typename T>
void linear(const std::vector<T>& w, const std::vector<T>& b, const T* in, int in_dim, T* out,
            int out_dim) {
  for (int u = 0; u < out_dim; ++u) {
    const T* row = w.data() + static_cast<std::size_t>(u) * in_dim;
    T acc = b[u];
    for (int j = 0; j < in_dim; ++j) acc += row[j] * in[j];
    out[u] = acc;
  }
}

template <typename T>
void prelu_layer(const T* z, const std::vector<T>& slope, T* h, int dim) {
  for (int u = 0; u < dim; ++u) h[u] = prelu(z[u], slope[u]);
}

}  // namespace

template <typename T>
Activations<T> forward_cached(const NetTensors<T>& net, std::span<const T> states, int batch) {
  check_dims(net);
  const int in_dim = net.input_dim();
  const int hidden = kHiddenWidth;
  const int actions = net.action_dim();
  if (states.size() != static_cast<std::size_t>(batch) * in_dim)
    throw std::invalid_argument("forward: state batch size does not match 2n * batch");

  Activations<T> act;
  act.batch = batch;
  const std::size_t bh = static_cast<std::size_t>(batch) * hidden;
  act.z1.resize(bh);
  act.h1.resize(bh);
  act.z2.resize(bh);
  act.h2.resize(bh);
  act.z3.resize(bh);
  act.h3.resize(bh);
  act.q.resize(static_cast<std::size_t>(batch) * actions);
  if (net.arch == Arch::D3QN) {
    act.value.resize(batch);
    act.adv.resize(static_cast<std::size_t>(batch) * actions);
  }

  for (int i = 0; i < batch; ++i) {
    const T* s = states.data() + static_cast<std::size_t>(i) * in_dim;
    T* z1 = act.z1.data() + static_cast<std::size_t>(i) * hidden;
    T* h1 = act.h1.data() + static_cast<std::size_t>(i) * hidden;
    T* z2 = act.z2.data() + static_cast<std::size_t>(i) * hidden;
    T* h2 = act.h2.data() + static_cast<std::size_t>(i) * hidden;
    T* z3 = act.z3.data() + static_cast<std::size_t>(i) * hidden;
    T* h3 = act.h3.data() + static_cast<std::size_t>(i) * hidden;
    T* q = act.q.data() + static_cast<std::size_t>(i) * actions;

    linear(net.weight[0], net.bias[0], s, in_dim, z1, hidden);
    prelu_layer(z1, net.slope[0], h1, hidden);
    linear(net.weight[1], net.bias[1], h1, hidden, z2, hidden);
    prelu_layer(z2, net.slope[1], h2, hidden);
    linear(net.weight[2], net.bias[2], h2, hidden, z3, hidden);
    prelu_layer(z3, net.slope[2], h3, hidden);

    if (net.arch == Arch::D3QN) {
      T v = net.value_bias[0];
      for (int j = 0; j < hidden; ++j) v += net.value_weight[j] * h3[j];
      act.value[i] = v;
      T* adv = act.adv.data() + static_cast<std::size_t>(i) * actions;
      linear(net.adv_weight, net.adv_bias, h3, hidden, adv, actions);
      double mean = 0.0;
      for (int a = 0; a < actions; ++a) mean += static_cast<double>(adv[a]);
      const T adv_mean = static_cast<T>(mean / actions);
      for (int a = 0; a < actions; ++a) q[a] = v + (adv[a] - adv_mean);
    } else {
      linear(net.out_weight, net.out_bias, h3, hidden, q, actions);
    }
  }
  return act;
}

template <typename T>
std::vector<T> forward(const NetTensors<T>& net, std::span<const T> states, int batch) {
  return forward_cached(net, states, batch).q;
}

template <typename T>
LossGrads<T> td_loss_and_grads(const NetTensors<T>& net, std::span<const T> states,
                               std::span<const int> actions, std::span<const T> targets,
                               int batch) {
  check_dims(net);
  if (batch <= 0) throw std::invalid_argument("td_loss_and_grads: empty batch");
  if (actions.size() != static_cast<std::size_t>(batch) ||
      targets.size() != static_cast<std::size_t>(batch))
    throw std::invalid_argument("td_loss_and_grads: batch shapes disagree");
  const int in_dim = net.input_dim();
  const int hidden = kHiddenWidth;
  const int n_actions = net.action_dim();
  for (int a : actions)
    if (a < 0 || a >= n_actions)
      throw std::invalid_argument("td_loss_and_grads: action index out of range");

  const Activations<T> act = forward_cached(net, states, batch);

  LossGrads<T> result;
  result.grads = zeros_like(net);
  NetTensors<T>& g = result.grads;

  // column means of the advantage head, used by dh3 under the dueling split
  std::vector<T> adv_colmean;
  if (net.arch == Arch::D3QN) {
    adv_colmean.assign(hidden, T(0));
    for (int a = 0; a < n_actions; ++a) {
      const T* row = net.adv_weight.data() + static_cast<std::size_t>(a) * hidden;
      for (int j = 0; j < hidden; ++j) adv_colmean[j] += row[j];
    }
    for (int j = 0; j < hidden; ++j) adv_colmean[j] /= static_cast<T>(n_actions);
  }

  std::vector<T> dh(hidden), dz(hidden), dh_prev(hidden);
  double loss_acc = 0.0;

  for (int i = 0; i < batch; ++i) {
    const int sel = actions[i];
    const T* s = states.data() + static_cast<std::size_t>(i) * in_dim;
    const T* h1 = act.h1.data() + static_cast<std::size_t>(i) * hidden;
    const T* h2 = act.h2.data() + static_cast<std::size_t>(i) * hidden;
    const T* h3 = act.h3.data() + static_cast<std::size_t>(i) * hidden;
    const T* q = act.q.data() + static_cast<std::size_t>(i) * n_actions;

    const double residual = static_cast<double>(q[sel]) - static_cast<double>(targets[i]);
    loss_acc += residual * residual;
    const T dq = static_cast<T>(2.0 * residual / batch);

    // head backward -> dh
    if (net.arch == Arch::D3QN) {
      const T inv_a = T(1) / static_cast<T>(n_actions);
      g.value_bias[0] += dq;
      for (int j = 0; j < hidden; ++j) g.value_weight[j] += dq * h3[j];
      for (int a = 0; a < n_actions; ++a) {
        const T da = dq * ((a == sel ? T(1) : T(0)) - inv_a);
        g.adv_bias[a] += da;
        T* grow = g.adv_weight.data() + static_cast<std::size_t>(a) * hidden;
        for (int j = 0; j < hidden; ++j) grow[j] += da * h3[j];
      }
      const T* sel_row = net.adv_weight.data() + static_cast<std::size_t>(sel) * hidden;
      for (int j = 0; j < hidden; ++j)
        dh[j] = dq * (net.value_weight[j] + sel_row[j] - adv_colmean[j]);
    } else {
      g.out_bias[sel] += dq;
      T* grow = g.out_weight.data() + static_cast<std::size_t>(sel) * hidden;
      const T* orow = net.out_weight.data() + static_cast<std::size_t>(sel) * hidden;
      for (int j = 0; j < hidden; ++j) {
        grow[j] += dq * h3[j];
        dh[j] = dq * orow[j];
      }
    }

    // hidden layers, last to first
    for (int l = 2; l >= 0; --l) {
      const T* z = (l == 2 ? act.z3 : l == 1 ? act.z2 : act.z1).data() +
                   static_cast<std::size_t>(i) * hidden;
      const T* in = l == 2 ? h2 : l == 1 ? h1 : s;
      const int cur_in = l == 0 ? in_dim : hidden;

      for (int u = 0; u < hidden; ++u) {
        if (z[u] >= T(0)) {
          dz[u] = dh[u];
        } else {
          dz[u] = dh[u] * net.slope[l][u];
          g.slope[l][u] += dh[u] * z[u];
        }
        g.bias[l][u] += dz[u];
      }
      for (int u = 0; u < hidden; ++u) {
        const T dzu = dz[u];
        if (dzu == T(0)) continue;
        T* grow = g.weight[l].data() + static_cast<std::size_t>(u) * cur_in;
        for (int j = 0; j < cur_in; ++j) grow[j] += dzu * in[j];
      }
      if (l > 0) {
        std::fill(dh_prev.begin(), dh_prev.end(), T(0));
        for (int u = 0; u < hidden; ++u) {
          const T dzu = dz[u];
          if (dzu == T(0)) continue;
          const T* wrow = net.weight[l].data() + static_cast<std::size_t>(u) * hidden;
          for (int j = 0; j < hidden; ++j) dh_prev[j] += dzu * wrow[j];
        }
        std::swap(dh, dh_prev);
      }
    }
  }

  result.loss = loss_acc / batch;
  return result;
}

namespace {

/// Everything the perturbation-local loss evaluation needs, computed once.
template <typename T>
struct FdContext {
  const NetTensors<T>* net;
  Activations<T> act;
  std::span<const T> states;
  std::span<const int> actions;
  std::span<const T> targets;
  int batch;
  std::vector<double> adv_colsum;  // per hidden unit: sum over actions of adv_weight[a][u]

  double base_loss() const {
    double acc = 0.0;
    const int n_actions = net->action_dim();
    for (int i = 0; i < batch; ++i) {
      const double r = static_cast<double>(act.q[static_cast<std::size_t>(i) * n_actions +
                                                 actions[i]]) -
                       static_cast<double>(targets[i]);
      acc += r * r;
    }
    return acc / batch;
  }
};

/// Q(s, selected) recomputed from a full replacement h3 vector.
template <typename T>
double q_sel_from_h3(const NetTensors<T>& net, const T* h3, int sel) {
  const int hidden = kHiddenWidth;
  const int n_actions = net.action_dim();
  if (net.arch == Arch::D3QN) {
    double v = net.value_bias[0];
    for (int j = 0; j < hidden; ++j) v += static_cast<double>(net.value_weight[j]) * h3[j];
    double mean = 0.0;
    double a_sel = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      const T* row = net.adv_weight.data() + static_cast<std::size_t>(a) * hidden;
      double acc = net.adv_bias[a];
      for (int j = 0; j < hidden; ++j) acc += static_cast<double>(row[j]) * h3[j];
      mean += acc;
      if (a == sel) a_sel = acc;
    }
    mean /= n_actions;
    return v + (a_sel - mean);
  }
  const T* row = net.out_weight.data() + static_cast<std::size_t>(sel) * hidden;
  double acc = net.out_bias[sel];
  for (int j = 0; j < hidden; ++j) acc += static_cast<double>(row[j]) * h3[j];
  return acc;
}

/// Loss after adding `delta` to one scalar of one hidden-layer tensor.
/// Reuses the cached unperturbed prefix: only computations downstream of the
/// touched unit are redone, which leaves the finite-difference quotient
/// mathematically identical to a full re-evaluation.
template <typename T>
double loss_layer_perturbed(const FdContext<T>& ctx, int layer, int kind, int unit, int col,
                            double delta) {
  const NetTensors<T>& net = *ctx.net;
  const int hidden = kHiddenWidth;
  const int in_dim = net.input_dim();
  const int n_actions = net.action_dim();

  std::vector<T> buf_a(hidden), buf_b(hidden), buf_c(hidden);
  double acc = 0.0;
  for (int i = 0; i < ctx.batch; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * hidden;
    const int sel = ctx.actions[i];
    const T* s = ctx.states.data() + static_cast<std::size_t>(i) * in_dim;
    const T* z_l = (layer == 0 ? ctx.act.z1 : layer == 1 ? ctx.act.z2 : ctx.act.z3).data() + off;
    const T* h_l = (layer == 0 ? ctx.act.h1 : layer == 1 ? ctx.act.h2 : ctx.act.h3).data() + off;
    const T* in_l = layer == 0 ? s : (layer == 1 ? ctx.act.h1 : ctx.act.h2).data() + off;

    // perturbed unit output at its own layer
    double z_u = z_l[unit];
    double slope_u = net.slope[layer][unit];
    if (kind == 0) z_u += delta * static_cast<double>(in_l[col]);  // weight
    if (kind == 1) z_u += delta;                                   // bias
    if (kind == 2) slope_u += delta;                               // prelu slope
    const double h_u = z_u >= 0.0 ? z_u : slope_u * z_u;
    const double dh_u = h_u - static_cast<double>(h_l[unit]);

    double q_sel;
    if (layer == 2) {
      if (net.arch == Arch::D3QN) {
        const double v = ctx.act.value[i] + static_cast<double>(net.value_weight[unit]) * dh_u;
        const T* adv = ctx.act.adv.data() + static_cast<std::size_t>(i) * n_actions;
        const double a_sel =
            adv[sel] +
            static_cast<double>(net.adv_weight[static_cast<std::size_t>(sel) * hidden + unit]) *
                dh_u;
        double mean = 0.0;
        for (int a = 0; a < n_actions; ++a) mean += static_cast<double>(adv[a]);
        mean = (mean + ctx.adv_colsum[unit] * dh_u) / n_actions;
        q_sel = v + (a_sel - mean);
      } else {
        q_sel = ctx.act.q[static_cast<std::size_t>(i) * n_actions + sel] +
                static_cast<double>(net.out_weight[static_cast<std::size_t>(sel) * hidden + unit]) *
                    dh_u;
      }
    } else {
      // propagate the single-unit change through the remaining layers
      const int next = layer + 1;
      const T* z_next = (next == 1 ? ctx.act.z2 : ctx.act.z3).data() + off;
      T* zbuf = buf_a.data();
      for (int v = 0; v < hidden; ++v)
        zbuf[v] = static_cast<T>(z_next[v] +
                                 net.weight[next][static_cast<std::size_t>(v) * hidden + unit] *
                                     static_cast<T>(dh_u));
      T* hbuf = buf_b.data();
      prelu_layer(zbuf, net.slope[next], hbuf, hidden);
      if (next == 2) {
        q_sel = q_sel_from_h3(net, hbuf, sel);
      } else {
        T* z3buf = buf_a.data();  // zbuf is no longer needed
        linear(net.weight[2], net.bias[2], hbuf, hidden, z3buf, hidden);
        T* h3buf = buf_c.data();
        prelu_layer(z3buf, net.slope[2], h3buf, hidden);
        q_sel = q_sel_from_h3(net, h3buf, sel);
      }
    }
    const double r = q_sel - static_cast<double>(ctx.targets[i]);
    acc += r * r;
  }
  return acc / ctx.batch;
}

/// Loss after adding `delta` to one scalar of a head tensor. O(1) per sample.
template <typename T>
double loss_head_perturbed(const FdContext<T>& ctx, int head_tensor, int row, int col,
                           double delta) {
  const NetTensors<T>& net = *ctx.net;
  const int hidden = kHiddenWidth;
  const int n_actions = net.action_dim();
  double acc = 0.0;
  for (int i = 0; i < ctx.batch; ++i) {
    const int sel = ctx.actions[i];
    const T* h3 = ctx.act.h3.data() + static_cast<std::size_t>(i) * hidden;
    double q_sel = ctx.act.q[static_cast<std::size_t>(i) * n_actions + sel];
    switch (head_tensor) {
      case 0:  // value.weight
        q_sel += delta * static_cast<double>(h3[col]);
        break;
      case 1:  // value.bias
        q_sel += delta;
        break;
      case 2:  // advantage.weight: shifts A[row] and therefore the mean
        q_sel += delta * static_cast<double>(h3[col]) *
                 ((row == sel ? 1.0 : 0.0) - 1.0 / n_actions);
        break;
      case 3:  // advantage.bias
        q_sel += delta * ((row == sel ? 1.0 : 0.0) - 1.0 / n_actions);
        break;
      case 4:  // output.weight
        if (row == sel) q_sel += delta * static_cast<double>(h3[col]);
        break;
      case 5:  // output.bias
        if (row == sel) q_sel += delta;
        break;
    }
    const double r = q_sel - static_cast<double>(ctx.targets[i]);
    acc += r * r;
  }
  return acc / ctx.batch;
}

}  // namespace

template <typename T>
NetTensors<T> finite_difference_grad(const NetTensors<T>& net, std::span<const T> states,
                                     std::span<const int> actions, std::span<const T> targets,
                                     int batch, T h) {
  if (!(h > T(0))) throw std::invalid_argument("finite_difference_grad: h must be positive");

  FdContext<T> ctx{&net, forward_cached(net, states, batch), states, actions, targets, batch, {}};
  if (net.arch == Arch::D3QN) {
    ctx.adv_colsum.assign(kHiddenWidth, 0.0);
    for (int a = 0; a < net.action_dim(); ++a) {
      const T* row = net.adv_weight.data() + static_cast<std::size_t>(a) * kHiddenWidth;
      for (int j = 0; j < kHiddenWidth; ++j) ctx.adv_colsum[j] += static_cast<double>(row[j]);
    }
  }

  NetTensors<T> grads = zeros_like(net);
  auto refs = tensor_list(grads);
  const double hd = static_cast<double>(h);

  for (std::size_t t = 0; t < refs.size(); ++t) {
    auto& ref = refs[t];
    const bool is_hidden_layer = t < 9;
    for (std::size_t idx = 0; idx < ref.data->size(); ++idx) {
      double plus, minus;
      if (is_hidden_layer) {
        const int layer = static_cast<int>(t / 3);
        const int kind = static_cast<int>(t % 3);  // weight / bias / slope
        const int cols = ref.cols == 0 ? 1 : ref.cols;
        const int unit = static_cast<int>(idx) / cols;
        const int col = static_cast<int>(idx) % cols;
        plus = loss_layer_perturbed(ctx, layer, kind, unit, col, hd);
        minus = loss_layer_perturbed(ctx, layer, kind, unit, col, -hd);
      } else {
        int head;
        if (net.arch == Arch::D3QN)
          head = static_cast<int>(t - 9);  // value.w, value.b, adv.w, adv.b
        else
          head = static_cast<int>(t - 9) + 4;  // out.w, out.b
        const int cols = ref.cols == 0 ? 1 : ref.cols;
        const int row = static_cast<int>(idx) / cols;
        const int col = static_cast<int>(idx) % cols;
        plus = loss_head_perturbed(ctx, head, row, col, hd);
        minus = loss_head_perturbed(ctx, head, row, col, -hd);
      }
      (*ref.data)[idx] = static_cast<T>((plus - minus) / (2.0 * hd));
    }
  }
  return grads;
}

template <typename T>
double clip_global_norm(NetTensors<T>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  double sq = 0.0;
  for (const auto& ref : tensor_list(std::as_const(grads)))
    for (const T g : *ref.data) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& ref : tensor_list(grads))
      for (auto& g : *ref.data) g = static_cast<T>(static_cast<double>(g) * scale);
  }
  return norm;
}

template <typename T>
OptState<T> init_opt_state(const NetTensors<T>& net) {
  OptState<T> opt;
  opt.m = zeros_like(net);
  opt.v = zeros_like(net);
  opt.step = 0;
  opt.learning_rate = kInitialLearningRate;
  return opt;
}

template <typename T>
void adam_step(NetTensors<T>& params, const NetTensors<T>& grads, OptState<T>& opt,
               double weight_decay) {
  auto p_refs = tensor_list(params);
  auto g_refs = tensor_list(grads);
  auto m_refs = tensor_list(opt.m);
  auto v_refs = tensor_list(opt.v);
  if (p_refs.size() != g_refs.size())
    throw std::invalid_argument("adam_step: gradient layout does not match parameters");

  opt.step += 1;
  const double corr1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.step));
  const double corr2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.step));
  const double lr = opt.learning_rate;

  for (std::size_t t = 0; t < p_refs.size(); ++t) {
    auto& pv = *p_refs[t].data;
    const auto& gv = *g_refs[t].data;
    auto& mv = *m_refs[t].data;
    auto& vv = *v_refs[t].data;
    if (pv.size() != gv.size())
      throw std::invalid_argument("adam_step: tensor '" + p_refs[t].name + "' shape mismatch");
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double g = static_cast<double>(gv[i]) + weight_decay * static_cast<double>(pv[i]);
      const double m = kAdamBeta1 * static_cast<double>(mv[i]) + (1.0 - kAdamBeta1) * g;
      const double v = kAdamBeta2 * static_cast<double>(vv[i]) + (1.0 - kAdamBeta2) * g * g;
      mv[i] = static_cast<T>(m);
      vv[i] = static_cast<T>(v);
      const double m_hat = m / corr1;
      const double v_hat = v / corr2;
      pv[i] = static_cast<T>(static_cast<double>(pv[i]) -
                             lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon));
    }
  }
}

double lr_at(long long epoch) {
  if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
  const auto decays = static_cast<double>(epoch / kLrDecayEpochs);
  const double lr = kInitialLearningRate * std::pow(kLrDecayFactor, decays);
  return std::max(kMinLearningRate, lr);
}

// explicit instantiations: float for training, double for gradient checks
template struct NetTensors<float>;
template struct NetTensors<double>;

template std::vector<TensorRef<float>> tensor_list(NetTensors<float>&);
template std::vector<TensorRef<double>> tensor_list(NetTensors<double>&);
template std::vector<ConstTensorRef<float>> tensor_list(const NetTensors<float>&);
template std::vector<ConstTensorRef<double>> tensor_list(const NetTensors<double>&);

template NetTensors<float> zeros_like(const NetTensors<float>&);
template NetTensors<double> zeros_like(const NetTensors<double>&);

template NetTensors<double> convert<double, float>(const NetTensors<float>&);
template NetTensors<float> convert<float, double>(const NetTensors<double>&);

template std::vector<float> forward(const NetTensors<float>&, std::span<const float>, int);
template std::vector<double> forward(const NetTensors<double>&, std::span<const double>, int);
template Activations<float> forward_cached(const NetTensors<float>&, std::span<const float>, int);
template Activations<double> forward_cached(const NetTensors<double>&, std::span<const double>,
                                            int);

template LossGrads<float> td_loss_and_grads(const NetTensors<float>&, std::span<const float>,
                                            std::span<const int>, std::span<const float>, int);
template LossGrads<double> td_loss_and_grads(const NetTensors<double>&, std::span<const double>,
                                             std::span<const int>, std::span<const double>, int);

template NetTensors<float> finite_difference_grad(const NetTensors<float>&, std::span<const float>,
                                                  std::span<const int>, std::span<const float>,
                                                  int, float);
template NetTensors<double> finite_difference_grad(const NetTensors<double>&,
                                                   std::span<const double>, std::span<const int>,
                                                   std::span<const double>, int, double);

template double clip_global_norm(NetTensors<float>&, double);
template double clip_global_norm(NetTensors<double>&, double);

template OptState<float> init_opt_state(const NetTensors<float>&);
template OptState<double> init_opt_state(const NetTensors<double>&);

template void adam_step(NetTensors<float>&, const NetTensors<float>&, OptState<float>&, double);
template void adam_step(NetTensors<double>&, const NetTensors<double>&, OptState<double>&, double);

}  // namespace seqsel
