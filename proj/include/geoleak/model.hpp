#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "geoleak/error.hpp"
#include "geoleak/pipeline.hpp"
#include "geoleak/rng.hpp"
#include "geoleak/spectral.hpp"

namespace geoleak {

// Architecture and optimization settings. N_G lists the hidden sizes of
// the stacked graph-convolutional LSTM layers.
struct ModelConfig {
  int n_ts = 4;
  int n_cnn = 4;
  int w_cnn = 4;
  std::vector<int> n_g = {20, 10, 30};
  int n_f = 2;
  int k = 3;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_f != kTargetDim)
      throw errors::invalid_parameter("N_F must be 2 (latitude, longitude)");
    if (n_ts < 1 || n_cnn < 1 || w_cnn < 1 || k < 1)
      throw errors::invalid_parameter("model sizes must be >= 1");
    if (w_cnn > n_ts)
      throw errors::invalid_parameter("w_CNN must not exceed N_TS");
    if (n_g.empty())
      throw errors::invalid_parameter("need at least one GConvLSTM layer");
    for (int h : n_g)
      if (h < 1) throw errors::invalid_parameter("hidden sizes must be >= 1");
    if (max_epochs < 0 || patience < 0)
      throw errors::invalid_parameter("epochs/patience must be >= 0");
  }
};

// Gates are stored fused, columns blocked as [input | forget | output | cell].
// w_x row-block k holds the weights applied to T_k(Ls) x.
struct GConvLstmLayer {
  Eigen::MatrixXd w_x;  // (K * in_dim, 4 * hidden)
  Eigen::MatrixXd w_h;  // (K * hidden, 4 * hidden)
  Eigen::MatrixXd b;    // (1, 4 * hidden)

  int hidden() const { return static_cast<int>(b.cols()) / 4; }
};

struct ModelParams {
  std::vector<Eigen::MatrixXd> conv_w;  // w_cnn entries of (F_in, n_cnn)
  std::vector<GConvLstmLayer> layers;
  Eigen::MatrixXd dense_w;  // (hidden_last, 2)
  Eigen::MatrixXd dense_b;  // (1, 2)

  template <typename F>
  void for_each_array(F&& f) {
    for (std::size_t w = 0; w < conv_w.size(); ++w)
      f("conv_w." + std::to_string(w), conv_w[w]);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string base = "layers." + std::to_string(l) + ".";
      f(base + "w_x", layers[l].w_x);
      f(base + "w_h", layers[l].w_h);
      f(base + "b", layers[l].b);
    }
    f("dense_w", dense_w);
    f("dense_b", dense_b);
  }

  template <typename F>
  void for_each_array(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_array(
        [&](const std::string& name, Eigen::MatrixXd& m) {
          f(name, static_cast<const Eigen::MatrixXd&>(m));
        });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_array([&](const std::string&, const Eigen::MatrixXd& m) {
      n += static_cast<std::size_t>(m.size());
    });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_array([&](const std::string&, const Eigen::MatrixXd& m) {
      ok = ok && m.allFinite();
    });
    return ok;
  }
};

using ModelGrads = ModelParams;

namespace detail {
inline Eigen::MatrixXd glorot_uniform(int rows, int cols, int fan_in,
                                      int fan_out, rng::Stream& stream) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      m(r, c) = (2.0 * stream.uniform01() - 1.0) * limit;
  return m;
}
}  // namespace detail

inline ModelParams zero_params(const ModelConfig& cfg, int f_in = kFeatureDim) {
  ModelParams p;
  p.conv_w.assign(cfg.w_cnn, Eigen::MatrixXd::Zero(f_in, cfg.n_cnn));
  int in_dim = cfg.n_cnn;
  for (int h : cfg.n_g) {
    GConvLstmLayer layer;
    layer.w_x = Eigen::MatrixXd::Zero(cfg.k * in_dim, 4 * h);
    layer.w_h = Eigen::MatrixXd::Zero(cfg.k * h, 4 * h);
    layer.b = Eigen::MatrixXd::Zero(1, 4 * h);
    p.layers.push_back(std::move(layer));
    in_dim = h;
  }
  p.dense_w = Eigen::MatrixXd::Zero(cfg.n_g.back(), kTargetDim);
  p.dense_b = Eigen::MatrixXd::Zero(1, kTargetDim);
  return p;
}

// Glorot-uniform weights, zero biases except the forget gate (1.0). Each
// array draws from its own derived stream, so initialization is stable
// regardless of construction order.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed,
                               int f_in = kFeatureDim) {
  cfg.validate();
  ModelParams p = zero_params(cfg, f_in);
  std::uint64_t array_index = 0;
  for (auto& w : p.conv_w) {
    auto stream = rng::Stream::of(seed, rng::kParamInit, array_index++);
    w = detail::glorot_uniform(f_in, cfg.n_cnn, cfg.w_cnn * f_in,
                               cfg.w_cnn * cfg.n_cnn, stream);
  }
  int in_dim = cfg.n_cnn;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const int h = cfg.n_g[l];
    auto sx = rng::Stream::of(seed, rng::kParamInit, array_index++);
    p.layers[l].w_x =
        detail::glorot_uniform(cfg.k * in_dim, 4 * h, cfg.k * in_dim, h, sx);
    auto sh = rng::Stream::of(seed, rng::kParamInit, array_index++);
    p.layers[l].w_h =
        detail::glorot_uniform(cfg.k * h, 4 * h, cfg.k * h, h, sh);
    p.layers[l].b.middleCols(h, h).setOnes();  // forget-gate bias
    in_dim = h;
  }
  auto sd = rng::Stream::of(seed, rng::kParamInit, array_index++);
  p.dense_w = detail::glorot_uniform(cfg.n_g.back(), kTargetDim,
                                     cfg.n_g.back(), kTargetDim, sd);
  return p;
}

namespace detail {
inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}
}  // namespace detail

// Per-node 1-D convolution along the time axis, SAME zero padding, no
// nonlinearity. filters[j] maps input features to output channels for tap j;
// tap j reads step t + j - (w-1)/2.
inline std::vector<Eigen::MatrixXd> conv1d_temporal_forward(
    const std::vector<Eigen::MatrixXd>& steps,
    const std::vector<Eigen::MatrixXd>& filters) {
  const int n_ts = static_cast<int>(steps.size());
  const int w = static_cast<int>(filters.size());
  if (n_ts == 0 || w == 0 || w > n_ts)
    throw errors::invalid_input("conv1d: need 1 <= w_CNN <= N_TS");
  for (const auto& s : steps) {
    if (s.rows() != steps[0].rows() || s.cols() != filters[0].rows())
      throw errors::invalid_input("conv1d: input/filter shape mismatch");
  }
  const int pad_left = (w - 1) / 2;
  std::vector<Eigen::MatrixXd> out(
      n_ts, Eigen::MatrixXd::Zero(steps[0].rows(), filters[0].cols()));
  for (int t = 0; t < n_ts; ++t) {
    for (int j = 0; j < w; ++j) {
      const int src = t + j - pad_left;
      if (src < 0 || src >= n_ts) continue;
      out[t].noalias() += steps[src] * filters[j];
    }
  }
  return out;
}

struct LstmStepTape {
  Eigen::MatrixXd x_cheb;  // (N, K * in_dim)
  Eigen::MatrixXd h_cheb;  // (N, K * hidden)
  Eigen::MatrixXd gates;   // activated, (N, 4 * hidden), blocks [i|f|o|g]
  Eigen::MatrixXd c_prev;  // (N, hidden)
  Eigen::MatrixXd c;       // (N, hidden)
  Eigen::MatrixXd tanh_c;  // (N, hidden)
  Eigen::MatrixXd h;       // (N, hidden)
};

namespace detail {

inline void gconv_lstm_step_impl(const Eigen::MatrixXd& x_t,
                                 const Eigen::MatrixXd& h_prev,
                                 const Eigen::MatrixXd& c_prev,
                                 const SpectralOperator& op,
                                 const GConvLstmLayer& params, int order,
                                 int layer_index, LstmStepTape& tape) {
  if (!x_t.allFinite()) {
    throw errors::numeric("non-finite input to GConvLSTM layer " +
                          std::to_string(layer_index));
  }
  const int h = params.hidden();
  tape.x_cheb = chebyshev_apply_concat(op, x_t, order);
  tape.h_cheb = chebyshev_apply_concat(op, h_prev, order);
  Eigen::MatrixXd z = tape.x_cheb * params.w_x + tape.h_cheb * params.w_h;
  z.rowwise() += params.b.row(0);

  tape.gates.resize(z.rows(), z.cols());
  tape.gates.leftCols(3 * h) = sigmoid(z.leftCols(3 * h));
  tape.gates.rightCols(h) = z.rightCols(h).array().tanh().matrix();

  const auto gate_i = tape.gates.middleCols(0 * h, h);
  const auto gate_f = tape.gates.middleCols(1 * h, h);
  const auto gate_o = tape.gates.middleCols(2 * h, h);
  const auto gate_g = tape.gates.middleCols(3 * h, h);

  tape.c_prev = c_prev;
  tape.c = (gate_f.array() * c_prev.array() + gate_i.array() * gate_g.array())
               .matrix();
  tape.tanh_c = tape.c.array().tanh().matrix();
  tape.h = (gate_o.array() * tape.tanh_c.array()).matrix();
}

}  // namespace detail

// One recurrent step: gates are sigmoid/tanh of graph convolutions of the
// step input and previous hidden state.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gconv_lstm_step(
    const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& h_prev,
    const Eigen::MatrixXd& c_prev, const SpectralOperator& op,
    const GConvLstmLayer& params, int order, int layer_index = 0) {
  LstmStepTape tape;
  detail::gconv_lstm_step_impl(x_t, h_prev, c_prev, op, params, order,
                               layer_index, tape);
  return {tape.h, tape.c};
}

struct ForwardTape {
  std::vector<Eigen::MatrixXd> input_steps;            // (N, F_in) per step
  std::vector<Eigen::MatrixXd> conv_pre;              // pre-ReLU
  std::vector<Eigen::MatrixXd> conv_out;              // post-ReLU
  std::vector<std::vector<LstmStepTape>> layer_steps;  // [layer][t]
  Eigen::MatrixXd last_h;
  Eigen::MatrixXd pred;  // (N, 2), sigmoid outputs
};

inline ForwardTape forward_with_tape(const FeatureTensor& x,
                                     const SpectralOperator& op,
                                     const ModelParams& params,
                                     const ModelConfig& cfg) {
  if (x.n_ts != cfg.n_ts || static_cast<int>(x.steps.size()) != cfg.n_ts)
    throw errors::invalid_input("forward: feature tensor has wrong N_TS");
  if (x.n_users != op.n())
    throw errors::invalid_input("forward: feature tensor user count != graph");
  for (const auto& s : x.steps)
    if (s.cols() != kFeatureDim)
      throw errors::invalid_input("forward: feature dim must be 3");

  ForwardTape tape;
  tape.input_steps = x.steps;
  tape.conv_pre = conv1d_temporal_forward(x.steps, params.conv_w);
  tape.conv_out.reserve(cfg.n_ts);
  for (const auto& pre : tape.conv_pre)
    tape.conv_out.push_back(pre.cwiseMax(0.0));

  const int n = x.n_users;
  tape.layer_steps.resize(params.layers.size());
  // full hidden sequences pass between layers
  auto input_at = [&](std::size_t l, int t) -> const Eigen::MatrixXd& {
    return l == 0 ? tape.conv_out[t] : tape.layer_steps[l - 1][t].h;
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const int h = params.layers[l].hidden();
    Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(n, h);
    Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(n, h);
    auto& steps = tape.layer_steps[l];
    steps.resize(cfg.n_ts);
    for (int t = 0; t < cfg.n_ts; ++t) {
      detail::gconv_lstm_step_impl(input_at(l, t), h_prev, c_prev, op,
                                   params.layers[l], cfg.k,
                                   static_cast<int>(l), steps[t]);
      h_prev = steps[t].h;
      c_prev = steps[t].c;
    }
    if (l + 1 == params.layers.size()) tape.last_h = steps[cfg.n_ts - 1].h;
  }

  Eigen::MatrixXd z = tape.last_h * params.dense_w;
  z.rowwise() += params.dense_b.row(0);
  tape.pred = detail::sigmoid(z);
  return tape;
}

inline Eigen::MatrixXd forward(const FeatureTensor& x, const SpectralOperator& op,
                               const ModelParams& params, const ModelConfig& cfg) {
  return forward_with_tape(x, op, params, cfg).pred;
}

// Mean squared error over the masked users and both coordinates.
inline double masked_mse(const Eigen::MatrixXd& pred, const TargetMatrix& target,
                         const std::vector<int>& mask) {
  if (mask.empty()) return 0.0;
  double acc = 0.0;
  for (int u : mask) {
    const double dlat = pred(u, 0) - target.values(u, 0);
    const double dlon = pred(u, 1) - target.values(u, 1);
    acc += dlat * dlat + dlon * dlon;
  }
  return acc / (2.0 * static_cast<double>(mask.size()));
}

inline Eigen::MatrixXd masked_mse_grad(const Eigen::MatrixXd& pred,
                                       const TargetMatrix& target,
                                       const std::vector<int>& mask) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(pred.rows(), pred.cols());
  if (mask.empty()) return g;
  const double scale = 1.0 / static_cast<double>(mask.size());
  for (int u : mask) {
    g(u, 0) = (pred(u, 0) - target.values(u, 0)) * scale;
    g(u, 1) = (pred(u, 1) - target.values(u, 1)) * scale;
  }
  return g;
}

// Exact reverse-mode gradients of the recorded forward pass with respect
// to every parameter, given dLoss/dPred. Accumulates into grads.
inline void backward_accumulate(const ForwardTape& tape,
                                const Eigen::MatrixXd& dpred,
                                const SpectralOperator& op,
                                const ModelParams& params,
                                const ModelConfig& cfg, ModelGrads& grads) {
  const int n_ts = cfg.n_ts;
  const int n = static_cast<int>(dpred.rows());

  // dense + sigmoid head
  Eigen::MatrixXd dz_dense =
      (dpred.array() * tape.pred.array() * (1.0 - tape.pred.array())).matrix();
  grads.dense_w.noalias() += tape.last_h.transpose() * dz_dense;
  grads.dense_b.row(0) += dz_dense.colwise().sum();

  // gradient w.r.t. each layer's full hidden sequence
  std::vector<Eigen::MatrixXd> dh_seq(
      n_ts, Eigen::MatrixXd::Zero(n, params.layers.back().hidden()));
  dh_seq[n_ts - 1] = dz_dense * params.dense_w.transpose();

  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = params.layers[l];
    const auto& steps = tape.layer_steps[l];
    const int h = layer.hidden();
    const int in_dim = static_cast<int>(layer.w_x.rows()) / cfg.k;

    std::vector<Eigen::MatrixXd> dx_seq(n_ts, Eigen::MatrixXd::Zero(n, in_dim));
    Eigen::MatrixXd dh_carry = Eigen::MatrixXd::Zero(n, h);
    Eigen::MatrixXd dc_carry = Eigen::MatrixXd::Zero(n, h);

    for (int t = n_ts - 1; t >= 0; --t) {
      const auto& st = steps[t];
      const auto gate_i = st.gates.middleCols(0 * h, h).array();
      const auto gate_f = st.gates.middleCols(1 * h, h).array();
      const auto gate_o = st.gates.middleCols(2 * h, h).array();
      const auto gate_g = st.gates.middleCols(3 * h, h).array();

      const Eigen::ArrayXXd dh = (dh_seq[t] + dh_carry).array();
      const Eigen::ArrayXXd dc =
          dc_carry.array() + dh * gate_o * (1.0 - st.tanh_c.array().square());

      Eigen::MatrixXd dz(n, 4 * h);
      dz.middleCols(0 * h, h) =
          (dc * gate_g * gate_i * (1.0 - gate_i)).matrix();
      dz.middleCols(1 * h, h) =
          (dc * st.c_prev.array() * gate_f * (1.0 - gate_f)).matrix();
      dz.middleCols(2 * h, h) =
          (dh * st.tanh_c.array() * gate_o * (1.0 - gate_o)).matrix();
      dz.middleCols(3 * h, h) = (dc * gate_i * (1.0 - gate_g.square())).matrix();

      grads.layers[l].w_x.noalias() += st.x_cheb.transpose() * dz;
      grads.layers[l].w_h.noalias() += st.h_cheb.transpose() * dz;
      grads.layers[l].b.row(0) += dz.colwise().sum();

      // d/dZ of GC(W, Z): T_k is symmetric, so push dz through the same
      // Chebyshev stack and contract with the transposed weight blocks.
      const Eigen::MatrixXd dz_cheb = chebyshev_apply_concat(op, dz, cfg.k);
      Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(n, in_dim);
      Eigen::MatrixXd dh_prev = Eigen::MatrixXd::Zero(n, h);
      for (int k = 0; k < cfg.k; ++k) {
        const auto dz_k = dz_cheb.middleCols(k * 4 * h, 4 * h);
        dx.noalias() += dz_k * layer.w_x.middleRows(k * in_dim, in_dim).transpose();
        dh_prev.noalias() += dz_k * layer.w_h.middleRows(k * h, h).transpose();
      }
      dx_seq[t] = std::move(dx);
      dh_carry = std::move(dh_prev);
      dc_carry = (dc * gate_f).matrix();
    }
    dh_seq = std::move(dx_seq);  // feeds the layer below (or the CNN)
  }

  // ReLU and temporal convolution
  const int pad_left = (cfg.w_cnn - 1) / 2;
  for (int t = 0; t < n_ts; ++t) {
    const Eigen::MatrixXd dpre =
        (dh_seq[t].array() * (tape.conv_pre[t].array() > 0.0).cast<double>())
            .matrix();
    for (int j = 0; j < cfg.w_cnn; ++j) {
      const int src = t + j - pad_left;
      if (src < 0 || src >= n_ts) continue;
      grads.conv_w[j].noalias() += tape.input_steps[src].transpose() * dpre;
    }
  }
}

inline ModelGrads backward(const ForwardTape& tape, const Eigen::MatrixXd& dpred,
                           const SpectralOperator& op, const ModelParams& params,
                           const ModelConfig& cfg) {
  ModelGrads grads = zero_params(cfg, static_cast<int>(tape.input_steps[0].cols()));
  backward_accumulate(tape, dpred, op, params, cfg, grads);
  return grads;
}

struct AdamState {
  ModelParams m;
  ModelParams v;
  long timestep = 0;
};

inline AdamState make_adam_state(const ModelConfig& cfg, int f_in = kFeatureDim) {
  return AdamState{zero_params(cfg, f_in), zero_params(cfg, f_in), 0};
}

// One Adam update with bias correction.
inline void adam_step(ModelParams& params, const ModelGrads& grads,
                      AdamState& state, const ModelConfig& cfg) {
  state.timestep += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.timestep));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.timestep));

  std::vector<Eigen::MatrixXd*> ps, gs, ms, vs;
  params.for_each_array([&](const std::string&, Eigen::MatrixXd& a) { ps.push_back(&a); });
  const_cast<ModelGrads&>(grads).for_each_array(
      [&](const std::string&, Eigen::MatrixXd& a) { gs.push_back(&a); });
  state.m.for_each_array([&](const std::string&, Eigen::MatrixXd& a) { ms.push_back(&a); });
  state.v.for_each_array([&](const std::string&, Eigen::MatrixXd& a) { vs.push_back(&a); });

  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = *ps[i];
    const auto& g = *gs[i];
    auto& m = *ms[i];
    auto& v = *vs[i];
    m = b1 * m + (1.0 - b1) * g;
    v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
    const Eigen::ArrayXXd m_hat = m.array() / bc1;
    const Eigen::ArrayXXd v_hat = v.array() / bc2;
    p.array() -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
  }
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ModelParams params;  // best validation loss, or final if validation empty
  std::vector<EpochLog> log;
  bool validation_empty = false;
  double best_val_loss = 0.0;
  int epochs_run = 0;
};

// Full-batch training: one accumulated gradient step per epoch, examples
// visited in fixed order. Losses are measured on the parameters entering
// the epoch, so the returned best-validation parameters are exactly the
// ones whose loss was logged.
inline TrainResult train(const std::vector<Example>& examples,
                         const SpectralOperator& op, const ModelConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<int>> train_masks, val_masks;
  std::size_t n_train_entries = 0, n_val_entries = 0;
  for (const auto& ex : examples) {
    train_masks.push_back(ex.users_with(SplitLabel::kTrain));
    val_masks.push_back(ex.users_with(SplitLabel::kValidation));
    n_train_entries += train_masks.back().size();
    n_val_entries += val_masks.back().size();
  }
  if (examples.empty() || n_train_entries == 0)
    throw errors::invalid_data("train: no TRAIN-assigned entries in any example");

  TrainResult result;
  result.validation_empty = n_val_entries == 0;
  result.params = init_params(cfg, cfg.seed);
  if (cfg.max_epochs == 0) return result;

  AdamState adam = make_adam_state(cfg);
  const double example_scale = 1.0 / static_cast<double>(examples.size());
  double best_val = std::numeric_limits<double>::infinity();
  ModelParams best_params = result.params;
  int epochs_since_improvement = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    ModelGrads grads = zero_params(cfg);
    double train_loss = 0.0, val_loss = 0.0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      ForwardTape tape = forward_with_tape(examples[i].features, op,
                                           result.params, cfg);
      train_loss += masked_mse(tape.pred, examples[i].target, train_masks[i]) *
                    example_scale;
      val_loss += masked_mse(tape.pred, examples[i].target, val_masks[i]) *
                  example_scale;
      if (!train_masks[i].empty()) {
        const Eigen::MatrixXd dpred =
            masked_mse_grad(tape.pred, examples[i].target, train_masks[i]) *
            example_scale;
        backward_accumulate(tape, dpred, op, result.params, cfg, grads);
      }
    }
    if (!std::isfinite(train_loss))
      throw errors::numeric("train: non-finite loss at epoch " +
                            std::to_string(epoch));
    result.log.push_back(EpochLog{epoch, train_loss, val_loss});
    result.epochs_run = epoch;

    if (!result.validation_empty) {
      if (val_loss < best_val) {
        best_val = val_loss;
        result.best_val_loss = val_loss;
        epochs_since_improvement = 0;
        best_params = result.params;
      } else {
        ++epochs_since_improvement;
        if (epochs_since_improvement > cfg.patience) break;
      }
    }
    adam_step(result.params, grads, adam, cfg);
  }

  if (!result.validation_empty) result.params = best_params;
  return result;
}

}  // namespace geoleak
