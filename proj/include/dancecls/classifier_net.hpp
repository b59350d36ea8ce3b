// SPDX-License-Identifier: Apache-2.0
//
// The full classifier graph and its exact gradient:
//
//   LSTM(D -> H), final hidden state
//   -> dense(H -> dense1) -> batch norm -> activation
//   -> dense(dense1 -> dense2) -> batch norm -> activation
//   -> dense(dense2 -> C) -> softmax
#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "dancecls/neural_core.hpp"

namespace dancecls::nn {

struct NetworkShape {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  Eigen::Index dense1 = 0;
  Eigen::Index dense2 = 0;
  Eigen::Index num_classes = 6;
  bool full_peephole = false;
  Activation activation = Activation::relu;
};

template <typename S>
struct ClassifierParams {
  NetworkShape shape;
  LstmParams<S> lstm;
  DenseParams<S> dense1;
  BatchNormParams<S> bn1;
  DenseParams<S> dense2;
  BatchNormParams<S> bn2;
  DenseParams<S> output;

  /// All-zero weights, identity batch norm.
  static ClassifierParams zeros(const NetworkShape& shape);

  /// Learnable tensors in a fixed order with dotted names ("lstm.w_xi", ...).
  ParamList<S> params();
  /// Batch-norm running statistics.
  ParamList<S> state();

  template <typename T>
  ClassifierParams<T> cast() const;
};

/// Glorot-uniform input/recurrent/dense weights; zero peepholes and biases
/// except the forget-gate bias, which starts at 1.
template <typename S>
void initialize(ClassifierParams<S>& params, std::uint64_t seed);

template <typename S>
struct ClassifierCache {
  bool valid = false;
  Mode mode = Mode::infer;
  LstmTrace<S> lstm;
  Mat<S> z1, a1, z2, a2;
  Mat<S> y1, y2;  // batch-norm outputs
  BatchNormCache<S> bn1, bn2;
  Mat<S> logits, probabilities;
};

/// inputs[t] is the D x B slice of time step t. Returns C x B probabilities.
template <typename S>
Mat<S> classifier_forward(const ClassifierParams<S>& params, std::span<const Mat<S>> inputs,
                          Mode mode, ClassifierCache<S>& cache);

/// Gradient of the mean cross-entropy of the cached forward pass. Consumes
/// the cache; a second call without a fresh forward throws ContractError.
template <typename S>
ClassifierParams<S> classifier_backward(const ClassifierParams<S>& params,
                                        ClassifierCache<S>& cache, std::span<const int> labels);

/// Running-statistic update for both batch-norm layers from a train-mode cache.
template <typename S>
void update_running_statistics(ClassifierParams<S>& params, const ClassifierCache<S>& cache);

// ---------------------------------------------------------------- casting

namespace detail {
template <typename T, typename S>
LstmParams<T> cast_lstm(const LstmParams<S>& p) {
  LstmParams<T> o;
  o.input_dim = p.input_dim;
  o.hidden_dim = p.hidden_dim;
  o.full_peephole = p.full_peephole;
  o.w_xi = p.w_xi.template cast<T>();
  o.w_xf = p.w_xf.template cast<T>();
  o.w_xc = p.w_xc.template cast<T>();
  o.w_xo = p.w_xo.template cast<T>();
  o.w_hi = p.w_hi.template cast<T>();
  o.w_hf = p.w_hf.template cast<T>();
  o.w_hc = p.w_hc.template cast<T>();
  o.w_ho = p.w_ho.template cast<T>();
  o.w_ci = p.w_ci.template cast<T>();
  o.w_cf = p.w_cf.template cast<T>();
  o.w_co = p.w_co.template cast<T>();
  o.b_i = p.b_i.template cast<T>();
  o.b_f = p.b_f.template cast<T>();
  o.b_c = p.b_c.template cast<T>();
  o.b_o = p.b_o.template cast<T>();
  return o;
}

template <typename T, typename S>
DenseParams<T> cast_dense(const DenseParams<S>& p) {
  return {p.weight.template cast<T>(), p.bias.template cast<T>()};
}

template <typename T, typename S>
BatchNormParams<T> cast_bn(const BatchNormParams<S>& p) {
  BatchNormParams<T> o;
  o.gamma = p.gamma.template cast<T>();
  o.beta = p.beta.template cast<T>();
  o.running_mean = p.running_mean.template cast<T>();
  o.running_var = p.running_var.template cast<T>();
  o.momentum = static_cast<T>(p.momentum);
  o.epsilon = static_cast<T>(p.epsilon);
  return o;
}
}  // namespace detail

template <typename S>
template <typename T>
ClassifierParams<T> ClassifierParams<S>::cast() const {
  ClassifierParams<T> o;
  o.shape = shape;
  o.lstm = detail::cast_lstm<T>(lstm);
  o.dense1 = detail::cast_dense<T>(dense1);
  o.bn1 = detail::cast_bn<T>(bn1);
  o.dense2 = detail::cast_dense<T>(dense2);
  o.bn2 = detail::cast_bn<T>(bn2);
  o.output = detail::cast_dense<T>(output);
  return o;
}

}  // namespace dancecls::nn
