// SPDX-License-Identifier: Apache-2.0
#include "dancecls/classifier_net.hpp"

#include <cmath>
#include <random>

#include "dancecls/errors.hpp"

namespace dancecls::nn {

template <typename S>
ClassifierParams<S> ClassifierParams<S>::zeros(const NetworkShape& shape) {
  ClassifierParams p;
  p.shape = shape;
  p.lstm = LstmParams<S>::zeros(shape.input_dim, shape.hidden_dim, shape.full_peephole);
  p.dense1 = DenseParams<S>::zeros(shape.hidden_dim, shape.dense1);
  p.bn1 = BatchNormParams<S>::identity(shape.dense1);
  p.dense2 = DenseParams<S>::zeros(shape.dense1, shape.dense2);
  p.bn2 = BatchNormParams<S>::identity(shape.dense2);
  p.output = DenseParams<S>::zeros(shape.dense2, shape.num_classes);
  return p;
}

template <typename S>
ParamList<S> ClassifierParams<S>::params() {
  ParamList<S> out;
  lstm.append_params(out, "lstm.");
  dense1.append_params(out, "dense1.");
  bn1.append_params(out, "bn1.");
  dense2.append_params(out, "dense2.");
  bn2.append_params(out, "bn2.");
  output.append_params(out, "output.");
  return out;
}

template <typename S>
ParamList<S> ClassifierParams<S>::state() {
  ParamList<S> out;
  bn1.append_state(out, "bn1.");
  bn2.append_state(out, "bn2.");
  return out;
}

template <typename S>
void initialize(ClassifierParams<S>& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto glorot = [&](Mat<S>& w, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = static_cast<S>(dist(rng));
  };

  params = ClassifierParams<S>::zeros(params.shape);
  const auto& sh = params.shape;
  auto& l = params.lstm;
  for (Mat<S>* w : {&l.w_xi, &l.w_xf, &l.w_xc, &l.w_xo}) glorot(*w, sh.input_dim, sh.hidden_dim);
  for (Mat<S>* w : {&l.w_hi, &l.w_hf, &l.w_hc, &l.w_ho}) glorot(*w, sh.hidden_dim, sh.hidden_dim);
  l.b_f.setOnes();
  glorot(params.dense1.weight, sh.hidden_dim, sh.dense1);
  glorot(params.dense2.weight, sh.dense1, sh.dense2);
  glorot(params.output.weight, sh.dense2, sh.num_classes);
}

template <typename S>
Mat<S> classifier_forward(const ClassifierParams<S>& params, std::span<const Mat<S>> inputs,
                          Mode mode, ClassifierCache<S>& cache) {
  if (inputs.empty()) throw ContractError("classifier_forward: empty sequence");
  if (inputs.front().rows() != params.shape.input_dim)
    throw ContractError("classifier_forward: input has " + std::to_string(inputs.front().rows()) +
                        " features, model expects " + std::to_string(params.shape.input_dim));
  const auto act = params.shape.activation;
  cache.valid = false;
  cache.mode = mode;
  cache.lstm = lstm_forward(inputs, params.lstm);
  cache.z1 = dense_forward(params.dense1, cache.lstm.final_hidden());
  cache.y1 = batchnorm_forward(params.bn1, cache.z1, mode, cache.bn1);
  cache.a1 = activate(act, cache.y1);
  cache.z2 = dense_forward(params.dense2, cache.a1);
  cache.y2 = batchnorm_forward(params.bn2, cache.z2, mode, cache.bn2);
  cache.a2 = activate(act, cache.y2);
  cache.logits = dense_forward(params.output, cache.a2);
  cache.probabilities = softmax(cache.logits);
  cache.valid = true;
  return cache.probabilities;
}

template <typename S>
ClassifierParams<S> classifier_backward(const ClassifierParams<S>& params,
                                        ClassifierCache<S>& cache, std::span<const int> labels) {
  if (!cache.valid) throw ContractError("classifier_backward: no forward pass cached");
  if (static_cast<Eigen::Index>(labels.size()) != cache.probabilities.cols())
    throw ContractError("classifier_backward: label count does not match cached batch");
  const auto act = params.shape.activation;
  auto g = ClassifierParams<S>::zeros(params.shape);
  // zeros() gives identity batch norm; gradients accumulate from zero.
  g.bn1.gamma.setZero();
  g.bn2.gamma.setZero();

  const Mat<S> d_logits = softmax_cross_entropy_grad(cache.probabilities, labels);
  const Mat<S> d_a2 = dense_backward(params.output, cache.a2, d_logits, g.output);
  const Mat<S> d_y2 = activate_backward(act, cache.a2, d_a2);
  const Mat<S> d_z2 = batchnorm_backward(params.bn2, cache.bn2, d_y2, g.bn2);
  const Mat<S> d_a1 = dense_backward(params.dense2, cache.a1, d_z2, g.dense2);
  const Mat<S> d_y1 = activate_backward(act, cache.a1, d_a1);
  const Mat<S> d_z1 = batchnorm_backward(params.bn1, cache.bn1, d_y1, g.bn1);
  const Mat<S> d_h = dense_backward(params.dense1, cache.lstm.final_hidden(), d_z1, g.dense1);
  g.lstm = lstm_backward(params.lstm, cache.lstm, d_h);

  cache.valid = false;
  return g;
}

template <typename S>
void update_running_statistics(ClassifierParams<S>& params, const ClassifierCache<S>& cache) {
  const auto n = cache.probabilities.cols();
  batchnorm_update_running(params.bn1, cache.bn1, n);
  batchnorm_update_running(params.bn2, cache.bn2, n);
}

#define DANCECLS_INSTANTIATE(S)                                                             \
  template struct ClassifierParams<S>;                                                      \
  template void initialize<S>(ClassifierParams<S>&, std::uint64_t);                         \
  template Mat<S> classifier_forward<S>(const ClassifierParams<S>&, std::span<const Mat<S>>, \
                                        Mode, ClassifierCache<S>&);                         \
  template ClassifierParams<S> classifier_backward<S>(                                      \
      const ClassifierParams<S>&, ClassifierCache<S>&, std::span<const int>);               \
  template void update_running_statistics<S>(ClassifierParams<S>&, const ClassifierCache<S>&);

DANCECLS_INSTANTIATE(float)
DANCECLS_INSTANTIATE(double)
DANCECLS_INSTANTIATE(long double)

#undef DANCECLS_INSTANTIATE

}  // namespace dancecls::nn
