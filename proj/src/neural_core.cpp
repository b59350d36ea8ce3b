// SPDX-License-Identifier: Apache-2.0
#include "dancecls/neural_core.hpp"

#include <algorithm>
#include <cmath>

#include "dancecls/errors.hpp"

namespace dancecls::nn {

namespace {

template <typename S>
Mat<S> sigmoid_of(const Mat<S>& z) {
  return z.unaryExpr([](S v) { return sigmoid(v); });
}

// W_c (.) c for elementwise peepholes, W_c * c for full matrices.
template <typename S>
Mat<S> peephole(const Mat<S>& w, const Mat<S>& c, bool full) {
  if (full) return w * c;
  return w.col(0).asDiagonal() * c;
}

// Adds the gradient of peephole(w, c) into dw given dL/d(peephole output).
template <typename S>
void peephole_grad(const Mat<S>& d_out, const Mat<S>& c, bool full, Mat<S>& dw) {
  if (full) {
    dw.noalias() += d_out * c.transpose();
  } else {
    dw.col(0) += d_out.cwiseProduct(c).rowwise().sum();
  }
}

// Transposed peephole applied to an upstream gradient.
template <typename S>
Mat<S> peephole_back(const Mat<S>& w, const Mat<S>& d_out, bool full) {
  if (full) return w.transpose() * d_out;
  return w.col(0).asDiagonal() * d_out;
}

template <typename S>
void check_shape(const Mat<S>& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols)
    throw ContractError(std::string("LSTM parameter ") + name + " has shape " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace

template <typename S>
S sigmoid(S x) {
  // Split on sign so exp never overflows.
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

// ---------------------------------------------------------------- LSTM

template <typename S>
LstmParams<S> LstmParams<S>::zeros(Eigen::Index input_dim, Eigen::Index hidden_dim,
                                   bool full_peephole) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.full_peephole = full_peephole;
  for (Mat<S>* w : {&p.w_xi, &p.w_xf, &p.w_xc, &p.w_xo}) *w = Mat<S>::Zero(hidden_dim, input_dim);
  for (Mat<S>* w : {&p.w_hi, &p.w_hf, &p.w_hc, &p.w_ho}) *w = Mat<S>::Zero(hidden_dim, hidden_dim);
  const Eigen::Index peep_cols = full_peephole ? hidden_dim : 1;
  for (Mat<S>* w : {&p.w_ci, &p.w_cf, &p.w_co}) *w = Mat<S>::Zero(hidden_dim, peep_cols);
  for (Vec<S>* b : {&p.b_i, &p.b_f, &p.b_c, &p.b_o}) *b = Vec<S>::Zero(hidden_dim);
  return p;
}

template <typename S>
void LstmParams<S>::append_params(ParamList<S>& out, const std::string& prefix) {
  append_view(out, prefix + "w_xi", w_xi);
  append_view(out, prefix + "w_xf", w_xf);
  append_view(out, prefix + "w_xc", w_xc);
  append_view(out, prefix + "w_xo", w_xo);
  append_view(out, prefix + "w_hi", w_hi);
  append_view(out, prefix + "w_hf", w_hf);
  append_view(out, prefix + "w_hc", w_hc);
  append_view(out, prefix + "w_ho", w_ho);
  append_view(out, prefix + "w_ci", w_ci);
  append_view(out, prefix + "w_cf", w_cf);
  append_view(out, prefix + "w_co", w_co);
  append_view(out, prefix + "b_i", b_i);
  append_view(out, prefix + "b_f", b_f);
  append_view(out, prefix + "b_c", b_c);
  append_view(out, prefix + "b_o", b_o);
}

template <typename S>
void LstmParams<S>::check_shapes() const {
  const auto h = hidden_dim, d = input_dim;
  check_shape(w_xi, h, d, "w_xi");
  check_shape(w_xf, h, d, "w_xf");
  check_shape(w_xc, h, d, "w_xc");
  check_shape(w_xo, h, d, "w_xo");
  check_shape(w_hi, h, h, "w_hi");
  check_shape(w_hf, h, h, "w_hf");
  check_shape(w_hc, h, h, "w_hc");
  check_shape(w_ho, h, h, "w_ho");
  const Eigen::Index pc = full_peephole ? h : 1;
  check_shape(w_ci, h, pc, "w_ci");
  check_shape(w_cf, h, pc, "w_cf");
  check_shape(w_co, h, pc, "w_co");
  for (const Vec<S>* b : {&b_i, &b_f, &b_c, &b_o})
    if (b->size() != h) throw ContractError("LSTM bias has wrong length");
}

template <typename S>
LstmStep<S> lstm_cell_forward(const Mat<S>& x, const Mat<S>& h_prev, const Mat<S>& c_prev,
                              const LstmParams<S>& p) {
  const auto H = p.hidden_dim;
  if (x.rows() != p.input_dim || h_prev.rows() != H || c_prev.rows() != H ||
      h_prev.cols() != x.cols() || c_prev.cols() != x.cols())
    throw ContractError("lstm_cell_forward: input/state shapes do not match parameters");

  const bool full = p.full_peephole;
  LstmStep<S> s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;

  Mat<S> a_i = p.w_xi * x + p.w_hi * h_prev + peephole(p.w_ci, c_prev, full);
  a_i.colwise() += p.b_i;
  Mat<S> a_f = p.w_xf * x + p.w_hf * h_prev + peephole(p.w_cf, c_prev, full);
  a_f.colwise() += p.b_f;
  Mat<S> a_g = p.w_xc * x + p.w_hc * h_prev;
  a_g.colwise() += p.b_c;

  s.i = sigmoid_of(a_i);
  s.f = sigmoid_of(a_f);
  s.g = a_g.array().tanh().matrix();
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);

  // Output-gate peephole reads the freshly updated cell.
  Mat<S> a_o = p.w_xo * x + p.w_ho * h_prev + peephole(p.w_co, s.c, full);
  a_o.colwise() += p.b_o;
  s.o = sigmoid_of(a_o);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
  return s;
}

template <typename S>
LstmTrace<S> lstm_forward(std::span<const Mat<S>> inputs, const LstmParams<S>& p) {
  if (inputs.empty()) throw ContractError("lstm_forward needs at least one time step");
  const auto B = inputs.front().cols();
  LstmTrace<S> trace;
  trace.steps.reserve(inputs.size());
  Mat<S> h = Mat<S>::Zero(p.hidden_dim, B);
  Mat<S> c = Mat<S>::Zero(p.hidden_dim, B);
  for (const auto& x : inputs) {
    trace.steps.push_back(lstm_cell_forward(x, h, c, p));
    h = trace.steps.back().h;
    c = trace.steps.back().c;
  }
  return trace;
}

template <typename S>
LstmParams<S> lstm_backward(const LstmParams<S>& p, const LstmTrace<S>& trace,
                            const Mat<S>& d_final_hidden) {
  if (trace.steps.empty()) throw ContractError("lstm_backward: empty trace");
  const bool full = p.full_peephole;
  auto g = LstmParams<S>::zeros(p.input_dim, p.hidden_dim, full);

  Mat<S> dh = d_final_hidden;
  Mat<S> dc_next = Mat<S>::Zero(dh.rows(), dh.cols());
  for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
    const auto& s = *it;
    const auto ones = Mat<S>::Ones(s.o.rows(), s.o.cols());

    const Mat<S> da_o = dh.cwiseProduct(s.tanh_c).cwiseProduct(s.o).cwiseProduct(ones - s.o);
    Mat<S> dc = dc_next + dh.cwiseProduct(s.o).cwiseProduct(ones - s.tanh_c.cwiseAbs2());
    dc += peephole_back(p.w_co, da_o, full);

    const Mat<S> da_i = dc.cwiseProduct(s.g).cwiseProduct(s.i).cwiseProduct(ones - s.i);
    const Mat<S> da_f = dc.cwiseProduct(s.c_prev).cwiseProduct(s.f).cwiseProduct(ones - s.f);
    const Mat<S> da_g = dc.cwiseProduct(s.i).cwiseProduct(ones - s.g.cwiseAbs2());

    g.w_xi.noalias() += da_i * s.x.transpose();
    g.w_xf.noalias() += da_f * s.x.transpose();
    g.w_xc.noalias() += da_g * s.x.transpose();
    g.w_xo.noalias() += da_o * s.x.transpose();
    g.w_hi.noalias() += da_i * s.h_prev.transpose();
    g.w_hf.noalias() += da_f * s.h_prev.transpose();
    g.w_hc.noalias() += da_g * s.h_prev.transpose();
    g.w_ho.noalias() += da_o * s.h_prev.transpose();
    peephole_grad(da_i, s.c_prev, full, g.w_ci);
    peephole_grad(da_f, s.c_prev, full, g.w_cf);
    peephole_grad(da_o, s.c, full, g.w_co);
    g.b_i += da_i.rowwise().sum();
    g.b_f += da_f.rowwise().sum();
    g.b_c += da_g.rowwise().sum();
    g.b_o += da_o.rowwise().sum();

    dc_next = dc.cwiseProduct(s.f) + peephole_back(p.w_ci, da_i, full) +
              peephole_back(p.w_cf, da_f, full);
    dh = p.w_hi.transpose() * da_i + p.w_hf.transpose() * da_f + p.w_hc.transpose() * da_g +
         p.w_ho.transpose() * da_o;
  }
  return g;
}

// ---------------------------------------------------------------- dense

template <typename S>
DenseParams<S> DenseParams<S>::zeros(Eigen::Index in, Eigen::Index out) {
  return {Mat<S>::Zero(out, in), Vec<S>::Zero(out)};
}

template <typename S>
void DenseParams<S>::append_params(ParamList<S>& out, const std::string& prefix) {
  append_view(out, prefix + "weight", weight);
  append_view(out, prefix + "bias", bias);
}

template <typename S>
Mat<S> dense_forward(const DenseParams<S>& p, const Mat<S>& x) {
  if (x.rows() != p.weight.cols())
    throw ContractError("dense_forward: input has " + std::to_string(x.rows()) +
                        " rows, layer expects " + std::to_string(p.weight.cols()));
  Mat<S> y = p.weight * x;
  y.colwise() += p.bias;
  return y;
}

template <typename S>
Mat<S> dense_backward(const DenseParams<S>& p, const Mat<S>& x, const Mat<S>& dy,
                      DenseParams<S>& grad) {
  grad.weight.noalias() += dy * x.transpose();
  grad.bias += dy.rowwise().sum();
  return p.weight.transpose() * dy;
}

// ---------------------------------------------------------------- batch norm

template <typename S>
BatchNormParams<S> BatchNormParams<S>::identity(Eigen::Index features) {
  BatchNormParams p;
  p.gamma = Vec<S>::Ones(features);
  p.beta = Vec<S>::Zero(features);
  p.running_mean = Vec<S>::Zero(features);
  p.running_var = Vec<S>::Ones(features);
  return p;
}

template <typename S>
void BatchNormParams<S>::append_params(ParamList<S>& out, const std::string& prefix) {
  append_view(out, prefix + "gamma", gamma);
  append_view(out, prefix + "beta", beta);
}

template <typename S>
void BatchNormParams<S>::append_state(ParamList<S>& out, const std::string& prefix) {
  append_view(out, prefix + "running_mean", running_mean);
  append_view(out, prefix + "running_var", running_var);
}

template <typename S>
Mat<S> batchnorm_forward(const BatchNormParams<S>& p, const Mat<S>& x, Mode mode,
                         BatchNormCache<S>& cache) {
  if (x.rows() != p.gamma.size()) throw ContractError("batchnorm_forward: feature count mismatch");
  cache.mode = mode;
  if (mode == Mode::train) {
    const auto n = x.cols();
    if (n < 2) throw ContractError("batch normalisation in train mode needs a batch of >= 2");
    cache.mean = x.rowwise().mean();
    const Mat<S> centred = x.colwise() - cache.mean;
    cache.var = centred.cwiseAbs2().rowwise().mean();
    cache.inv_std = (cache.var.array() + p.epsilon).rsqrt().matrix();
    cache.x_hat = cache.inv_std.asDiagonal() * centred;
  } else {
    cache.mean = p.running_mean;
    cache.var = p.running_var;
    cache.inv_std = (p.running_var.array() + p.epsilon).rsqrt().matrix();
    cache.x_hat = cache.inv_std.asDiagonal() * (x.colwise() - p.running_mean);
  }
  Mat<S> y = p.gamma.asDiagonal() * cache.x_hat;
  y.colwise() += p.beta;
  return y;
}

template <typename S>
void batchnorm_update_running(BatchNormParams<S>& p, const BatchNormCache<S>& cache,
                              Eigen::Index batch_size) {
  if (cache.mode != Mode::train) throw ContractError("running statistics need a train-mode cache");
  const S n = static_cast<S>(batch_size);
  const S m = p.momentum;
  p.running_mean = m * p.running_mean + (S(1) - m) * cache.mean;
  p.running_var = m * p.running_var + (S(1) - m) * (cache.var * (n / (n - S(1))));
}

template <typename S>
Mat<S> batchnorm_backward(const BatchNormParams<S>& p, const BatchNormCache<S>& cache,
                          const Mat<S>& dy, BatchNormParams<S>& grad) {
  grad.gamma += dy.cwiseProduct(cache.x_hat).rowwise().sum();
  grad.beta += dy.rowwise().sum();
  const Mat<S> dx_hat = p.gamma.asDiagonal() * dy;
  if (cache.mode == Mode::infer) return cache.inv_std.asDiagonal() * dx_hat;

  const S n = static_cast<S>(dy.cols());
  const Vec<S> sum_dx_hat = dx_hat.rowwise().sum();
  const Vec<S> sum_dx_hat_xhat = dx_hat.cwiseProduct(cache.x_hat).rowwise().sum();
  Mat<S> dx = n * dx_hat;
  dx.colwise() -= sum_dx_hat;
  dx -= sum_dx_hat_xhat.asDiagonal() * cache.x_hat;
  return (cache.inv_std / n).asDiagonal() * dx;
}

// ---------------------------------------------------------------- activations

template <typename S>
Mat<S> activate(Activation a, const Mat<S>& z) {
  switch (a) {
    case Activation::relu:
      return z.cwiseMax(S(0));
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::linear:
      break;
  }
  return z;
}

template <typename S>
Mat<S> activate_backward(Activation a, const Mat<S>& y, const Mat<S>& dy) {
  switch (a) {
    case Activation::relu:
      return (y.array() > S(0)).select(dy, S(0));
    case Activation::tanh:
      return dy.cwiseProduct((Mat<S>::Ones(y.rows(), y.cols()) - y.cwiseAbs2()));
    case Activation::linear:
      break;
  }
  return dy;
}

// ---------------------------------------------------------------- output

template <typename S>
Mat<S> softmax(const Mat<S>& logits) {
  Mat<S> out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const S top = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - top).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

template <typename S>
S cross_entropy(const Mat<S>& probabilities, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != probabilities.cols())
    throw ContractError("cross_entropy: label count does not match batch size");
  if (labels.empty()) throw ContractError("cross_entropy: empty batch");
  S total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= probabilities.rows())
      throw ContractError("cross_entropy: label " + std::to_string(labels[i]) +
                          " outside [0, " + std::to_string(probabilities.rows()) + ")");
    const S p = probabilities(labels[i], static_cast<Eigen::Index>(i));
    total -= std::log(std::max(p, static_cast<S>(kProbabilityFloor)));
  }
  return total / static_cast<S>(labels.size());
}

template <typename S>
Mat<S> softmax_cross_entropy_grad(const Mat<S>& probabilities, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != probabilities.cols())
    throw ContractError("softmax_cross_entropy_grad: label count does not match batch size");
  Mat<S> d = probabilities;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= probabilities.rows())
      throw ContractError("softmax_cross_entropy_grad: label out of range");
    d(labels[i], static_cast<Eigen::Index>(i)) -= S(1);
  }
  return d / static_cast<S>(labels.size());
}

// ---------------------------------------------------------------- optimiser

template <typename S>
double Adam<S>::learning_rate_at(std::int64_t t) const {
  return config_.learning_rate / (1.0 + config_.decay * static_cast<double>(t));
}

template <typename S>
void Adam<S>::step(const ParamList<S>& params, const ParamList<S>& grads) {
  if (params.size() != grads.size()) throw ContractError("Adam: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Mat<S>::Zero(p.rows, p.cols));
      v_.push_back(Mat<S>::Zero(p.rows, p.cols));
    }
  }
  if (m_.size() != params.size()) throw ContractError("Adam: parameter set changed between steps");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].rows != grads[k].rows || params[k].cols != grads[k].cols ||
        m_[k].rows() != params[k].rows || m_[k].cols() != params[k].cols)
      throw ContractError("Adam: shape mismatch for " + params[k].name);
    if (!grads[k].map().allFinite())
      throw TrainingError("non-finite gradient for parameter " + params[k].name);
  }

  ++t_;
  const double lr = learning_rate_at(t_);
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const S b1 = static_cast<S>(config_.beta1);
  const S b2 = static_cast<S>(config_.beta2);
  const S step_size = static_cast<S>(lr / bc1);
  const S inv_sqrt_bc2 = static_cast<S>(1.0 / std::sqrt(bc2));
  const S eps = static_cast<S>(config_.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto g = grads[k].map();
    auto w = params[k].map();
    m_[k] = b1 * m_[k] + (S(1) - b1) * g;
    v_[k] = b2 * v_[k] + (S(1) - b2) * g.cwiseAbs2();
    // w -= lr * m_hat / (sqrt(v_hat) + eps)
    w.array() -= step_size * m_[k].array() / (v_[k].array().sqrt() * inv_sqrt_bc2 + eps);
  }
}

// ---------------------------------------------------------------- verification

template <typename S>
std::vector<Mat<S>> finite_difference_gradient(const std::function<S()>& loss,
                                               const ParamList<S>& params, S step) {
  std::vector<Mat<S>> out;
  for (const auto& p : params) {
    Mat<S> g(p.rows, p.cols);
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const S saved = p.data[k];
      p.data[k] = saved + step;
      const S up = loss();
      p.data[k] = saved - step;
      const S down = loss();
      p.data[k] = saved;
      g.data()[k] = (up - down) / (S(2) * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

#define DANCECLS_INSTANTIATE(S)                                                                 \
  template S sigmoid<S>(S);                                                                     \
  template struct LstmParams<S>;                                                                \
  template LstmStep<S> lstm_cell_forward<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&,        \
                                            const LstmParams<S>&);                              \
  template LstmTrace<S> lstm_forward<S>(std::span<const Mat<S>>, const LstmParams<S>&);         \
  template LstmParams<S> lstm_backward<S>(const LstmParams<S>&, const LstmTrace<S>&,            \
                                          const Mat<S>&);                                       \
  template struct DenseParams<S>;                                                               \
  template Mat<S> dense_forward<S>(const DenseParams<S>&, const Mat<S>&);                       \
  template Mat<S> dense_backward<S>(const DenseParams<S>&, const Mat<S>&, const Mat<S>&,        \
                                    DenseParams<S>&);                                           \
  template struct BatchNormParams<S>;                                                           \
  template Mat<S> batchnorm_forward<S>(const BatchNormParams<S>&, const Mat<S>&, Mode,          \
                                       BatchNormCache<S>&);                                     \
  template void batchnorm_update_running<S>(BatchNormParams<S>&, const BatchNormCache<S>&,      \
                                            Eigen::Index);                                      \
  template Mat<S> batchnorm_backward<S>(const BatchNormParams<S>&, const BatchNormCache<S>&,    \
                                        const Mat<S>&, BatchNormParams<S>&);                    \
  template Mat<S> activate<S>(Activation, const Mat<S>&);                                       \
  template Mat<S> activate_backward<S>(Activation, const Mat<S>&, const Mat<S>&);               \
  template Mat<S> softmax<S>(const Mat<S>&);                                                    \
  template S cross_entropy<S>(const Mat<S>&, std::span<const int>);                             \
  template Mat<S> softmax_cross_entropy_grad<S>(const Mat<S>&, std::span<const int>);           \
  template class Adam<S>;                                                                       \
  template std::vector<Mat<S>> finite_difference_gradient<S>(const std::function<S()>&,         \
                                                             const ParamList<S>&, S);

DANCECLS_INSTANTIATE(float)
DANCECLS_INSTANTIATE(double)
DANCECLS_INSTANTIATE(long double)

#undef DANCECLS_INSTANTIATE

}  // namespace dancecls::nn
