// SPDX-License-Identifier: Apache-2.0
//
// Dense numerical kernel: peephole LSTM, dense, batch normalisation, softmax,
// categorical cross-entropy, Adam and a central-difference gradient oracle.
//
// Batched tensors keep one sample per column: an LSTM input step is D x B,
// hidden state H x B, class scores C x B.
//
// Everything is templated on the scalar; float and double are instantiated.
// Training runs in float, gradient verification in double.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dancecls::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Non-owning handle on one named parameter tensor.
template <typename S>
struct ParamView {
  std::string name;
  S* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Mat<S>> map() const { return {data, rows, cols}; }
};

template <typename S>
using ParamList = std::vector<ParamView<S>>;

template <typename S, typename Tensor>
void append_view(ParamList<S>& out, std::string name, Tensor& t) {
  out.push_back({std::move(name), t.data(), t.rows(), t.cols()});
}

template <typename S>
S sigmoid(S x);

// ---------------------------------------------------------------- LSTM

/// i_t = sig(W_xi x_t + W_hi h_{t-1} + W_ci (.) c_{t-1} + b_i)
/// f_t = sig(W_xf x_t + W_hf h_{t-1} + W_cf (.) c_{t-1} + b_f)
/// c_t = f_t * c_{t-1} + i_t * tanh(W_xc x_t + W_hc h_{t-1} + b_c)
/// o_t = sig(W_xo x_t + W_ho h_{t-1} + W_co (.) c_t + b_o)
/// h_t = o_t * tanh(c_t)
///
/// Peephole weights are H x 1 (elementwise) by default, or H x H matrices
/// when full_peephole is set.
template <typename S>
struct LstmParams {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  bool full_peephole = false;

  Mat<S> w_xi, w_xf, w_xc, w_xo;
  Mat<S> w_hi, w_hf, w_hc, w_ho;
  Mat<S> w_ci, w_cf, w_co;
  Vec<S> b_i, b_f, b_c, b_o;

  static LstmParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim,
                          bool full_peephole = false);
  void append_params(ParamList<S>& out, const std::string& prefix);
  /// Throws ContractError on inconsistent shapes.
  void check_shapes() const;
};

template <typename S>
struct LstmStep {
  Mat<S> x, h_prev, c_prev;
  Mat<S> i, f, g, o;  // gate activations; g = tanh candidate
  Mat<S> c, tanh_c, h;
};

template <typename S>
struct LstmTrace {
  std::vector<LstmStep<S>> steps;
  const Mat<S>& final_hidden() const { return steps.back().h; }
};

template <typename S>
LstmStep<S> lstm_cell_forward(const Mat<S>& x, const Mat<S>& h_prev, const Mat<S>& c_prev,
                              const LstmParams<S>& p);

/// Runs the cell from h_0 = c_0 = 0 over inputs[0..T).
template <typename S>
LstmTrace<S> lstm_forward(std::span<const Mat<S>> inputs, const LstmParams<S>& p);

/// Backpropagation through time for a loss that depends on the final hidden
/// state only. Returns parameter gradients.
template <typename S>
LstmParams<S> lstm_backward(const LstmParams<S>& p, const LstmTrace<S>& trace,
                            const Mat<S>& d_final_hidden);

// ---------------------------------------------------------------- dense

template <typename S>
struct DenseParams {
  Mat<S> weight;  // out x in
  Vec<S> bias;

  static DenseParams zeros(Eigen::Index in, Eigen::Index out);
  void append_params(ParamList<S>& out, const std::string& prefix);
};

template <typename S>
Mat<S> dense_forward(const DenseParams<S>& p, const Mat<S>& x);

/// Accumulates weight/bias gradients into `grad` and returns dL/dx.
template <typename S>
Mat<S> dense_backward(const DenseParams<S>& p, const Mat<S>& x, const Mat<S>& dy,
                      DenseParams<S>& grad);

// ---------------------------------------------------------------- batch norm

enum class Mode { train, infer };

template <typename S>
struct BatchNormParams {
  Vec<S> gamma, beta;
  Vec<S> running_mean, running_var;
  S momentum = S(0.9);    // running <- momentum * running + (1 - momentum) * batch
  S epsilon = S(1e-5);

  static BatchNormParams identity(Eigen::Index features);
  /// Learnable tensors only (gamma, beta).
  void append_params(ParamList<S>& out, const std::string& prefix);
  /// Running statistics, persisted but not optimised.
  void append_state(ParamList<S>& out, const std::string& prefix);
};

template <typename S>
struct BatchNormCache {
  Mode mode = Mode::infer;
  Mat<S> x_hat;
  Vec<S> mean, var, inv_std;
};

/// Train mode normalises with the batch statistics (biased variance) and
/// requires at least two columns; infer mode uses the running statistics.
template <typename S>
Mat<S> batchnorm_forward(const BatchNormParams<S>& p, const Mat<S>& x, Mode mode,
                         BatchNormCache<S>& cache);

/// Folds the batch statistics of a train-mode cache into the running
/// estimates (unbiased variance).
template <typename S>
void batchnorm_update_running(BatchNormParams<S>& p, const BatchNormCache<S>& cache,
                              Eigen::Index batch_size);

template <typename S>
Mat<S> batchnorm_backward(const BatchNormParams<S>& p, const BatchNormCache<S>& cache,
                          const Mat<S>& dy, BatchNormParams<S>& grad);

// ---------------------------------------------------------------- activations

enum class Activation { relu, tanh, linear };

template <typename S>
Mat<S> activate(Activation a, const Mat<S>& z);
/// dL/dz given the activation output y = activate(z) and dL/dy.
template <typename S>
Mat<S> activate_backward(Activation a, const Mat<S>& y, const Mat<S>& dy);

// ---------------------------------------------------------------- output

/// Column-wise exp(z - max z) / sum.
template <typename S>
Mat<S> softmax(const Mat<S>& logits);

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean categorical cross-entropy -1/N sum_i log p[y_i, i]; probabilities are
/// C x N and clamped to >= 1e-12 before the log.
template <typename S>
S cross_entropy(const Mat<S>& probabilities, std::span<const int> labels);

/// d(mean cross-entropy)/d(logits) for softmax outputs: (p - onehot) / N.
template <typename S>
Mat<S> softmax_cross_entropy_grad(const Mat<S>& probabilities, std::span<const int> labels);

// ---------------------------------------------------------------- optimiser

struct AdamConfig {
  double learning_rate = 1e-4;
  double decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction and step-wise learning-rate decay
/// lr_t = lr / (1 + decay * t), t counted from 1.
template <typename S>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Updates every parameter in place. Throws TrainingError naming the first
  /// parameter with a non-finite gradient; nothing is modified in that case.
  void step(const ParamList<S>& params, const ParamList<S>& grads);

  std::int64_t step_count() const { return t_; }
  double learning_rate_at(std::int64_t t) const;
  const AdamConfig& config() const { return config_; }
  const std::vector<Mat<S>>& first_moments() const { return m_; }
  const std::vector<Mat<S>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<Mat<S>> m_;
  std::vector<Mat<S>> v_;
};

// ---------------------------------------------------------------- verification

/// Central differences (L(p + h) - L(p - h)) / 2h for every scalar of every
/// listed parameter. Parameters are restored exactly afterwards.
template <typename S>
std::vector<Mat<S>> finite_difference_gradient(const std::function<S()>& loss,
                                               const ParamList<S>& params, S step);

}  // namespace dancecls::nn
