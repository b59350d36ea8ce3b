#include <doctest.h>

#include <cmath>
#include <random>

#include "dancecls/classifier_net.hpp"
#include "dancecls/errors.hpp"
#include "gradcheck.hpp"

using namespace dancecls;
using namespace dancecls::nn;
using MatD = Mat<double>;

namespace {

NetworkShape tiny_shape(bool full, Activation act) {
  NetworkShape s;
  s.input_dim = 5;
  s.hidden_dim = 4;
  s.dense1 = 4;
  s.dense2 = 3;
  s.num_classes = 6;
  s.full_peephole = full;
  s.activation = act;
  return s;
}

std::vector<MatD> random_inputs(Eigen::Index d, Eigen::Index t, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<MatD> xs;
  for (Eigen::Index k = 0; k < t; ++k) {
    MatD x(d, n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    xs.push_back(x);
  }
  return xs;
}

}  // namespace

TEST_SUITE("classifier_net") {

TEST_CASE("parameter names cover every tensor") {
  auto p = ClassifierParams<double>::zeros(tiny_shape(false, Activation::relu));
  std::vector<std::string> names;
  for (const auto& v : p.params()) names.push_back(v.name);
  const std::vector<std::string> expect = {
      "lstm.w_xi", "lstm.w_xf", "lstm.w_xc", "lstm.w_xo", "lstm.w_hi",     "lstm.w_hf",
      "lstm.w_hc", "lstm.w_ho", "lstm.w_ci", "lstm.w_cf", "lstm.w_co",     "lstm.b_i",
      "lstm.b_f",  "lstm.b_c",  "lstm.b_o",  "dense1.weight", "dense1.bias", "bn1.gamma",
      "bn1.beta",  "dense2.weight", "dense2.bias", "bn2.gamma", "bn2.beta", "output.weight",
      "output.bias"};
  CHECK(names == expect);
  std::vector<std::string> state;
  for (const auto& v : p.state()) state.push_back(v.name);
  CHECK(state == std::vector<std::string>{"bn1.running_mean", "bn1.running_var", "bn2.running_mean",
                                          "bn2.running_var"});
}

TEST_CASE("full analytic gradient matches finite differences") {
  for (bool full : {false, true})
    for (Activation act : {Activation::relu, Activation::tanh, Activation::linear})
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = testing::classifier_gradient_check(tiny_shape(full, act), 3, 2, seed);
        INFO("full=" << full << " act=" << static_cast<int>(act) << " seed=" << seed << " worst " << r.worst);
        CHECK(r.max_rel < 1e-5);
      }
}

TEST_CASE("larger batches and longer sequences also agree") {
  const auto r = testing::classifier_gradient_check(tiny_shape(false, Activation::tanh), 6, 5, 7);
  INFO("worst " << r.worst);
  CHECK(r.max_rel < 1e-5);
}

TEST_CASE("output-layer gradient is the softmax residual") {
  auto p = testing::random_tiny_classifier(tiny_shape(false, Activation::relu), 4);
  auto xs = random_inputs(5, 3, 1, 5);
  for (auto& x : xs) x = x.replicate(1, 2).eval();  // duplicated samples
  const std::vector<int> labels = {2, 2};
  ClassifierCache<double> cache;
  const MatD probs = classifier_forward<double>(p, xs, Mode::train, cache);
  CHECK(probs.col(0) == probs.col(1));
  const MatD a2 = cache.a2;
  const auto g = classifier_backward<double>(p, cache, labels);
  MatD residual = probs;
  residual.row(2).array() -= 1.0;
  residual /= 2.0;
  CHECK((g.output.bias - residual.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((g.output.weight - residual * a2.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("backward is deterministic and consumes the cache") {
  auto p = testing::random_tiny_classifier(tiny_shape(true, Activation::relu), 6);
  const auto xs = random_inputs(5, 3, 4, 7);
  const std::vector<int> labels = {0, 3, 5, 1};
  ClassifierCache<double> c1, c2;
  classifier_forward<double>(p, xs, Mode::train, c1);
  classifier_forward<double>(p, xs, Mode::train, c2);
  auto g1 = classifier_backward<double>(p, c1, labels);
  auto g2 = classifier_backward<double>(p, c2, labels);
  const auto v1 = g1.params(), v2 = g2.params();
  for (std::size_t k = 0; k < v1.size(); ++k) CHECK(v1[k].map() == v2[k].map());
  CHECK_THROWS_AS(classifier_backward<double>(p, c1, labels), ContractError);
  ClassifierCache<double> empty;
  CHECK_THROWS_AS(classifier_backward<double>(p, empty, labels), ContractError);
  ClassifierCache<double> c3;
  classifier_forward<double>(p, xs, Mode::train, c3);
  const std::vector<int> short_labels = {0};
  CHECK_THROWS_AS(classifier_backward<double>(p, c3, short_labels), ContractError);
}

TEST_CASE("zero-weight model is exactly uniform") {
  NetworkShape s = tiny_shape(false, Activation::relu);
  auto p = ClassifierParams<float>::zeros(s);
  ClassifierCache<float> cache;
  std::vector<Mat<float>> xs(4, Mat<float>::Random(5, 3));
  const auto probs = classifier_forward<float>(p, xs, Mode::infer, cache);
  CHECK((probs.array() == 1.0f / 6.0f).all());
}

TEST_CASE("initialization policy") {
  NetworkShape s;
  s.input_dim = 75;
  s.hidden_dim = 64;
  s.dense1 = 16;
  s.dense2 = 8;
  ClassifierParams<float> p;
  p.shape = s;
  initialize(p, 99);
  const double lim_x = std::sqrt(6.0 / (75 + 64)), lim_h = std::sqrt(6.0 / 128.0);
  CHECK(p.lstm.w_xi.cwiseAbs().maxCoeff() <= lim_x);
  CHECK(p.lstm.w_xi.cwiseAbs().maxCoeff() > 0.9 * lim_x);
  CHECK(p.lstm.w_ho.cwiseAbs().maxCoeff() <= lim_h);
  CHECK(p.dense1.weight.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 80));
  CHECK(p.lstm.w_ci.isZero(0.0f));
  CHECK(p.lstm.w_cf.isZero(0.0f));
  CHECK(p.lstm.w_co.isZero(0.0f));
  CHECK(p.lstm.w_co.cols() == 1);
  CHECK((p.lstm.b_f.array() == 1.0f).all());
  CHECK(p.lstm.b_i.isZero(0.0f));
  CHECK(p.output.bias.isZero(0.0f));
  CHECK((p.bn1.gamma.array() == 1.0f).all());

  ClassifierParams<float> q;
  q.shape = s;
  initialize(q, 99);
  const auto a = p.params(), b = q.params();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].map() == b[k].map());

  s.full_peephole = true;
  ClassifierParams<float> f;
  f.shape = s;
  initialize(f, 1);
  CHECK(f.lstm.w_co.rows() == 64);
  CHECK(f.lstm.w_co.cols() == 64);
}

TEST_CASE("running statistics follow train-mode batches") {
  auto p = testing::random_tiny_classifier(tiny_shape(false, Activation::relu), 8);
  const auto xs = random_inputs(5, 3, 6, 9);
  ClassifierCache<double> cache;
  classifier_forward<double>(p, xs, Mode::train, cache);
  const MatD mean1 = cache.bn1.mean;
  update_running_statistics(p, cache);
  CHECK((p.bn1.running_mean - 0.1 * mean1).norm() < 1e-15);
}

TEST_CASE("float and double forward agree") {
  auto pd = testing::random_tiny_classifier(tiny_shape(false, Activation::relu), 10);
  const auto pf = pd.cast<float>();
  const auto xs = random_inputs(5, 4, 3, 11);
  std::vector<Mat<float>> xf;
  for (const auto& x : xs) xf.push_back(x.cast<float>());
  ClassifierCache<double> cd;
  ClassifierCache<float> cf;
  const MatD a = classifier_forward<double>(pd, xs, Mode::infer, cd);
  const Mat<float> b = classifier_forward<float>(pf, xf, Mode::infer, cf);
  CHECK((a - b.cast<double>()).cwiseAbs().maxCoeff() < 1e-5);
}

}  // TEST_SUITE
